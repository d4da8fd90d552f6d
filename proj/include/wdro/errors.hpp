#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace wdro {

// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input text. line/column are 1-based; 0 means "not applicable".
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line, std::size_t column = 0)
        : Error(format(what, line, column)), line_(line), column_(column) {}

    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }

private:
    static std::string format(const std::string& what, std::size_t line, std::size_t column) {
        std::string msg = what;
        if (line > 0) {
            msg += " (line " + std::to_string(line);
            if (column > 0) msg += ", column " + std::to_string(column);
            msg += ")";
        }
        return msg;
    }

    std::size_t line_;
    std::size_t column_;
};

// Operation not valid for the dataset's task (classification vs regression).
class TaskError : public Error {
public:
    using Error::Error;
};

// File could not be opened or written.
class IoError : public Error {
public:
    using Error::Error;
};

// Numerical precondition violated, e.g. lambda below kappa(theta) or sigma <= 0.
class DomainError : public Error {
public:
    using Error::Error;
};

// Requested quantity is not available for this loss model or Wasserstein order.
class UnsupportedError : public Error {
public:
    using Error::Error;
};

// Coreset budget cannot cover every nonempty grid cell.
class BudgetError : public Error {
public:
    BudgetError(const std::string& what, std::size_t minimum_budget)
        : Error(what), minimum_budget_(minimum_budget) {}

    std::size_t minimum_budget() const noexcept { return minimum_budget_; }

private:
    std::size_t minimum_budget_;
};

}  // namespace wdro
