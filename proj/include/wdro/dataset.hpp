#pragma once

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <istream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "wdro/errors.hpp"
#include "wdro/metric.hpp"
#include "wdro/random.hpp"

namespace wdro {

enum class Task { Classification, Regression };

inline std::string to_string(Task t) {
    return t == Task::Classification ? "classification" : "regression";
}

struct LabeledSample {
    Vector x;
    double y = 0.0;
};

// Ordered collection of samples sharing one feature dimension. Sample i is
// the Dirac mass at index i of the empirical distribution.
class Dataset {
public:
    Dataset(std::vector<LabeledSample> samples, Task task) : samples_(std::move(samples)), task_(task) {
        if (samples_.empty()) throw ParseError("no samples", 0);
        dim_ = samples_.front().x.size();
        for (const auto& s : samples_) {
            if (s.x.size() != dim_) throw DomainError("samples have inconsistent feature dimension");
            if (task_ == Task::Classification && s.y != 1.0 && s.y != -1.0)
                throw TaskError("classification labels must be -1 or +1");
        }
    }

    std::size_t size() const noexcept { return samples_.size(); }
    std::size_t dim() const noexcept { return dim_; }
    Task task() const noexcept { return task_; }

    const LabeledSample& operator[](std::size_t i) const { return samples_[i]; }
    const std::vector<LabeledSample>& samples() const noexcept { return samples_; }

    auto begin() const noexcept { return samples_.begin(); }
    auto end() const noexcept { return samples_.end(); }

    friend bool operator==(const Dataset& a, const Dataset& b) {
        if (a.task_ != b.task_ || a.dim_ != b.dim_ || a.size() != b.size()) return false;
        for (std::size_t i = 0; i < a.size(); ++i)
            if (a[i].y != b[i].y || a[i].x != b[i].x) return false;
        return true;
    }

private:
    std::vector<LabeledSample> samples_;
    std::size_t dim_ = 0;
    Task task_;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

inline bool parse_double(std::string_view tok, double& out) {
    tok = trim(tok);
    if (tok.empty()) return false;
    if (tok.front() == '+') tok.remove_prefix(1);
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), out);
    return res.ec == std::errc() && res.ptr == tok.data() + tok.size();
}

inline std::vector<std::string> read_lines(std::istream& in) {
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
}

// Ascending pair of distinct raw labels maps to (-1, +1); labels that are
// already in {-1, +1} are kept.
inline void binarize_labels(std::vector<LabeledSample>& samples) {
    std::set<double> distinct;
    for (const auto& s : samples) distinct.insert(s.y);
    const bool already_signed =
        std::all_of(distinct.begin(), distinct.end(), [](double v) { return v == 1.0 || v == -1.0; });
    if (already_signed) return;
    if (distinct.size() > 2)
        throw TaskError("classification data has " + std::to_string(distinct.size()) +
                        " distinct labels (expected 2)");
    if (distinct.size() == 1) throw TaskError("cannot infer a binary label mapping from a single label");
    const double low = *distinct.begin();
    for (auto& s : samples) s.y = (s.y == low) ? -1.0 : 1.0;
}

inline std::string format_real(double v, int digits = 17) {
    std::ostringstream os;
    os << std::setprecision(digits) << v;
    return os.str();
}

}  // namespace detail

// LIBSVM / SVMlight text: "<label> <index>:<value> ...", 1-based indices.
// Missing indices are zero; dim is the largest index seen.
inline Dataset parse_libsvm(std::istream& in, Task task) {
    std::vector<std::pair<double, std::vector<std::pair<std::size_t, double>>>> rows;
    std::size_t dim = 0;
    std::size_t lineno = 0;
    std::string line;
    while (std::getline(in, line)) {
        ++lineno;
        std::string_view view = line;
        if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
        view = detail::trim(view);
        if (view.empty()) continue;

        std::istringstream tokens{std::string(view)};
        std::string tok;
        tokens >> tok;
        double label = 0.0;
        if (!detail::parse_double(tok, label)) throw ParseError("malformed label '" + tok + "'", lineno);

        std::vector<std::pair<std::size_t, double>> feats;
        std::size_t column = 1;
        while (tokens >> tok) {
            ++column;
            const auto colon = tok.find(':');
            if (colon == std::string::npos) throw ParseError("expected index:value, got '" + tok + "'", lineno, column);
            std::size_t index = 0;
            const auto idx = std::string_view(tok).substr(0, colon);
            const auto res = std::from_chars(idx.data(), idx.data() + idx.size(), index);
            if (res.ec != std::errc() || res.ptr != idx.data() + idx.size() || index == 0)
                throw ParseError("invalid feature index '" + std::string(idx) + "'", lineno, column);
            double value = 0.0;
            if (!detail::parse_double(std::string_view(tok).substr(colon + 1), value))
                throw ParseError("invalid feature value in '" + tok + "'", lineno, column);
            feats.emplace_back(index, value);
            dim = std::max(dim, index);
        }
        rows.emplace_back(label, std::move(feats));
    }
    if (rows.empty()) throw ParseError("no samples", 0);

    std::vector<LabeledSample> samples;
    samples.reserve(rows.size());
    for (auto& [label, feats] : rows) {
        LabeledSample s{Vector(dim, 0.0), label};
        for (auto [index, value] : feats) s.x[index - 1] = value;
        samples.push_back(std::move(s));
    }
    if (task == Task::Classification) detail::binarize_labels(samples);
    return Dataset(std::move(samples), task);
}

inline Dataset parse_libsvm(std::string_view text, Task task) {
    std::istringstream in{std::string(text)};
    return parse_libsvm(in, task);
}

// Nonzero features plus the last coordinate, so the dimension survives a
// round trip. Values carry 17 significant digits.
inline std::string write_libsvm(const Dataset& ds) {
    std::ostringstream os;
    for (const auto& s : ds) {
        os << detail::format_real(s.y);
        for (std::size_t k = 0; k < s.x.size(); ++k) {
            if (s.x[k] != 0.0 || k + 1 == s.x.size())
                os << ' ' << (k + 1) << ':' << detail::format_real(s.x[k]);
        }
        os << '\n';
    }
    return os.str();
}

// Numeric CSV; `label_column` is 0-based. Remaining columns become features in
// file order.
inline Dataset parse_csv(std::istream& in, std::size_t label_column, bool header, Task task) {
    std::vector<LabeledSample> samples;
    std::size_t width = 0;
    std::size_t lineno = 0;
    std::string line;
    bool skipped_header = !header;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::trim(line).empty()) continue;
        if (!skipped_header) {
            skipped_header = true;
            continue;
        }
        std::vector<double> cells;
        std::string_view rest = line;
        std::size_t column = 0;
        while (true) {
            ++column;
            const auto comma = rest.find(',');
            const auto cell = rest.substr(0, comma);
            double v = 0.0;
            if (!detail::parse_double(cell, v))
                throw ParseError("non-numeric cell '" + std::string(detail::trim(cell)) + "'", lineno, column);
            cells.push_back(v);
            if (comma == std::string_view::npos) break;
            rest.remove_prefix(comma + 1);
        }
        if (width == 0) {
            width = cells.size();
            if (label_column >= width)
                throw ParseError("label column " + std::to_string(label_column) + " out of range", lineno);
        } else if (cells.size() != width) {
            throw ParseError("ragged row: expected " + std::to_string(width) + " fields, got " +
                                 std::to_string(cells.size()),
                             lineno);
        }
        LabeledSample s;
        s.y = cells[label_column];
        s.x.reserve(width - 1);
        for (std::size_t k = 0; k < width; ++k)
            if (k != label_column) s.x.push_back(cells[k]);
        samples.push_back(std::move(s));
    }
    if (samples.empty()) throw ParseError("no samples", 0);
    if (task == Task::Classification) detail::binarize_labels(samples);
    return Dataset(std::move(samples), task);
}

inline Dataset parse_csv(std::string_view text, std::size_t label_column, bool header, Task task) {
    std::istringstream in{std::string(text)};
    return parse_csv(in, label_column, header, task);
}

// Per-coordinate (min, range) of a min-max normalization. range == 0 marks a
// constant coordinate, which maps to 0.
struct ScalingRecord {
    Vector min;
    Vector range;

    Dataset apply(const Dataset& ds) const {
        if (ds.dim() != min.size()) throw DomainError("scaling record dimension mismatch");
        std::vector<LabeledSample> out(ds.samples());
        for (auto& s : out)
            for (std::size_t k = 0; k < s.x.size(); ++k)
                s.x[k] = range[k] > 0.0 ? (s.x[k] - min[k]) / range[k] : 0.0;
        return Dataset(std::move(out), ds.task());
    }

    std::string serialize() const {
        std::ostringstream os;
        for (std::size_t k = 0; k < min.size(); ++k)
            os << detail::format_real(min[k]) << ' ' << detail::format_real(range[k]) << '\n';
        return os.str();
    }

    static ScalingRecord parse(std::string_view text) {
        ScalingRecord rec;
        std::istringstream in{std::string(text)};
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (detail::trim(line).empty()) continue;
            std::istringstream fields(line);
            std::string a, b, extra;
            double lo = 0.0, r = 0.0;
            if (!(fields >> a >> b) || (fields >> extra) || !detail::parse_double(a, lo) ||
                !detail::parse_double(b, r))
                throw ParseError("scaling record line must be 'min range'", lineno);
            rec.min.push_back(lo);
            rec.range.push_back(r);
        }
        return rec;
    }
};

inline std::pair<Dataset, ScalingRecord> normalize(const Dataset& ds) {
    ScalingRecord rec{Vector(ds.dim(), 0.0), Vector(ds.dim(), 0.0)};
    for (std::size_t k = 0; k < ds.dim(); ++k) {
        double lo = ds[0].x[k], hi = ds[0].x[k];
        for (const auto& s : ds) {
            lo = std::min(lo, s.x[k]);
            hi = std::max(hi, s.x[k]);
        }
        rec.min[k] = lo;
        rec.range[k] = hi - lo;
    }
    return {rec.apply(ds), rec};
}

// Adds i.i.d. N(0, stddev^2) to every feature coordinate.
inline Dataset perturb_gaussian(const Dataset& ds, double stddev, std::uint64_t seed) {
    if (stddev < 0.0) throw DomainError("noise standard deviation must be nonnegative");
    std::vector<LabeledSample> out(ds.samples());
    if (stddev == 0.0) return Dataset(std::move(out), ds.task());
    Rng rng = make_rng(seed, {0x6e6f697365ULL});
    std::normal_distribution<double> noise(0.0, stddev);
    for (auto& s : out)
        for (double& v : s.x) v += noise(rng);
    return Dataset(std::move(out), ds.task());
}

// Negates the labels of exactly floor(rate * n) distinct, uniformly chosen samples.
inline Dataset flip_labels(const Dataset& ds, double rate, std::uint64_t seed) {
    if (ds.task() != Task::Classification) throw TaskError("label flipping requires a classification dataset");
    if (!(rate >= 0.0 && rate <= 1.0)) throw DomainError("flip rate must lie in [0, 1]");
    std::vector<LabeledSample> out(ds.samples());
    const auto count = static_cast<std::size_t>(std::floor(rate * static_cast<double>(ds.size())));
    Rng rng = make_rng(seed, {0x666c6970ULL});
    for (std::size_t i : sample_without_replacement(ds.size(), count, rng)) out[i].y = -out[i].y;
    return Dataset(std::move(out), ds.task());
}

// Two unit-variance isotropic Gaussian clusters centred at +-(separation/2) e_1.
// Even indices belong to the +1 cluster, so the classes are balanced up to one.
inline Dataset synth_blobs(std::size_t n, std::size_t m, double separation, double label_noise,
                           std::uint64_t seed) {
    if (n < 2 || m < 1) throw DomainError("synth_blobs needs n >= 2 and m >= 1");
    Rng rng = make_rng(seed, {0x626c6f6273ULL});
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<LabeledSample> samples(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double label = (i % 2 == 0) ? 1.0 : -1.0;
        samples[i].y = label;
        samples[i].x.resize(m);
        for (std::size_t k = 0; k < m; ++k) samples[i].x[k] = gauss(rng);
        samples[i].x[0] += label * separation / 2.0;
    }
    Dataset clean(std::move(samples), Task::Classification);
    return flip_labels(clean, label_noise, substream(seed, {0x6e6f697379ULL}));
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

inline void write_file(const std::string& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << content;
    if (!out) throw IoError("write to '" + path + "' failed");
}

}  // namespace wdro
