#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "wdro/dataset.hpp"
#include "wdro/losses.hpp"
#include "wdro/random.hpp"

namespace wdro::testing {

// Small generators for property tests. Every draw is a pure function of the
// Rng state, so a failing case reproduces from its seed.
struct Gen {
    explicit Gen(std::uint64_t seed) : rng(make_rng(seed)) {}

    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
    double normal(double sd = 1.0) { return std::normal_distribution<double>(0.0, sd)(rng); }
    std::size_t index(std::size_t lo, std::size_t hi) { return std::uniform_int_distribution<std::size_t>(lo, hi)(rng); }
    double sign() { return index(0, 1) == 0 ? -1.0 : 1.0; }

    Vector vec(std::size_t m, double sd = 1.0) {
        Vector v(m);
        for (double& x : v) x = normal(sd);
        return v;
    }

    Vector unit_box(std::size_t m) {
        Vector v(m);
        for (double& x : v) x = uniform(0.0, 1.0);
        return v;
    }

    Norm norm() {
        const Norm all[] = {Norm::L1, Norm::L2, Norm::Linf};
        return all[index(0, 2)];
    }

    Dataset classification(std::size_t n, std::size_t m, double sd = 1.0) {
        std::vector<LabeledSample> s(n);
        for (auto& v : s) {
            v.y = sign();
            v.x = vec(m, sd);
            v.x[0] += v.y;
        }
        return Dataset(std::move(s), Task::Classification);
    }

    Dataset regression(std::size_t n, std::size_t m, double sd = 1.0) {
        std::vector<LabeledSample> s(n);
        for (auto& v : s) {
            v.x = vec(m, sd);
            v.y = v.x[0] - 0.5 * v.x[m - 1] + normal(0.3);
        }
        return Dataset(std::move(s), Task::Regression);
    }

    Rng rng;
};

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace wdro::testing
