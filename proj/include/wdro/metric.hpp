#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "wdro/errors.hpp"

namespace wdro {

using Vector = std::vector<double>;

enum class Norm { L1, L2, Linf };

inline Norm dual_of(Norm n) noexcept {
    switch (n) {
        case Norm::L1: return Norm::Linf;
        case Norm::Linf: return Norm::L1;
        case Norm::L2: break;
    }
    return Norm::L2;
}

inline double norm(std::span<const double> v, Norm kind) noexcept {
    double acc = 0.0;
    switch (kind) {
        case Norm::L1:
            for (double x : v) acc += std::abs(x);
            return acc;
        case Norm::L2:
            for (double x : v) acc += x * x;
            return std::sqrt(acc);
        case Norm::Linf:
            for (double x : v) acc = std::max(acc, std::abs(x));
            return acc;
    }
    return acc;
}

// ||(v, tail)|| on R^{m+1}.
inline double norm_with_tail(std::span<const double> v, double tail, Norm kind) noexcept {
    const double head = norm(v, kind);
    switch (kind) {
        case Norm::L1: return head + std::abs(tail);
        case Norm::L2: return std::hypot(head, tail);
        case Norm::Linf: return std::max(head, std::abs(tail));
    }
    return head;
}

// A subgradient of v -> ||v|| at v (zero vector at the origin).
inline Vector norm_subgradient(std::span<const double> v, Norm kind) {
    Vector g(v.size(), 0.0);
    switch (kind) {
        case Norm::L1:
            for (std::size_t k = 0; k < v.size(); ++k) g[k] = (v[k] > 0) - (v[k] < 0);
            break;
        case Norm::L2: {
            const double r = norm(v, Norm::L2);
            if (r > 0)
                for (std::size_t k = 0; k < v.size(); ++k) g[k] = v[k] / r;
            break;
        }
        case Norm::Linf: {
            if (v.empty()) break;
            std::size_t arg = 0;
            for (std::size_t k = 1; k < v.size(); ++k)
                if (std::abs(v[k]) > std::abs(v[arg])) arg = k;
            g[arg] = (v[arg] > 0) - (v[arg] < 0);
            break;
        }
    }
    return g;
}

// Subgradient of v -> ||(v, tail)|| restricted to the first m coordinates.
inline Vector norm_with_tail_subgradient(std::span<const double> v, double tail, Norm kind) {
    Vector g(v.size(), 0.0);
    switch (kind) {
        case Norm::L1:
            return norm_subgradient(v, Norm::L1);
        case Norm::L2: {
            const double r = norm_with_tail(v, tail, Norm::L2);
            if (r > 0)
                for (std::size_t k = 0; k < v.size(); ++k) g[k] = v[k] / r;
            return g;
        }
        case Norm::Linf:
            if (norm(v, Norm::Linf) > std::abs(tail)) return norm_subgradient(v, Norm::Linf);
            return g;
    }
    return g;
}

// max of ||theta|| over the Euclidean ball B(center, radius), in closed form.
inline double max_norm_over_l2_ball(std::span<const double> center, double radius, Norm kind) {
    switch (kind) {
        case Norm::L1:
            return norm(center, Norm::L1) + std::sqrt(static_cast<double>(center.size())) * radius;
        case Norm::L2:
        case Norm::Linf:
            return norm(center, kind) + radius;
    }
    return 0.0;
}

// max of ||(theta, tail)|| over theta in B(center, radius).
inline double max_norm_with_tail_over_l2_ball(std::span<const double> center, double tail,
                                              double radius, Norm kind) {
    const double head = max_norm_over_l2_ball(center, radius, kind);
    switch (kind) {
        case Norm::L1: return head + std::abs(tail);
        case Norm::L2: return std::hypot(head, tail);
        case Norm::Linf: return std::max(head, std::abs(tail));
    }
    return head;
}

inline Norm parse_norm(std::string_view s) {
    if (s == "l1" || s == "L1") return Norm::L1;
    if (s == "l2" || s == "L2") return Norm::L2;
    if (s == "linf" || s == "Linf" || s == "LINF") return Norm::Linf;
    throw DomainError("unknown norm '" + std::string(s) + "' (expected l1, l2 or linf)");
}

inline std::string to_string(Norm n) {
    switch (n) {
        case Norm::L1: return "l1";
        case Norm::L2: return "l2";
        case Norm::Linf: return "linf";
    }
    return "l2";
}

// Feature-label metric d(a, b) = ||x_a - x_b|| + (gamma / 2) |y_a - y_b| with
// Wasserstein order p carried alongside.
struct MetricSpec {
    Norm feature_norm = Norm::L2;
    double gamma = 7.0;
    int p = 1;

    MetricSpec() = default;
    MetricSpec(Norm n, double g, int order = 1) : feature_norm(n), gamma(g), p(order) {
        if (!(gamma > 0.0)) throw DomainError("metric gamma must be positive");
        if (p < 1) throw DomainError("Wasserstein order p must be >= 1");
    }

    double feature_distance(std::span<const double> xa, std::span<const double> xb) const {
        if (xa.size() != xb.size()) throw DomainError("feature dimension mismatch");
        double acc = 0.0;
        switch (feature_norm) {
            case Norm::L1:
                for (std::size_t k = 0; k < xa.size(); ++k) acc += std::abs(xa[k] - xb[k]);
                return acc;
            case Norm::L2:
                for (std::size_t k = 0; k < xa.size(); ++k) acc += (xa[k] - xb[k]) * (xa[k] - xb[k]);
                return std::sqrt(acc);
            case Norm::Linf:
                for (std::size_t k = 0; k < xa.size(); ++k) acc = std::max(acc, std::abs(xa[k] - xb[k]));
                return acc;
        }
        return acc;
    }

    double distance(std::span<const double> xa, double ya, std::span<const double> xb, double yb) const {
        return feature_distance(xa, xb) + 0.5 * gamma * std::abs(ya - yb);
    }
};

}  // namespace wdro
