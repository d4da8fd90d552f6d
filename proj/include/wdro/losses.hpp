#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <string_view>

#include "wdro/dataset.hpp"
#include "wdro/errors.hpp"
#include "wdro/metric.hpp"

namespace wdro {

enum class LossKind { SvmHinge, Logistic, Huber, HypercubeSvm };

// A loss together with the transport metric it is robustified under. The dual
// oracles below are closed forms for Wasserstein order p = 1.
struct LossModel {
    LossKind kind = LossKind::SvmHinge;
    MetricSpec metric;
    double delta = 1.0;  // Huber threshold
    double side = 1.0;   // hypercube side length l

    static LossModel svm(MetricSpec m) { return {LossKind::SvmHinge, m, 1.0, 1.0}; }
    static LossModel logistic(MetricSpec m) { return {LossKind::Logistic, m, 1.0, 1.0}; }
    static LossModel huber(double delta, MetricSpec m) {
        if (!(delta > 0.0)) throw DomainError("Huber delta must be positive");
        return {LossKind::Huber, m, delta, 1.0};
    }
    static LossModel hypercube_svm(double side, MetricSpec m) {
        if (!(side > 0.0)) throw DomainError("hypercube side length must be positive");
        return {LossKind::HypercubeSvm, m, 1.0, side};
    }

    bool is_regression() const noexcept { return kind == LossKind::Huber; }
    bool has_exact_oracle() const noexcept { return kind != LossKind::HypercubeSvm; }
    Task task() const noexcept { return is_regression() ? Task::Regression : Task::Classification; }
};

// "svm", "logistic", "huber:<delta>" or "hypercube-svm:<l>".
inline LossModel parse_loss(std::string_view spec, MetricSpec metric) {
    const auto colon = spec.find(':');
    const auto name = spec.substr(0, colon);
    auto param = [&](const char* what) {
        double v = 0.0;
        if (colon == std::string_view::npos || !detail::parse_double(spec.substr(colon + 1), v))
            throw DomainError(std::string("loss '") + std::string(name) + "' needs a numeric " + what);
        return v;
    };
    if (name == "svm" && colon == std::string_view::npos) return LossModel::svm(metric);
    if (name == "logistic" && colon == std::string_view::npos) return LossModel::logistic(metric);
    if (name == "huber") return LossModel::huber(param("delta"), metric);
    if (name == "hypercube-svm") return LossModel::hypercube_svm(param("side length"), metric);
    throw DomainError("unknown loss '" + std::string(spec) +
                      "' (expected svm, logistic, huber:<delta> or hypercube-svm:<l>)");
}

inline std::string to_string(const LossModel& model) {
    switch (model.kind) {
        case LossKind::SvmHinge: return "svm";
        case LossKind::Logistic: return "logistic";
        case LossKind::Huber: return "huber:" + detail::format_real(model.delta);
        case LossKind::HypercubeSvm: return "hypercube-svm:" + detail::format_real(model.side);
    }
    return "svm";
}

// Output of the Moreau-Yosida oracle h(theta, lambda, xi).
struct DualOracleOutput {
    double value = 0.0;
    Vector subgrad_theta;
    // 0: loss at the sample itself; 1: label-flipped branch (classification only).
    int active_branch = 0;
};

namespace detail {

inline double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw DomainError("dimension mismatch between theta and x");
    double acc = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) acc += a[k] * b[k];
    return acc;
}

inline double hinge(double z) noexcept { return std::max(0.0, 1.0 - z); }
inline double hinge_slope(double z) noexcept { return z < 1.0 ? -1.0 : 0.0; }

inline double logloss(double z) noexcept { return std::log1p(std::exp(-std::abs(z))) + std::max(0.0, -z); }
inline double logloss_slope(double z) noexcept {
    if (z >= 0.0) {
        const double e = std::exp(-z);
        return -e / (1.0 + e);
    }
    return -1.0 / (1.0 + std::exp(z));
}

inline double huber(double r, double delta) noexcept {
    const double a = std::abs(r);
    return a <= delta ? 0.5 * r * r : delta * (a - 0.5 * delta);
}
inline double huber_slope(double r, double delta) noexcept {
    if (std::abs(r) <= delta) return r;
    return r > 0 ? delta : -delta;
}

// Margin function L and its derivative for the classification losses.
inline double margin_loss(LossKind kind, double z) noexcept {
    return kind == LossKind::Logistic ? logloss(z) : hinge(z);
}
inline double margin_slope(LossKind kind, double z) noexcept {
    return kind == LossKind::Logistic ? logloss_slope(z) : hinge_slope(z);
}

inline bool below_kappa(double lambda, double kappa) noexcept {
    return lambda < kappa - 1e-9 * std::max(1.0, kappa);
}

}  // namespace detail

inline double loss_value(const LossModel& model, std::span<const double> theta, std::span<const double> x,
                         double y) {
    const double t = detail::dot(theta, x);
    if (model.kind == LossKind::Huber) return detail::huber(t - y, model.delta);
    return detail::margin_loss(model.kind, y * t);
}

inline double loss_value(const LossModel& model, std::span<const double> theta, const LabeledSample& s) {
    return loss_value(model, theta, s.x, s.y);
}

inline void require_order_one(const LossModel& model) {
    if (model.metric.p != 1)
        throw UnsupportedError("loss oracles are only available for Wasserstein order p = 1 (got p = " +
                               std::to_string(model.metric.p) + ")");
}

// Asymptotic growth rate kappa(theta); h is infinite for lambda below it.
inline double kappa(const LossModel& model, std::span<const double> theta) {
    require_order_one(model);
    const Norm dual = dual_of(model.metric.feature_norm);
    switch (model.kind) {
        case LossKind::SvmHinge:
        case LossKind::Logistic: return norm(theta, dual);
        case LossKind::Huber: return model.delta * norm_with_tail(theta, -1.0, dual);
        case LossKind::HypercubeSvm: return 0.0;
    }
    return 0.0;
}

// A subgradient of theta -> kappa(theta).
inline Vector kappa_subgradient(const LossModel& model, std::span<const double> theta) {
    require_order_one(model);
    const Norm dual = dual_of(model.metric.feature_norm);
    switch (model.kind) {
        case LossKind::SvmHinge:
        case LossKind::Logistic: return norm_subgradient(theta, dual);
        case LossKind::Huber: {
            Vector g = norm_with_tail_subgradient(theta, -1.0, dual);
            for (double& v : g) v *= model.delta;
            return g;
        }
        case LossKind::HypercubeSvm: break;
    }
    return Vector(theta.size(), 0.0);
}

// Growth rate C(theta) with loss <= C(theta) (1 + d^p(xi, xi0)).
inline double growth_c(const LossModel& model, std::span<const double> theta) {
    require_order_one(model);
    if (model.kind == LossKind::HypercubeSvm) return norm(theta, dual_of(model.metric.feature_norm));
    return kappa(model, theta);
}

// max of C(theta) over the Euclidean ball B(center, radius).
inline double max_growth_c_over_ball(const LossModel& model, std::span<const double> center, double radius) {
    require_order_one(model);
    const Norm dual = dual_of(model.metric.feature_norm);
    if (model.kind == LossKind::Huber)
        return model.delta * max_norm_with_tail_over_l2_ball(center, -1.0, radius, dual);
    return max_norm_over_l2_ball(center, radius, dual);
}

// Bound R on the p-th power of the transport distance to a maximiser of h.
inline double r_bound(const LossModel& model, std::size_t dim) {
    const double gamma = model.metric.gamma;
    switch (model.kind) {
        case LossKind::SvmHinge:
        case LossKind::Logistic: return gamma;
        case LossKind::Huber: return 0.0;
        case LossKind::HypercubeSvm:
            return gamma + model.side * std::pow(static_cast<double>(dim), 1.0 / model.metric.p);
    }
    return 0.0;
}

namespace detail {

// h without the domain check; caller guarantees lambda >= kappa(theta).
inline double h_value_unchecked(const LossModel& model, double theta_dot_x, double y, double lambda) {
    if (model.kind == LossKind::Huber) return huber(theta_dot_x - y, model.delta);
    const double z = y * theta_dot_x;
    return std::max(margin_loss(model.kind, z), margin_loss(model.kind, -z) - lambda * model.metric.gamma);
}

}  // namespace detail

// Closed-form Moreau-Yosida regularisation
//   h(theta, lambda, xi) = sup_zeta { loss(theta, zeta) - lambda d(zeta, xi) }
// with a theta-subgradient of the active branch. Ties pick the unflipped branch.
inline DualOracleOutput h_exact(const LossModel& model, std::span<const double> theta, double lambda,
                                std::span<const double> x, double y) {
    if (!model.has_exact_oracle())
        throw UnsupportedError("no closed-form h for hypercube-svm; use the lower/upper bounds");
    const double k = kappa(model, theta);
    if (detail::below_kappa(lambda, k))
        throw DomainError("lambda " + detail::format_real(lambda) + " is below kappa(theta) = " +
                          detail::format_real(k) + "; h is unbounded there");
    const double t = detail::dot(theta, x);
    DualOracleOutput out;
    out.subgrad_theta.assign(x.begin(), x.end());
    if (model.kind == LossKind::Huber) {
        out.value = detail::huber(t - y, model.delta);
        const double slope = detail::huber_slope(t - y, model.delta);
        for (double& g : out.subgrad_theta) g *= slope;
        return out;
    }
    const double z = y * t;
    const double keep = detail::margin_loss(model.kind, z);
    const double flip = detail::margin_loss(model.kind, -z) - lambda * model.metric.gamma;
    double coeff = 0.0;
    if (keep >= flip) {
        out.value = keep;
        coeff = detail::margin_slope(model.kind, z) * y;
    } else {
        out.value = flip;
        out.active_branch = 1;
        coeff = -detail::margin_slope(model.kind, -z) * y;
    }
    for (double& g : out.subgrad_theta) g *= coeff;
    return out;
}

inline DualOracleOutput h_exact(const LossModel& model, std::span<const double> theta, double lambda,
                                const LabeledSample& s) {
    return h_exact(model, theta, lambda, s.x, s.y);
}

// d h / d lambda along the active branch (right derivative).
inline double h_lambda_slope(const LossModel& model, const DualOracleOutput& out) noexcept {
    return out.active_branch == 1 ? -model.metric.gamma : 0.0;
}

// Lower oracle a_i(theta, lambda).
inline double h_lower(const LossModel& model, std::span<const double> theta, double lambda,
                      std::span<const double> x, double y) {
    if (model.kind == LossKind::HypercubeSvm) return loss_value(model, theta, x, y);
    return h_exact(model, theta, lambda, x, y).value;
}

// Upper oracle b_i(theta, lambda). For the hypercube SVM this is the objective
// of an explicit feasible point of the inner minimisation; it bounds h from
// above when x lies in [0, l]^m.
inline double h_upper(const LossModel& model, std::span<const double> theta, double lambda,
                      std::span<const double> x, double y) {
    if (model.kind != LossKind::HypercubeSvm) return h_exact(model, theta, lambda, x, y).value;
    if (theta.size() != x.size()) throw DomainError("dimension mismatch between theta and x");
    if (lambda < 0.0) throw DomainError("lambda must be nonnegative");

    const double dual_norm = norm(theta, dual_of(model.metric.feature_norm));
    const double l = model.side;
    double plus = 1.0;   // 1 + l e'z+ + x'p+
    double minus = 1.0;  // 1 + l e'z- + x'p-
    if (dual_norm > lambda) {
        const double shrink = lambda / dual_norm;
        for (std::size_t k = 0; k < theta.size(); ++k) {
            const double p_plus = -shrink * y * theta[k];
            const double z_plus = std::max((-y + shrink * y) * theta[k], 0.0);
            const double z_minus = std::max((y - shrink * y) * theta[k], 0.0);
            plus += l * z_plus + x[k] * p_plus;
            minus += l * z_minus - x[k] * p_plus;
        }
    } else {
        for (std::size_t k = 0; k < theta.size(); ++k) {
            plus -= x[k] * y * theta[k];
            minus += x[k] * y * theta[k];
        }
    }
    minus -= model.metric.gamma * lambda;
    return std::max({0.0, plus, minus});
}

inline double h_lower(const LossModel& model, std::span<const double> theta, double lambda,
                      const LabeledSample& s) {
    return h_lower(model, theta, lambda, s.x, s.y);
}
inline double h_upper(const LossModel& model, std::span<const double> theta, double lambda,
                      const LabeledSample& s) {
    return h_upper(model, theta, lambda, s.x, s.y);
}

// Lipschitz constant of theta -> loss(theta, xi_i) for this sample
// (||x||_2 sup|L'| for margin losses, delta ||(x, -1)||_2 for Huber).
inline double sample_lipschitz(const LossModel& model, std::span<const double> x) {
    if (model.kind == LossKind::Huber) return model.delta * norm_with_tail(x, -1.0, Norm::L2);
    return norm(x, Norm::L2);
}

// Empirical Lipschitz constant over the dataset (max of sample_lipschitz).
inline double lipschitz_estimate(const LossModel& model, const Dataset& ds) {
    double best = 0.0;
    for (const auto& s : ds) best = std::max(best, sample_lipschitz(model, s.x));
    return best;
}

}  // namespace wdro
