#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "wdro/coreset.hpp"
#include "wdro/dataset.hpp"
#include "wdro/errors.hpp"
#include "wdro/golden_section.hpp"
#include "wdro/losses.hpp"

namespace wdro {

// A WDRO instance: data, loss, Wasserstein radius sigma, the parameter ball
// from the anchors and an optional coreset (absent means uniform 1/n).
class WdroProblem {
public:
    WdroProblem(const Dataset& data, LossModel model, double sigma, Anchors anchors,
                std::optional<Coreset> weights = std::nullopt)
        : data_(&data), model_(model), sigma_(sigma), anchors_(std::move(anchors)), weights_(std::move(weights)) {
        if (!(sigma_ > 0.0)) throw DomainError("sigma must be positive");
        if (anchors_.theta_anc.empty()) anchors_.theta_anc.assign(data.dim(), 0.0);
        if (anchors_.theta_anc.size() != data.dim()) throw DomainError("theta_anc dimension does not match the data");
        if (weights_) {
            if (weights_->indices.size() != weights_->weights.size())
                throw DomainError("coreset indices and weights differ in length");
            for (std::size_t k = 0; k < weights_->indices.size(); ++k) {
                if (weights_->indices[k] >= data.size()) throw DomainError("coreset index out of range");
                if (weights_->weights[k] < 0.0) throw DomainError("coreset weights must be nonnegative");
                support_.emplace_back(weights_->indices[k], weights_->weights[k]);
            }
        } else {
            const double w = 1.0 / static_cast<double>(data.size());
            support_.reserve(data.size());
            for (std::size_t i = 0; i < data.size(); ++i) support_.emplace_back(i, w);
        }
    }

    const Dataset& data() const noexcept { return *data_; }
    const LossModel& model() const noexcept { return model_; }
    double sigma() const noexcept { return sigma_; }
    const Anchors& anchors() const noexcept { return anchors_; }
    const std::optional<Coreset>& weights() const noexcept { return weights_; }
    // (sample index, mass) pairs with nonzero mass.
    const std::vector<std::pair<std::size_t, double>>& support() const noexcept { return support_; }

    double sigma_p() const { return std::pow(sigma_, model_.metric.p); }

    // Same problem, different radius.
    WdroProblem with_sigma(double sigma) const { return WdroProblem(*data_, model_, sigma, anchors_, weights_); }

private:
    const Dataset* data_;
    LossModel model_;
    double sigma_;
    Anchors anchors_;
    std::optional<Coreset> weights_;
    std::vector<std::pair<std::size_t, double>> support_;
};

struct RiskResult {
    double risk = 0.0;
    double lambda_star = 0.0;
    bool at_boundary = false;
    double kappa = 0.0;
    double tau = 0.0;
};

struct TrainResult {
    Vector theta;
    double risk = 0.0;
    double lambda_star = 0.0;
    std::size_t iterations = 0;
    std::vector<std::pair<std::size_t, double>> trajectory;
};

namespace detail {

inline void require_exact(const LossModel& model) {
    if (!model.has_exact_oracle())
        throw UnsupportedError("hypercube-svm has no closed-form h; risk evaluation and training are unavailable");
}

inline void check_lambda(const LossModel& model, std::span<const double> theta, double lambda) {
    const double k = kappa(model, theta);
    if (below_kappa(lambda, k))
        throw DomainError("lambda " + format_real(lambda) + " is below kappa(theta) = " + format_real(k));
}

// Weighted sum of h over the support; the domain check is done by the caller.
inline double eval_h_sum(const WdroProblem& problem, double lambda, std::span<const double> dots) {
    double acc = 0.0;
    const auto& support = problem.support();
    for (std::size_t k = 0; k < support.size(); ++k) {
        const auto& s = problem.data()[support[k].first];
        acc += support[k].second * h_value_unchecked(problem.model(), dots[k], s.y, lambda);
    }
    return acc;
}

inline Vector support_dots(const WdroProblem& problem, std::span<const double> theta) {
    const auto& support = problem.support();
    Vector dots(support.size());
    for (std::size_t k = 0; k < support.size(); ++k) dots[k] = dot(theta, problem.data()[support[k].first].x);
    return dots;
}

}  // namespace detail

// H(theta, lambda) = sum_i w_i h(theta, lambda, xi_i).
inline double eval_H(const WdroProblem& problem, std::span<const double> theta, double lambda) {
    detail::require_exact(problem.model());
    if (theta.size() != problem.data().dim()) throw DomainError("theta dimension does not match the data");
    detail::check_lambda(problem.model(), theta, lambda);
    return detail::eval_h_sum(problem, lambda, detail::support_dots(problem, theta));
}

// Worst-case risk inf_{lambda} { lambda sigma^p + H(theta, lambda) }, searched
// over [kappa(theta), tau(theta)] by golden section. The bracket midpoint is
// compared against both interval endpoints and the best of the three is kept.
inline RiskResult worst_case_risk(const WdroProblem& problem, std::span<const double> theta) {
    const auto& model = problem.model();
    detail::require_exact(model);
    if (theta.size() != problem.data().dim()) throw DomainError("theta dimension does not match the data");

    RiskResult r;
    r.kappa = kappa(model, theta);
    r.tau = std::max(tau(model, theta, problem.sigma(), problem.anchors().rho), r.kappa);
    const double sp = problem.sigma_p();
    const Vector dots = detail::support_dots(problem, theta);
    auto g = [&](double lambda) { return lambda * sp + detail::eval_h_sum(problem, lambda, dots); };

    double best_lambda = r.kappa;
    double best = g(r.kappa);
    if (r.tau > r.kappa) {
        const double tol = 1e-8 * std::max(1.0, r.tau);
        const LineMinimum line = golden_section_minimize(g, r.kappa, r.tau, tol);
        if (line.value < best) {
            best = line.value;
            best_lambda = line.x;
        }
        const double at_tau = g(r.tau);
        if (at_tau < best) {
            best = at_tau;
            best_lambda = r.tau;
        }
    }
    r.risk = best;
    r.lambda_star = best_lambda;
    r.at_boundary = best_lambda - r.kappa <= 1e-6 * std::max(1.0, r.kappa);
    return r;
}

// Subgradient of F(theta) = worst-case risk, read off the optimality conditions
// of min over lambda >= kappa(theta). g(lambda) is piecewise linear for the
// margin losses, so lambda* usually sits on a kink where some samples tie
// between keeping and flipping the label. Those samples get the convex mix of
// both branch gradients that makes the lambda-derivative vanish; whatever slope
// is left at the boundary becomes the multiplier of lambda >= kappa(theta).
inline std::pair<RiskResult, Vector> risk_subgradient(const WdroProblem& problem, std::span<const double> theta) {
    const RiskResult r = worst_case_risk(problem, theta);
    const auto& model = problem.model();
    const auto& data = problem.data();
    const std::size_t m = theta.size();
    Vector grad(m, 0.0);
    const double lambda = std::max(r.lambda_star, r.kappa);

    if (model.kind == LossKind::Huber) {
        for (const auto& [index, w] : problem.support()) {
            const DualOracleOutput out = h_exact(model, theta, lambda, data[index]);
            for (std::size_t k = 0; k < m; ++k) grad[k] += w * out.subgrad_theta[k];
        }
        if (r.at_boundary) {
            const Vector dk = kappa_subgradient(model, theta);
            for (std::size_t k = 0; k < m; ++k) grad[k] += problem.sigma_p() * dk[k];
        }
        return {r, grad};
    }

    const double gamma = model.metric.gamma;
    const double tie = 1e-7 * std::max(1.0, r.tau);
    Vector keep_grad(m, 0.0), flip_grad(m, 0.0), tied_keep(m, 0.0), tied_flip(m, 0.0);
    double flip_weight = 0.0, tied_weight = 0.0;
    for (const auto& [index, w] : problem.support()) {
        const LabeledSample& s = data[index];
        const double z = s.y * detail::dot(theta, s.x);
        const double keep = detail::margin_loss(model.kind, z);
        const double flip = detail::margin_loss(model.kind, -z);
        const double a = detail::margin_slope(model.kind, z) * s.y;
        const double b = -detail::margin_slope(model.kind, -z) * s.y;
        // Branch switch point: flipping wins for lambda below it.
        const double switch_at = (flip - keep) / gamma;
        Vector* kg = &keep_grad;
        Vector* fg = nullptr;
        if (std::abs(switch_at - lambda) <= tie) {
            tied_weight += w;
            kg = &tied_keep;
            fg = &tied_flip;
        } else if (switch_at > lambda) {
            flip_weight += w;
            kg = nullptr;
            fg = &flip_grad;
        }
        for (std::size_t k = 0; k < m; ++k) {
            if (kg) (*kg)[k] += w * a * s.x[k];
            if (fg) (*fg)[k] += w * b * s.x[k];
        }
    }
    // d/dlambda = sigma^p - gamma * (flip_weight + alpha * tied_weight).
    const double sp = problem.sigma_p();
    double alpha = 0.0;
    if (tied_weight > 0.0) alpha = std::clamp((sp / gamma - flip_weight) / tied_weight, 0.0, 1.0);
    for (std::size_t k = 0; k < m; ++k)
        grad[k] = keep_grad[k] + flip_grad[k] + (1.0 - alpha) * tied_keep[k] + alpha * tied_flip[k];
    const double slope = sp - gamma * (flip_weight + alpha * tied_weight);
    if (r.at_boundary && slope > 0.0) {
        const Vector dk = kappa_subgradient(model, theta);
        for (std::size_t k = 0; k < m; ++k) grad[k] += slope * dk[k];
    }
    return {r, grad};
}

// Euclidean projection onto B(center, radius).
inline void project_to_ball(Vector& theta, std::span<const double> center, double radius) {
    double dist2 = 0.0;
    for (std::size_t k = 0; k < theta.size(); ++k) dist2 += (theta[k] - center[k]) * (theta[k] - center[k]);
    const double dist = std::sqrt(dist2);
    if (dist <= radius) return;
    const double scale = radius / dist;
    for (std::size_t k = 0; k < theta.size(); ++k) theta[k] = center[k] + (theta[k] - center[k]) * scale;
}

enum class Solver { Subgradient, Ellipsoid };

inline Solver parse_solver(std::string_view s) {
    if (s == "subgradient") return Solver::Subgradient;
    if (s == "ellipsoid") return Solver::Ellipsoid;
    throw DomainError("unknown solver '" + std::string(s) + "' (expected subgradient or ellipsoid)");
}

inline std::string to_string(Solver s) { return s == Solver::Subgradient ? "subgradient" : "ellipsoid"; }

struct TrainOptions {
    std::size_t steps = 200;
    double eta0 = 0.0;  // <= 0 selects l_p / L
    Solver solver = Solver::Subgradient;
    // Ellipsoid stopping rule: certified gap <= tolerance * max(1, |best risk|).
    double tolerance = 1e-10;
    bool record_trajectory = false;
};

namespace detail {

inline TrainResult train_subgradient(const WdroProblem& problem, Vector theta, const TrainOptions& opt) {
    const Anchors& anc = problem.anchors();
    double eta0 = opt.eta0;
    if (!(eta0 > 0.0)) {
        const double lip = lipschitz_estimate(problem.model(), problem.data());
        eta0 = lip > 0.0 ? anc.l_p / lip : anc.l_p;
    }
    TrainResult best;
    auto [risk, grad] = risk_subgradient(problem, theta);
    best.theta = theta;
    best.risk = risk.risk;
    best.lambda_star = risk.lambda_star;
    if (opt.record_trajectory) best.trajectory.emplace_back(0, risk.risk);
    std::size_t t = 1;
    for (; t <= opt.steps; ++t) {
        double gnorm = 0.0;
        for (double v : grad) gnorm += v * v;
        if (gnorm == 0.0) break;
        const double step = eta0 / std::sqrt(static_cast<double>(t));
        for (std::size_t k = 0; k < theta.size(); ++k) theta[k] -= step * grad[k];
        project_to_ball(theta, anc.theta_anc, anc.l_p);
        std::tie(risk, grad) = risk_subgradient(problem, theta);
        if (opt.record_trajectory) best.trajectory.emplace_back(t, risk.risk);
        if (risk.risk < best.risk) {
            best.theta = theta;
            best.risk = risk.risk;
            best.lambda_star = risk.lambda_star;
        }
    }
    best.iterations = std::min(t, opt.steps);
    return best;
}

// Central-cut ellipsoid method over the parameter ball; bisection when m = 1.
inline TrainResult train_ellipsoid(const WdroProblem& problem, Vector theta, const TrainOptions& opt) {
    const Anchors& anc = problem.anchors();
    const std::size_t m = theta.size();
    TrainResult best;
    best.risk = std::numeric_limits<double>::infinity();
    auto consider = [&](const Vector& x, const RiskResult& r, std::size_t it) {
        if (opt.record_trajectory) best.trajectory.emplace_back(it, r.risk);
        if (r.risk < best.risk) {
            best.theta = x;
            best.risk = r.risk;
            best.lambda_star = r.lambda_star;
        }
    };
    {
        Vector start = theta;
        project_to_ball(start, anc.theta_anc, anc.l_p);
        consider(start, worst_case_risk(problem, start), 0);
    }

    if (m == 1) {
        double lo = anc.theta_anc[0] - anc.l_p;
        double hi = anc.theta_anc[0] + anc.l_p;
        std::size_t it = 1;
        for (; it <= opt.steps; ++it) {
            Vector x{0.5 * (lo + hi)};
            auto [r, g] = risk_subgradient(problem, x);
            consider(x, r, it);
            if (g[0] == 0.0 || std::abs(g[0]) * (hi - lo) <= opt.tolerance * std::max(1.0, std::abs(best.risk))) break;
            (g[0] > 0.0 ? hi : lo) = x[0];
        }
        best.iterations = std::min(it, opt.steps);
        return best;
    }

    const double dm = static_cast<double>(m);
    Vector x = anc.theta_anc;
    std::vector<double> P(m * m, 0.0);  // shape matrix, row-major
    for (std::size_t k = 0; k < m; ++k) P[k * m + k] = anc.l_p * anc.l_p;
    Vector Pg(m);
    std::size_t it = 1;
    for (; it <= opt.steps; ++it) {
        Vector g(m);
        double dist2 = 0.0;
        for (std::size_t k = 0; k < m; ++k) dist2 += (x[k] - anc.theta_anc[k]) * (x[k] - anc.theta_anc[k]);
        bool objective_cut = dist2 <= anc.l_p * anc.l_p;
        if (objective_cut) {
            auto [r, grad] = risk_subgradient(problem, x);
            consider(x, r, it);
            g = std::move(grad);
        } else {
            for (std::size_t k = 0; k < m; ++k) g[k] = x[k] - anc.theta_anc[k];
        }
        for (std::size_t a = 0; a < m; ++a) {
            double acc = 0.0;
            for (std::size_t b = 0; b < m; ++b) acc += P[a * m + b] * g[b];
            Pg[a] = acc;
        }
        double gPg = 0.0;
        for (std::size_t k = 0; k < m; ++k) gPg += g[k] * Pg[k];
        if (!(gPg > 0.0)) break;
        const double root = std::sqrt(gPg);
        if (objective_cut && root <= opt.tolerance * std::max(1.0, std::abs(best.risk))) break;
        for (std::size_t k = 0; k < m; ++k) {
            Pg[k] /= root;
            x[k] -= Pg[k] / (dm + 1.0);
        }
        const double scale = dm * dm / (dm * dm - 1.0);
        const double rank = 2.0 / (dm + 1.0);
        for (std::size_t a = 0; a < m; ++a)
            for (std::size_t b = 0; b < m; ++b) P[a * m + b] = scale * (P[a * m + b] - rank * Pg[a] * Pg[b]);
    }
    best.iterations = std::min(it, opt.steps);
    return best;
}

}  // namespace detail

// Minimises the worst-case risk over B(theta_anc, l_p) and returns the best
// iterate. Subgradient: theta <- Proj(theta - eta0 / sqrt(t) * g_t).
inline TrainResult train(const WdroProblem& problem, Vector theta0, const TrainOptions& opt = {}) {
    detail::require_exact(problem.model());
    if (theta0.empty()) theta0 = problem.anchors().theta_anc;
    if (theta0.size() != problem.data().dim()) throw DomainError("theta0 dimension does not match the data");
    if (opt.steps < 1) throw DomainError("training needs at least one step");
    double dist2 = 0.0;
    for (std::size_t k = 0; k < theta0.size(); ++k)
        dist2 += (theta0[k] - problem.anchors().theta_anc[k]) * (theta0[k] - problem.anchors().theta_anc[k]);
    if (std::sqrt(dist2) > problem.anchors().l_p * (1.0 + 1e-12))
        throw DomainError("theta0 lies outside the parameter ball");
    return opt.solver == Solver::Subgradient ? detail::train_subgradient(problem, std::move(theta0), opt)
                                             : detail::train_ellipsoid(problem, std::move(theta0), opt);
}

// Finite candidate set used by the brute-force oracle: moves of xi along the
// direction that increases the loss fastest, for both labels in classification.
struct CandidateGrid {
    double t_max = 50.0;
    double t_step = 1e-3;
    std::size_t lambda_points = 2000;
};

// One candidate zeta: its loss and its transport distance to the sample.
struct CandidateLine {
    double loss = 0.0;
    double distance = 0.0;
};

inline std::vector<CandidateLine> candidate_lines(const LossModel& model, std::span<const double> theta,
                                                  const LabeledSample& s, const CandidateGrid& grid) {
    if (!(grid.t_step > 0.0) || grid.t_max < 0.0) throw DomainError("candidate grid must have a positive step");
    const std::size_t steps = static_cast<std::size_t>(std::floor(grid.t_max / grid.t_step + 1e-9));
    std::vector<CandidateLine> out;
    Vector zeta(s.x.size());

    // zeta(t) = (x + t dir_x, label + t dir_y) for t on the grid.
    auto sweep = [&](const Vector& dir_x, double dir_y, double label, std::size_t count) {
        for (std::size_t q = 0; q <= count; ++q) {
            const double t = static_cast<double>(q) * grid.t_step;
            for (std::size_t k = 0; k < zeta.size(); ++k) zeta[k] = s.x[k] + t * dir_x[k];
            const double y = label + t * dir_y;
            out.push_back({loss_value(model, theta, zeta, y), model.metric.distance(zeta, y, s.x, s.y)});
        }
    };

    Vector dir(theta.size(), 0.0);
    if (model.is_regression()) {
        // Grow |theta'x - y| along +-(theta, -1).
        const double sign = detail::dot(theta, s.x) - s.y >= 0.0 ? 1.0 : -1.0;
        const double len = norm_with_tail(theta, -1.0, Norm::L2);
        for (std::size_t k = 0; k < dir.size(); ++k) dir[k] = sign * theta[k] / len;
        sweep(dir, -sign / len, s.y, steps);
        return out;
    }

    const double theta_norm = norm(theta, Norm::L2);
    for (double label : {s.y, -s.y}) {
        if (theta_norm > 0.0)
            for (std::size_t k = 0; k < dir.size(); ++k) dir[k] = -label * theta[k] / theta_norm;
        sweep(dir, 0.0, label, theta_norm > 0.0 ? steps : 0);
    }
    return out;
}

// Upper envelope of lambda -> loss_c - lambda * distance_c for lambda >= 0.
class LineEnvelope {
public:
    explicit LineEnvelope(std::vector<CandidateLine> lines) {
        // slope = -distance; sort by slope ascending (distance descending).
        std::sort(lines.begin(), lines.end(), [](const CandidateLine& a, const CandidateLine& b) {
            if (a.distance != b.distance) return a.distance > b.distance;
            return a.loss < b.loss;
        });
        for (const auto& l : lines) {
            const long double slope = -static_cast<long double>(l.distance);
            const long double icpt = l.loss;
            if (!hull_.empty() && hull_.back().slope == slope) hull_.pop_back();
            while (hull_.size() >= 2) {
                const auto& l1 = hull_[hull_.size() - 2];
                const auto& l2 = hull_.back();
                if ((l1.icpt - icpt) * (l2.slope - l1.slope) <= (l1.icpt - l2.icpt) * (slope - l1.slope))
                    hull_.pop_back();
                else
                    break;
            }
            hull_.push_back({slope, icpt});
        }
    }

    double operator()(double lambda) const {
        std::size_t lo = 0, hi = hull_.size() - 1;
        while (lo < hi) {
            const std::size_t mid = (lo + hi) / 2;
            if (value(mid, lambda) <= value(mid + 1, lambda))
                lo = mid + 1;
            else
                hi = mid;
        }
        return static_cast<double>(value(lo, lambda));
    }

private:
    struct Line {
        long double slope;
        long double icpt;
    };
    long double value(std::size_t k, double lambda) const { return hull_[k].icpt + hull_[k].slope * lambda; }
    std::vector<Line> hull_;
};

// max over the candidate set of loss(zeta) - lambda d(zeta, xi): a lower bound on h.
inline double h_grid_sup(const LossModel& model, std::span<const double> theta, double lambda,
                         const LabeledSample& s, const CandidateGrid& grid = {}) {
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& c : candidate_lines(model, theta, s, grid)) best = std::max(best, c.loss - lambda * c.distance);
    return best;
}

// Verification oracle: the dual objective with the inner supremum restricted to
// finite candidate sets, minimised over a uniform lambda grid on [kappa, tau]
// and then refined inside the bracket around the best grid point.
inline double brute_force_risk(const WdroProblem& problem, std::span<const double> theta,
                               const CandidateGrid& grid = {}) {
    const auto& model = problem.model();
    require_order_one(model);
    if (grid.lambda_points < 1) throw DomainError("lambda grid must not be empty");
    std::vector<std::pair<double, LineEnvelope>> terms;
    for (const auto& [index, w] : problem.support())
        terms.emplace_back(w, LineEnvelope(candidate_lines(model, theta, problem.data()[index], grid)));

    const double lo = kappa(model, theta);
    const double hi = std::max(lo, tau(model, theta, problem.sigma(), problem.anchors().rho));
    const double sp = problem.sigma_p();
    auto g = [&](double lambda) {
        double acc = lambda * sp;
        for (const auto& [w, env] : terms) acc += w * env(lambda);
        return acc;
    };

    const std::size_t points = std::max<std::size_t>(grid.lambda_points, 2);
    const double step = (hi - lo) / static_cast<double>(points - 1);
    std::size_t arg = 0;
    double best = g(lo);
    for (std::size_t k = 1; k < points && step > 0.0; ++k) {
        const double v = g(lo + static_cast<double>(k) * step);
        if (v < best) {
            best = v;
            arg = k;
        }
    }
    if (step > 0.0) {
        const double a = lo + static_cast<double>(arg == 0 ? 0 : arg - 1) * step;
        const double b = std::min(hi, lo + static_cast<double>(arg + 1) * step);
        const LineMinimum refined = golden_section_minimize(g, a, b, 1e-13 * std::max(1.0, hi));
        best = std::min({best, refined.value, g(refined.lo), g(refined.hi)});
    }
    return best;
}

inline std::string serialize(const TrainResult& r) {
    std::ostringstream os;
    os << "theta";
    for (double v : r.theta) os << ' ' << detail::format_real(v);
    os << "\nrisk " << detail::format_real(r.risk) << "\nlambda_star " << detail::format_real(r.lambda_star)
       << "\niterations " << r.iterations << '\n';
    return os.str();
}

inline std::string serialize(const RiskResult& r) {
    std::ostringstream os;
    os << "risk " << detail::format_real(r.risk) << "\nlambda_star " << detail::format_real(r.lambda_star)
       << "\nat_boundary " << (r.at_boundary ? 1 : 0) << "\nkappa " << detail::format_real(r.kappa) << "\ntau "
       << detail::format_real(r.tau) << '\n';
    return os.str();
}

// Reads the flat "key value..." document written by serialize(TrainResult).
inline TrainResult parse_train_result(std::string_view text) {
    TrainResult r;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t lineno = 0;
    bool saw_theta = false;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream fields(line);
        std::string key;
        if (!(fields >> key)) continue;
        std::string tok;
        if (key == "theta") {
            saw_theta = true;
            while (fields >> tok) {
                double v = 0.0;
                if (!detail::parse_double(tok, v)) throw ParseError("bad theta component '" + tok + "'", lineno);
                r.theta.push_back(v);
            }
        } else if (key == "risk" || key == "lambda_star") {
            double v = 0.0;
            if (!(fields >> tok) || !detail::parse_double(tok, v)) throw ParseError("bad value for " + key, lineno);
            (key == "risk" ? r.risk : r.lambda_star) = v;
        } else if (key == "iterations") {
            if (!(fields >> r.iterations)) throw ParseError("bad iteration count", lineno);
        }
    }
    if (!saw_theta) throw ParseError("theta document has no 'theta' line", 0);
    return r;
}

}  // namespace wdro
