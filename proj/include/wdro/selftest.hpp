#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "wdro/coreset.hpp"
#include "wdro/dataset.hpp"
#include "wdro/losses.hpp"
#include "wdro/random.hpp"
#include "wdro/wdro.hpp"

namespace wdro {

struct SelftestCheck {
    std::string name;
    bool passed = false;
    std::string detail;
};

namespace detail {

inline bool close(double a, double b, double tol) { return std::abs(a - b) <= tol * std::max(1.0, std::abs(b)); }

inline Dataset tiny_blobs(std::uint64_t seed) { return synth_blobs(64, 3, 2.0, 0.1, seed); }

}  // namespace detail

// Small built-in instances exercising the core invariants. Each check is
// independent; a thrown exception counts as a failure of that check.
inline std::vector<SelftestCheck> run_selftest(std::uint64_t seed = 1) {
    std::vector<std::pair<std::string, std::function<std::string()>>> checks;

    checks.emplace_back("metric axioms", [seed] {
        Rng rng = make_rng(seed, {1});
        std::normal_distribution<double> g(0.0, 1.0);
        for (Norm n : {Norm::L1, Norm::L2, Norm::Linf}) {
            const MetricSpec metric(n, 7.0);
            for (int t = 0; t < 200; ++t) {
                Vector a{g(rng), g(rng)}, b{g(rng), g(rng)}, c{g(rng), g(rng)};
                const double ya = g(rng), yb = g(rng), yc = g(rng);
                const double ab = metric.distance(a, ya, b, yb), ba = metric.distance(b, yb, a, ya);
                const double ac = metric.distance(a, ya, c, yc), cb = metric.distance(c, yc, b, yb);
                if (ab < 0.0 || ab != ba || ab > ac + cb + 1e-12) return std::string("axiom violated");
            }
        }
        return std::string();
    });

    checks.emplace_back("hinge dual oracle closed form", [] {
        const LossModel model = LossModel::svm(MetricSpec(Norm::L2, 2.0));
        const Vector theta{1.0, 0.0};
        const LabeledSample s{{2.0, 0.0}, 1.0};
        const double v = h_exact(model, theta, 1.0, s).value;
        return detail::close(v, 1.0, 1e-12) ? std::string() : "h = " + detail::format_real(v) + ", expected 1";
    });

    checks.emplace_back("single-sample worst-case risk", [] {
        const Dataset ds(std::vector<LabeledSample>{{{2.0, 0.0}, 1.0}}, Task::Classification);
        const LossModel model = LossModel::svm(MetricSpec(Norm::L2, 7.0));
        const WdroProblem problem(ds, model, 0.5, compute_anchors(ds, model, 0.5, {}, 10.0));
        const double r = worst_case_risk(problem, Vector{1.0, 0.0}).risk;
        return detail::close(r, 0.5, 1e-8) ? std::string() : "risk = " + detail::format_real(r) + ", expected 0.5";
    });

    checks.emplace_back("grid cells partition the samples", [seed] {
        const Dataset ds = detail::tiny_blobs(seed);
        const LossModel model = LossModel::logistic(MetricSpec(Norm::L2, 7.0));
        const Anchors anc = compute_anchors(ds, model, 0.3, Vector{1.0, -0.5, 0.25}, 10.0);
        const GridPartition grid = build_grid(ds, model, anc, 1);
        std::vector<int> seen(ds.size(), 0);
        for (const auto& c : grid.cells)
            for (std::size_t i : c.members) ++seen[i];
        for (int v : seen)
            if (v != 1) return std::string("a sample is covered ") + std::to_string(v) + " times";
        return std::string();
    });

    checks.emplace_back("full-budget coreset is exact", [seed] {
        const Dataset ds = detail::tiny_blobs(seed);
        const LossModel model = LossModel::svm(MetricSpec(Norm::L2, 7.0));
        const Anchors anc = compute_anchors(ds, model, 0.3, Vector{0.5, 0.5, 0.0}, 10.0);
        const Coreset c = sample_coreset(ds, model, 0.3, anc, ds.size(), seed, 1);
        const Vector theta{0.3, -0.2, 0.1};
        const double full = worst_case_risk(WdroProblem(ds, model, 0.3, anc), theta).risk;
        const double core = worst_case_risk(WdroProblem(ds, model, 0.3, anc, c), theta).risk;
        return detail::close(core, full, 1e-12) ? std::string() : "coreset risk differs from full risk";
    });

    checks.emplace_back("lambda* lies in [kappa, tau]", [seed] {
        const Dataset ds = detail::tiny_blobs(seed);
        const LossModel model = LossModel::logistic(MetricSpec(Norm::L1, 7.0));
        const WdroProblem problem(ds, model, 0.3, compute_anchors(ds, model, 0.3, {}, 10.0));
        Rng rng = make_rng(seed, {2});
        std::uniform_real_distribution<double> u(-3.0, 3.0);
        for (int t = 0; t < 20; ++t) {
            const Vector theta{u(rng), u(rng), u(rng)};
            const RiskResult r = worst_case_risk(problem, theta);
            if (r.lambda_star < r.kappa * (1 - 1e-9) - 1e-9 || r.lambda_star > r.tau * (1 + 1e-9) + 1e-9)
                return std::string("lambda* outside its interval");
        }
        return std::string();
    });

    checks.emplace_back("Huber oracle equals the loss", [seed] {
        const LossModel model = LossModel::huber(1.0, MetricSpec(Norm::L2, 7.0));
        Rng rng = make_rng(seed, {3});
        std::normal_distribution<double> g(0.0, 2.0);
        for (int t = 0; t < 100; ++t) {
            const Vector theta{g(rng), g(rng)};
            const LabeledSample s{{g(rng), g(rng)}, g(rng)};
            const double lambda = kappa(model, theta) + std::abs(g(rng));
            if (h_exact(model, theta, lambda, s).value != loss_value(model, theta, s))
                return std::string("h differs from the loss");
        }
        return std::string();
    });

    checks.emplace_back("brute force agrees with the dual", [seed] {
        const Dataset ds = synth_blobs(6, 2, 2.0, 0.0, seed);
        const LossModel model = LossModel::svm(MetricSpec(Norm::L2, 7.0));
        const WdroProblem problem(ds, model, 0.3, compute_anchors(ds, model, 0.3, {}, 10.0));
        const Vector theta{0.8, -0.4};
        const double dual = worst_case_risk(problem, theta).risk;
        const double brute = brute_force_risk(problem, theta);
        if (brute > dual + 1e-9) return std::string("brute force exceeds the dual value");
        return std::abs(brute - dual) <= 2e-2 * dual ? std::string() : std::string("relative gap above 2e-2");
    });

    std::vector<SelftestCheck> out;
    for (auto& [name, fn] : checks) {
        SelftestCheck c{name, false, {}};
        try {
            c.detail = fn();
            c.passed = c.detail.empty();
        } catch (const std::exception& e) {
            c.detail = e.what();
        }
        out.push_back(std::move(c));
    }
    return out;
}

}  // namespace wdro
