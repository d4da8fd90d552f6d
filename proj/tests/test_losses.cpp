#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"
#include "wdro/losses.hpp"
#include "wdro/wdro.hpp"

using namespace wdro;
using wdro::testing::Gen;

namespace {

const MetricSpec kL2{Norm::L2, 7.0};

LossModel random_exact_model(Gen& g) {
    const MetricSpec metric(g.norm(), g.uniform(0.5, 9.0));
    switch (g.index(0, 2)) {
        case 0: return LossModel::svm(metric);
        case 1: return LossModel::logistic(metric);
        default: return LossModel::huber(g.uniform(0.2, 3.0), metric);
    }
}

LabeledSample random_sample(Gen& g, const LossModel& model, std::size_t m) {
    return {g.vec(m, 2.0), model.is_regression() ? g.normal(3.0) : g.sign()};
}

}  // namespace

TEST(LossValue, Examples) {
    EXPECT_EQ(loss_value(LossModel::svm(kL2), Vector{1, 0}, LabeledSample{{2, 0}, 1}), 0.0);
    EXPECT_NEAR(loss_value(LossModel::logistic(kL2), Vector{0, 0}, LabeledSample{{5, -1}, -1}), 0.693147, 1e-6);
    EXPECT_EQ(loss_value(LossModel::logistic(kL2), Vector{0, 0}, LabeledSample{{5, -1}, -1}), std::log(2.0));
    EXPECT_EQ(loss_value(LossModel::huber(1.0, kL2), Vector{1}, LabeledSample{{1}, 0}), 0.5);
    EXPECT_EQ(loss_value(LossModel::huber(1.0, kL2), Vector{3}, LabeledSample{{1}, 0}), 2.5);
    EXPECT_EQ(loss_value(LossModel::hypercube_svm(1.0, kL2), Vector{1, 0}, LabeledSample{{0.5, 0}, 1}), 0.5);
    EXPECT_THROW(loss_value(LossModel::svm(kL2), Vector{1}, LabeledSample{{1, 2}, 1}), DomainError);
}

TEST(LossValue, LoglossIsOverflowSafe) {
    const LossModel model = LossModel::logistic(kL2);
    EXPECT_NEAR(loss_value(model, Vector{1000}, LabeledSample{{1}, -1}), 1000.0, 1e-9);
    EXPECT_GE(loss_value(model, Vector{1000}, LabeledSample{{1}, 1}), 0.0);
    EXPECT_LT(loss_value(model, Vector{1000}, LabeledSample{{1}, 1}), 1e-300);
}

TEST(Kappa, Examples) {
    EXPECT_EQ(kappa(LossModel::svm(kL2), Vector{3, 4}), 5.0);
    EXPECT_EQ(kappa(LossModel::huber(2.0, kL2), Vector{0, 0}), 2.0);
    EXPECT_EQ(kappa(LossModel::hypercube_svm(1.0, kL2), Vector{3, 4}), 0.0);
    // Dual norms: L1 features pair with Linf, Linf with L1.
    EXPECT_EQ(kappa(LossModel::logistic(MetricSpec(Norm::L1, 7.0)), Vector{3, -4}), 4.0);
    EXPECT_EQ(kappa(LossModel::logistic(MetricSpec(Norm::Linf, 7.0)), Vector{3, -4}), 7.0);
    EXPECT_EQ(kappa(LossModel::huber(1.0, MetricSpec(Norm::Linf, 7.0)), Vector{0.5}), 1.5);
    EXPECT_EQ(kappa(LossModel::huber(1.0, MetricSpec(Norm::L1, 7.0)), Vector{0.5}), 1.0);
}

TEST(Kappa, RequiresOrderOne) {
    const LossModel model = LossModel::svm(MetricSpec(Norm::L2, 7.0, 2));
    EXPECT_THROW(kappa(model, Vector{1}), UnsupportedError);
    EXPECT_THROW(h_exact(model, Vector{1}, 5.0, LabeledSample{{1}, 1}), UnsupportedError);
}

TEST(GrowthC, Examples) {
    EXPECT_EQ(growth_c(LossModel::svm(kL2), Vector{3, 4}), 5.0);
    EXPECT_EQ(growth_c(LossModel::hypercube_svm(1.0, kL2), Vector{3, 4}), 5.0);
    EXPECT_EQ(growth_c(LossModel::huber(1.0, kL2), Vector{0}), 1.0);
}

TEST(GrowthC, ClosedFormBallMaximumDominatesSamples) {
    Gen g(31);
    for (int t = 0; t < 200; ++t) {
        const LossModel model = random_exact_model(g);
        const std::size_t m = g.index(1, 5);
        const Vector center = g.vec(m);
        const double radius = g.uniform(0.0, 3.0);
        const double cmax = max_growth_c_over_ball(model, center, radius);
        for (int k = 0; k < 50; ++k) {
            Vector dir = g.vec(m);
            double len = 0.0;
            for (double v : dir) len += v * v;
            len = std::sqrt(len);
            const double r = radius * std::pow(g.uniform(0.0, 1.0), 1.0 / double(m));
            Vector theta = center;
            for (std::size_t i = 0; i < m; ++i) theta[i] += r * dir[i] / len;
            EXPECT_LE(growth_c(model, theta), cmax * (1 + 1e-12) + 1e-12);
        }
    }
}

TEST(RBound, Examples) {
    EXPECT_EQ(r_bound(LossModel::svm(kL2), 3), 7.0);
    EXPECT_EQ(r_bound(LossModel::logistic(kL2), 3), 7.0);
    EXPECT_EQ(r_bound(LossModel::huber(1.0, kL2), 3), 0.0);
    EXPECT_EQ(r_bound(LossModel::hypercube_svm(1.0, kL2), 4), 11.0);
}

TEST(HExact, Examples) {
    const LabeledSample xi{{2, 0}, 1};
    const auto out = h_exact(LossModel::svm(kL2), Vector{1, 0}, 1.0, xi);
    EXPECT_EQ(out.value, 0.0);
    EXPECT_EQ(out.active_branch, 0);
    const auto flip = h_exact(LossModel::svm(MetricSpec(Norm::L2, 0.2)), Vector{1, 0}, 1.0, xi);
    EXPECT_NEAR(flip.value, 2.8, 1e-15);
    EXPECT_EQ(flip.active_branch, 1);
    EXPECT_EQ(h_exact(LossModel::logistic(kL2), Vector{0, 0}, 0.3, xi).value, std::log(2.0));
    EXPECT_EQ(h_exact(LossModel::huber(1.0, kL2), Vector{1}, 5.0, LabeledSample{{1}, 0}).value, 0.5);
}

TEST(HExact, DomainAndUnsupported) {
    const LabeledSample xi{{2, 0}, 1};
    EXPECT_THROW(h_exact(LossModel::svm(kL2), Vector{1, 0}, 0.5, xi), DomainError);
    EXPECT_NO_THROW(h_exact(LossModel::svm(kL2), Vector{1, 0}, 1.0 - 1e-12, xi));
    EXPECT_THROW(h_exact(LossModel::hypercube_svm(1.0, kL2), Vector{1, 0}, 1.0, xi), UnsupportedError);
}

TEST(HExact, TiesPickTheFirstBranch) {
    // theta = 0: both logistic branches give log 2 at lambda = 0.
    EXPECT_EQ(h_exact(LossModel::logistic(kL2), Vector{0}, 0.0, LabeledSample{{1}, 1}).active_branch, 0);
}

TEST(HExact, DominatesLossAndEqualsItForHuber) {
    Gen g(7);
    for (int t = 0; t < 1000; ++t) {
        const LossModel model = random_exact_model(g);
        const std::size_t m = g.index(1, 4);
        const Vector theta = g.vec(m);
        const LabeledSample s = random_sample(g, model, m);
        const double lambda = kappa(model, theta) + std::abs(g.normal(2.0));
        const double h = h_exact(model, theta, lambda, s).value;
        const double l = loss_value(model, theta, s);
        EXPECT_GE(h, l);
        if (model.kind == LossKind::Huber) {
            EXPECT_EQ(h, l);
        }
    }
}

TEST(HExact, SubgradientMatchesFiniteDifferences) {
    Gen g(19);
    int checked = 0;
    for (int t = 0; t < 300; ++t) {
        const LossModel model = random_exact_model(g);
        const std::size_t m = g.index(1, 4);
        const Vector theta = g.vec(m);
        const LabeledSample s = random_sample(g, model, m);
        const double lambda = kappa(model, theta) + 0.5 + std::abs(g.normal());
        const auto out = h_exact(model, theta, lambda, s);
        const double step = 1e-7;
        bool smooth = true;
        Vector fd(m);
        for (std::size_t k = 0; k < m; ++k) {
            Vector up = theta, dn = theta;
            up[k] += step;
            dn[k] -= step;
            const double fu = h_exact(model, up, lambda, s).value, fdn = h_exact(model, dn, lambda, s).value;
            const double fc = out.value;
            fd[k] = (fu - fdn) / (2 * step);
            // Skip kinks: one-sided slopes disagree.
            if (std::abs((fu - fc) / step - (fc - fdn) / step) > 1e-4) smooth = false;
        }
        if (!smooth) continue;
        ++checked;
        for (std::size_t k = 0; k < m; ++k) EXPECT_NEAR(out.subgrad_theta[k], fd[k], 1e-5);
    }
    EXPECT_GT(checked, 200);
}

TEST(HExact, NonIncreasingAndConvexInLambda) {
    Gen g(23);
    for (int t = 0; t < 300; ++t) {
        const LossModel model = random_exact_model(g);
        const std::size_t m = g.index(1, 4);
        const Vector theta = g.vec(m);
        const LabeledSample s = random_sample(g, model, m);
        const double k0 = kappa(model, theta);
        Vector vals;
        for (int i = 0; i <= 60; ++i) vals.push_back(h_exact(model, theta, k0 + 0.05 * i, s).value);
        for (std::size_t i = 1; i < vals.size(); ++i) EXPECT_LE(vals[i], vals[i - 1] + 1e-12);
        for (std::size_t i = 1; i + 1 < vals.size(); ++i) EXPECT_LE(vals[i], 0.5 * (vals[i - 1] + vals[i + 1]) + 1e-12);
    }
}

TEST(Continuity, LipschitzInTheta) {
    Gen g(101);
    for (int t = 0; t < 1000; ++t) {
        const LossModel model = random_exact_model(g);
        const std::size_t m = g.index(1, 5);
        const Vector a = g.vec(m), b = g.vec(m);
        const LabeledSample s = random_sample(g, model, m);
        const double lambda = std::max(kappa(model, a), kappa(model, b)) + std::abs(g.normal());
        double dist = 0.0;
        for (std::size_t k = 0; k < m; ++k) dist += (a[k] - b[k]) * (a[k] - b[k]);
        const double lip = model.kind == LossKind::Huber ? model.delta * norm(s.x, Norm::L2)
                                                         : sample_lipschitz(model, s.x);
        const double gap = std::abs(h_exact(model, a, lambda, s).value - h_exact(model, b, lambda, s).value);
        EXPECT_LE(gap, lip * std::sqrt(dist) + 1e-9);
        EXPECT_LE(lip, sample_lipschitz(model, s.x));
    }
}

TEST(Continuity, LipschitzInLambda) {
    Gen g(202);
    for (int t = 0; t < 1000; ++t) {
        const LossModel model = random_exact_model(g);
        const std::size_t m = g.index(1, 5);
        const Vector theta = g.vec(m);
        const LabeledSample s = random_sample(g, model, m);
        const double k0 = kappa(model, theta);
        const double l1 = k0 + std::abs(g.normal()), l2 = k0 + std::abs(g.normal());
        const double gap = std::abs(h_exact(model, theta, l1, s).value - h_exact(model, theta, l2, s).value);
        EXPECT_LE(gap, r_bound(model, m) * std::abs(l1 - l2) + 1e-9);
    }
}

TEST(Bounds, ClosedFormLossesHaveTightBounds) {
    Gen g(303);
    for (int t = 0; t < 500; ++t) {
        const LossModel model = random_exact_model(g);
        const std::size_t m = g.index(1, 4);
        const Vector theta = g.vec(m);
        const LabeledSample s = random_sample(g, model, m);
        const double lambda = kappa(model, theta) + std::abs(g.normal());
        const double h = h_exact(model, theta, lambda, s).value;
        EXPECT_EQ(h_lower(model, theta, lambda, s), h);
        EXPECT_EQ(h_upper(model, theta, lambda, s), h);
    }
}

TEST(Bounds, HypercubeExamples) {
    const LossModel model = LossModel::hypercube_svm(1.0, kL2);
    EXPECT_EQ(h_lower(model, Vector{1, 0}, 2.0, LabeledSample{{2, 0}, 1}), 0.0);
    EXPECT_EQ(h_lower(model, Vector{1, 0}, 2.0, LabeledSample{{0.5, 0}, 1}), 0.5);
    EXPECT_EQ(h_upper(model, Vector{1, 0}, 2.0, LabeledSample{{2, 0}, 1}), 0.0);
    EXPECT_THROW(h_upper(model, Vector{1, 0}, -1.0, LabeledSample{{2, 0}, 1}), DomainError);
}

TEST(Bounds, HypercubeUpperDominatesLowerInsideTheBox) {
    Gen g(404);
    for (int t = 0; t < 2000; ++t) {
        const double side = g.uniform(0.5, 3.0);
        const LossModel model = LossModel::hypercube_svm(side, MetricSpec(g.norm(), g.uniform(0.5, 9.0)));
        const std::size_t m = g.index(1, 5);
        const Vector theta = g.vec(m, 2.0);
        Vector x = g.unit_box(m);
        for (double& v : x) v *= side;
        const LabeledSample s{x, g.sign()};
        const double lambda = std::abs(g.normal(3.0));
        EXPECT_LE(h_lower(model, theta, lambda, s), h_upper(model, theta, lambda, s) + 1e-12);
    }
}

TEST(Lipschitz, Examples) {
    const Dataset hinge({{{3, 4}, 1}, {{1, 0}, -1}}, Task::Classification);
    EXPECT_EQ(lipschitz_estimate(LossModel::svm(kL2), hinge), 5.0);
    const Dataset reg({{{1, 0}, 0}}, Task::Regression);
    EXPECT_DOUBLE_EQ(lipschitz_estimate(LossModel::huber(2.0, kL2), reg), 2.0 * std::sqrt(2.0));
    const Dataset zero({{{0, 0}, 1}}, Task::Classification);
    EXPECT_EQ(lipschitz_estimate(LossModel::logistic(kL2), zero), 0.0);
}

TEST(GridSup, HingeOracleWithinOnePercent) {
    Gen g(505);
    const CandidateGrid grid;
    for (int t = 0; t < 40; ++t) {
        const LossModel model = LossModel::svm(MetricSpec(Norm::L2, g.uniform(0.5, 9.0)));
        const std::size_t m = g.index(1, 3);
        const Vector theta = g.vec(m);
        const LabeledSample s{g.vec(m), g.sign()};
        const double lambda = kappa(model, theta) + std::abs(g.normal());
        const double exact = h_exact(model, theta, lambda, s).value;
        const double sup = h_grid_sup(model, theta, lambda, s, grid);
        EXPECT_LE(sup, exact + 1e-12);
        if (exact > 0.0) {
            EXPECT_LE((exact - sup) / exact, 1e-2);
        }
    }
}

TEST(ParseLoss, Strings) {
    EXPECT_EQ(parse_loss("svm", kL2).kind, LossKind::SvmHinge);
    EXPECT_EQ(parse_loss("huber:1.5", kL2).delta, 1.5);
    EXPECT_EQ(parse_loss("hypercube-svm:2", kL2).side, 2.0);
    EXPECT_EQ(to_string(parse_loss("huber:0.25", kL2)), "huber:0.25");
    EXPECT_THROW(parse_loss("huber", kL2), DomainError);
    EXPECT_THROW(parse_loss("huber:-1", kL2), DomainError);
    EXPECT_THROW(parse_loss("svm:1", kL2), DomainError);
    EXPECT_THROW(parse_loss("ridge", kL2), DomainError);
}
