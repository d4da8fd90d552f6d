#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"
#include "wdro/coreset.hpp"
#include "wdro/wdro.hpp"

using namespace wdro;
using wdro::testing::Gen;

namespace {

const MetricSpec kL2{Norm::L2, 7.0};

Dataset single_point() { return Dataset(std::vector<LabeledSample>{{{2, 0}, 1}}, Task::Classification); }

WdroProblem make_problem(const Dataset& ds, const LossModel& model, double sigma, Vector center = {},
                         double lp = 10.0, std::optional<Coreset> w = std::nullopt) {
    return WdroProblem(ds, model, sigma, compute_anchors(ds, model, sigma, std::move(center), lp), std::move(w));
}

Vector random_in_ball(Gen& g, const Vector& center, double radius) {
    Vector dir = g.vec(center.size());
    double len = 0.0;
    for (double v : dir) len += v * v;
    len = std::sqrt(len);
    const double r = radius * std::pow(g.uniform(0.0, 1.0), 1.0 / double(center.size()));
    Vector out = center;
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += r * dir[k] / len;
    return out;
}

LossModel random_margin_model(Gen& g) {
    const MetricSpec metric(g.norm(), g.uniform(1.0, 9.0));
    return g.index(0, 1) ? LossModel::svm(metric) : LossModel::logistic(metric);
}

}  // namespace

TEST(EvalH, Examples) {
    const Dataset one = single_point();
    EXPECT_EQ(eval_H(make_problem(one, LossModel::svm(kL2), 0.5), Vector{1, 0}, 1.0), 0.0);

    const Dataset ds = Gen(3).classification(25, 3);
    EXPECT_NEAR(eval_H(make_problem(ds, LossModel::logistic(kL2), 0.5), Vector{0, 0, 0}, 0.0), std::log(2.0), 1e-15);

    const LossModel model = LossModel::svm(kL2);
    const Coreset identity = uniform_coreset(ds, ds.size(), 1);
    const Vector theta{0.4, -1.0, 0.3};
    EXPECT_EQ(eval_H(make_problem(ds, model, 0.5, {}, 10.0, identity), theta, 2.0),
              eval_H(make_problem(ds, model, 0.5), theta, 2.0));
}

TEST(EvalH, Errors) {
    const Dataset one = single_point();
    EXPECT_THROW(eval_H(make_problem(one, LossModel::svm(kL2), 0.5), Vector{1, 0}, 0.5), DomainError);
    EXPECT_THROW(eval_H(make_problem(one, LossModel::hypercube_svm(1.0, kL2), 0.5), Vector{1, 0}, 1.0),
                 UnsupportedError);
    EXPECT_THROW(make_problem(one, LossModel::svm(kL2), 0.0), DomainError);
}

TEST(WorstCaseRisk, SinglePointExample) {
    const RiskResult r = worst_case_risk(make_problem(single_point(), LossModel::svm(kL2), 0.5), Vector{1, 0});
    EXPECT_NEAR(r.risk, 0.5, 1e-12);
    EXPECT_NEAR(r.lambda_star, 1.0, 1e-9);
    EXPECT_TRUE(r.at_boundary);
    EXPECT_EQ(r.kappa, 1.0);
}

TEST(WorstCaseRisk, LargeSigmaSitsOnKappa) {
    // Correctly classified with margin: g is increasing, so the minimum is at kappa.
    const Dataset ds({{{3, 0}, 1}, {{-2, 1}, -1}, {{4, -1}, 1}}, Task::Classification);
    const LossModel model = LossModel::svm(kL2);
    const Vector theta{1, 0};
    const double sigma = 25.0;
    const WdroProblem problem = make_problem(ds, model, sigma);
    const RiskResult r = worst_case_risk(problem, theta);
    EXPECT_NEAR(r.risk, kappa(model, theta) * sigma + eval_H(problem, theta, kappa(model, theta)), 1e-9);
    EXPECT_TRUE(r.at_boundary);
}

TEST(WorstCaseRisk, ZeroThetaHinge) {
    const Dataset ds = Gen(4).classification(30, 2);
    const RiskResult r = worst_case_risk(make_problem(ds, LossModel::svm(kL2), 0.7), Vector{0, 0});
    EXPECT_NEAR(r.risk, 1.0, 1e-12);
    EXPECT_EQ(r.lambda_star, 0.0);
    EXPECT_EQ(r.kappa, 0.0);
}

TEST(WorstCaseRisk, LambdaStarInsideTheInterval) {
    Gen g(41);
    for (int d = 0; d < 5; ++d) {
        const LossModel model = d == 4 ? LossModel::huber(1.0, MetricSpec(g.norm(), 7.0)) : random_margin_model(g);
        const std::size_t m = g.index(1, 4);
        const Dataset ds = model.is_regression() ? g.regression(60, m) : g.classification(60, m);
        const Vector center = g.vec(m);
        const WdroProblem problem = make_problem(ds, model, g.uniform(0.05, 1.0), center, 5.0);
        for (int t = 0; t < 100; ++t) {
            const Vector theta = random_in_ball(g, center, 5.0);
            const RiskResult r = worst_case_risk(problem, theta);
            EXPECT_GE(r.lambda_star, r.kappa * (1 - 1e-9));
            EXPECT_LE(r.lambda_star, r.tau * (1 + 1e-9));
            EXPECT_EQ(r.at_boundary, r.lambda_star - r.kappa <= 1e-6 * std::max(1.0, r.kappa));
        }
    }
}

TEST(WorstCaseRisk, DominatesEmpiricalRiskAndGrowsWithSigma) {
    Gen g(42);
    for (int t = 0; t < 40; ++t) {
        const LossModel model = random_margin_model(g);
        const Dataset ds = g.classification(40, 2);
        const Vector theta = g.vec(2);
        double empirical = 0.0;
        for (const auto& s : ds) empirical += loss_value(model, theta, s) / double(ds.size());
        double previous = 0.0;
        for (double sigma : {0.01, 0.05, 0.1, 0.3, 1.0, 3.0}) {
            const double risk = worst_case_risk(make_problem(ds, model, sigma), theta).risk;
            EXPECT_GE(risk, empirical - 1e-12);
            EXPECT_GE(risk, previous - 1e-9);
            previous = risk;
        }
    }
}

TEST(WorstCaseRisk, UnimodalScanAgreesWithGoldenSection) {
    // Independent check: dense scan of g on [kappa, tau].
    Gen g(43);
    for (int t = 0; t < 20; ++t) {
        const LossModel model = random_margin_model(g);
        const Dataset ds = g.classification(15, 2);
        const WdroProblem problem = make_problem(ds, model, g.uniform(0.05, 0.5));
        const Vector theta = g.vec(2);
        const RiskResult r = worst_case_risk(problem, theta);
        double best = 1e300;
        for (int k = 0; k <= 20000; ++k) {
            const double lambda = r.kappa + (r.tau - r.kappa) * k / 20000.0;
            best = std::min(best, lambda * problem.sigma() + eval_H(problem, theta, lambda));
        }
        EXPECT_LE(r.risk, best + 1e-9);
        EXPECT_GE(r.risk, best - 1e-6 * std::max(1.0, best));
    }
}

TEST(RiskSubgradient, MatchesFiniteDifferencesOfH) {
    Gen g(44);
    int checked = 0;
    for (int t = 0; t < 200 && checked < 50; ++t) {
        const LossModel model = LossModel::logistic(MetricSpec(Norm::L2, g.uniform(1.0, 9.0)));
        const Dataset ds = g.classification(20, 3);
        const WdroProblem problem = make_problem(ds, model, g.uniform(0.01, 0.3));
        const Vector theta = g.vec(3);
        const auto [r, grad] = risk_subgradient(problem, theta);
        if (r.at_boundary) continue;
        ++checked;
        const double step = 1e-6;
        for (std::size_t k = 0; k < 3; ++k) {
            Vector up = theta, dn = theta;
            up[k] += step;
            dn[k] -= step;
            const double lam = r.lambda_star + 1e-3;  // keep lambda above kappa of the shifted points
            const double fd = (eval_H(problem, up, lam) - eval_H(problem, dn, lam)) / (2 * step);
            // Exact Danskin term at lam for comparison.
            double exact = 0.0;
            for (const auto& [i, w] : problem.support()) exact += w * h_exact(model, theta, lam, ds[i]).subgrad_theta[k];
            EXPECT_NEAR(fd, exact, 1e-5 * std::max(1.0, std::abs(exact)));
        }
        double dn = 0.0;
        for (double v : grad) dn += v * v;
        EXPECT_TRUE(std::isfinite(dn));
    }
    EXPECT_GT(checked, 10);
}

TEST(RiskSubgradient, DirectionalDerivativeOfTheRisk) {
    // F is convex, so F(theta + h d) - F(theta) >= h g.d for any subgradient g.
    Gen g(45);
    for (int t = 0; t < 100; ++t) {
        const LossModel model = random_margin_model(g);
        const Dataset ds = g.classification(25, 2);
        const WdroProblem problem = make_problem(ds, model, g.uniform(0.05, 0.5));
        const Vector theta = g.vec(2);
        const auto [r, grad] = risk_subgradient(problem, theta);
        for (int k = 0; k < 5; ++k) {
            const Vector d = g.vec(2);
            Vector moved = theta;
            const double h = 1e-2;
            for (std::size_t i = 0; i < 2; ++i) moved[i] += h * d[i];
            const double lhs = worst_case_risk(problem, moved).risk - r.risk;
            EXPECT_GE(lhs, h * (grad[0] * d[0] + grad[1] * d[1]) - 1e-6);
        }
    }
}

TEST(Train, SinglePointReachesTheBallInfimum) {
    const Dataset one = single_point();
    const WdroProblem problem = make_problem(one, LossModel::svm(kL2), 0.5);
    // Coarse grid oracle over the ball.
    double grid_best = 1e300;
    for (double a = -10; a <= 10; a += 0.25)
        for (double b = -10; b <= 10; b += 0.25)
            if (a * a + b * b <= 100) grid_best = std::min(grid_best, worst_case_risk(problem, Vector{a, b}).risk);
    EXPECT_LE(grid_best, 0.5 + 1e-9);
    for (Solver solver : {Solver::Subgradient, Solver::Ellipsoid}) {
        TrainOptions opt;
        opt.solver = solver;
        opt.steps = solver == Solver::Subgradient ? 2000 : 500;  // O(1/sqrt(T)) vs linear rate
        const TrainResult r = train(problem, Vector{1, 0}, opt);
        EXPECT_LE(r.risk, 0.5 + 1e-9);
        EXPECT_LE(r.risk, grid_best + 1e-3);
    }
}

TEST(Train, SeparableBlobsImproveOnTheStart) {
    const Dataset ds = synth_blobs(200, 2, 6.0, 0.0, 3);
    const WdroProblem problem = make_problem(ds, LossModel::svm(kL2), 0.01);
    const Vector theta0{0.0, 0.5};
    TrainOptions opt;
    opt.steps = 100;
    const TrainResult r = train(problem, theta0, opt);
    EXPECT_LE(r.risk, worst_case_risk(problem, theta0).risk);
    EXPECT_LT(r.risk, 0.2);
}

TEST(Train, OneStepKeepsTheBetterIterate) {
    const Dataset ds = Gen(46).classification(40, 2);
    const WdroProblem problem = make_problem(ds, LossModel::logistic(kL2), 0.2);
    const Vector theta0{3.0, -2.0};
    TrainOptions opt;
    opt.steps = 1;
    opt.eta0 = 0.5;
    const TrainResult r = train(problem, theta0, opt);
    const auto [r0, g0] = risk_subgradient(problem, theta0);
    Vector stepped = theta0;
    for (std::size_t k = 0; k < 2; ++k) stepped[k] -= 0.5 * g0[k];
    const double r1 = worst_case_risk(problem, stepped).risk;
    EXPECT_EQ(r.risk, std::min(r0.risk, r1));
    EXPECT_EQ(r.theta, r0.risk <= r1 ? theta0 : stepped);
}

TEST(Train, ResultInvariantsAndDeterminism) {
    Gen g(47);
    for (int t = 0; t < 10; ++t) {
        const LossModel model = random_margin_model(g);
        const Dataset ds = g.classification(50, 3);
        const Vector center = g.vec(3);
        const double lp = g.uniform(0.5, 4.0);
        const WdroProblem problem = make_problem(ds, model, 0.2, center, lp);
        for (Solver solver : {Solver::Subgradient, Solver::Ellipsoid}) {
            TrainOptions opt;
            opt.solver = solver;
            opt.steps = 150;
            opt.record_trajectory = true;
            const TrainResult r = train(problem, {}, opt);
            double dist = 0.0;
            for (std::size_t k = 0; k < 3; ++k) dist += (r.theta[k] - center[k]) * (r.theta[k] - center[k]);
            EXPECT_LE(std::sqrt(dist), lp * (1 + 1e-9));
            EXPECT_EQ(r.risk, worst_case_risk(problem, r.theta).risk);
            EXPECT_FALSE(r.trajectory.empty());
            const TrainResult again = train(problem, {}, opt);
            EXPECT_EQ(again.theta, r.theta);
        }
    }
}

TEST(Train, EllipsoidAndSubgradientAgree) {
    Gen g(48);
    for (int t = 0; t < 5; ++t) {
        const Dataset ds = g.classification(80, 2);
        const WdroProblem problem = make_problem(ds, LossModel::logistic(kL2), 0.1, {}, 5.0);
        TrainOptions sub;
        sub.steps = 3000;
        TrainOptions ell;
        ell.solver = Solver::Ellipsoid;
        ell.steps = 2000;
        const double a = train(problem, {}, sub).risk, b = train(problem, {}, ell).risk;
        EXPECT_LE(b, a + 1e-6);
        EXPECT_NEAR(a, b, 1e-2 * b);
    }
}

TEST(Train, Errors) {
    const Dataset one = single_point();
    EXPECT_THROW(train(make_problem(one, LossModel::hypercube_svm(1.0, kL2), 0.5), {}), UnsupportedError);
    EXPECT_THROW(train(make_problem(one, LossModel::svm(kL2), 0.5, {}, 1.0), Vector{3, 0}), DomainError);
    TrainOptions zero;
    zero.steps = 0;
    EXPECT_THROW(train(make_problem(one, LossModel::svm(kL2), 0.5), {}, zero), DomainError);
}

TEST(BruteForce, DegenerateCandidateSetGivesEmpiricalRisk) {
    const Dataset ds = Gen(49).classification(12, 2);
    const CandidateGrid only_data{0.0, 1e-3, 2000};
    const WdroProblem problem = make_problem(ds, LossModel::logistic(kL2), 0.4);
    EXPECT_NEAR(brute_force_risk(problem, Vector{0, 0}, only_data), std::log(2.0), 1e-15);
}

TEST(BruteForce, SinglePointExample) {
    const double b = brute_force_risk(make_problem(single_point(), LossModel::svm(kL2), 0.5), Vector{1, 0});
    EXPECT_LE(std::abs(b - 0.5) / 0.5, 1e-2);
}

TEST(BruteForce, NeverExceedsTheDualValue) {
    Gen g(50);
    const CandidateGrid coarse{5.0, 1e-2, 200};
    for (int t = 0; t < 30; ++t) {
        const LossModel model = random_margin_model(g);
        const Dataset ds = g.classification(g.index(1, 8), g.index(1, 3));
        const WdroProblem problem = make_problem(ds, model, g.uniform(0.05, 1.0));
        const Vector theta = g.vec(ds.dim());
        EXPECT_LE(brute_force_risk(problem, theta, coarse), worst_case_risk(problem, theta).risk + 1e-9);
    }
}

TEST(BruteForce, AgreesWithTheDualOnSmallInstances) {
    Gen g(51);
    for (int t = 0; t < 10; ++t) {
        const LossModel model = random_margin_model(g);
        const Dataset ds = g.classification(g.index(1, 10), g.index(1, 3));
        const WdroProblem problem = make_problem(ds, model, g.uniform(0.05, 1.0));
        const Vector theta = g.vec(ds.dim());
        const double dual = worst_case_risk(problem, theta).risk;
        const double brute = brute_force_risk(problem, theta);
        EXPECT_LE(std::abs(dual - brute) / dual, 2e-2);
    }
}

TEST(Serialization, TrainAndRiskDocuments) {
    TrainResult r;
    r.theta = {0.1, -1.0 / 3.0, 1e-300};
    r.risk = 0.59267;
    r.lambda_star = 2.0 / 7.0;
    r.iterations = 12;
    const TrainResult back = parse_train_result(serialize(r));
    EXPECT_EQ(back.theta, r.theta);
    EXPECT_EQ(back.risk, r.risk);
    EXPECT_EQ(back.lambda_star, r.lambda_star);
    EXPECT_EQ(back.iterations, 12u);
    EXPECT_THROW(parse_train_result("risk 1\n"), ParseError);
    EXPECT_THROW(parse_train_result("theta 1 x\n"), ParseError);
    RiskResult rr;
    rr.risk = 0.5;
    rr.lambda_star = 1.0;
    rr.at_boundary = true;
    EXPECT_NE(serialize(rr).find("risk 0.5\nlambda_star 1\nat_boundary 1"), std::string::npos);
}
