#include "drls/config.hpp"
#include "drls/estimator.hpp"
#include "drls/linalg.hpp"
#include "drls/tuner.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace drls;
using namespace drls::testing;

namespace {

double min_eig(const Mat& m) { return Eigen::SelfAdjointEigenSolver<Mat>(0.5 * (m + m.transpose())).eigenvalues()(0); }

const ScenarioConfig& uncertain() {
    static const ScenarioConfig cfg = load_config("builtin:paper-uncertain");
    return cfg;
}

const ScenarioConfig& nominal() {
    static const ScenarioConfig cfg = load_config("builtin:paper");
    return cfg;
}

// A node-i context with random estimate, covariances and innovation.
TunerContext random_context(const ScenarioConfig& cfg, std::mt19937_64& rng, NodeId i, double b_scale = 0.3) {
    const auto& m = *cfg.model;
    TunerContext ctx;
    ctx.model = &m;
    ctx.i = i;
    ctx.x_hat = cfg.initial_states[i] + random_vector(rng, 2, 0.5);
    ctx.P = 0.01 * random_spd(rng, 2);
    ctx.F = m.nominal().jacobian(ctx.x_hat);
    ctx.b = random_vector(rng, m.meas_dim(i), b_scale);
    for (NodeId j : m.proper_neighbors(i)) {
        ctx.neighbors.push_back({j, m.pi(i, j), 0.01 * random_spd(rng, 2)});
    }
    return ctx;
}

double quadratic(const PhiTerms& p, double alpha) {
    return alpha * alpha * (p.phi2 + p.phi3_sum) - alpha * (p.phi1 + 2.0 * p.phi2) + (p.phi0 + p.phi1 + p.phi2);
}

PhiTerms phis(double p1, double p2, double p3) {
    PhiTerms p;
    p.phi1 = p1;
    p.phi2 = p2;
    p.phi3_sum = p3;
    return p;
}

}  // namespace

TEST(BreveLambda, ZeroWithoutUncertainty) { EXPECT_EQ(breve_lambda(*nominal().model, 0), 0.0); }

TEST(BreveLambda, ScalarArithmetic) {
    NodeParams p;
    p.H = Mat::Ones(1, 1);
    p.Q = Mat::Ones(1, 1);
    p.R = Mat::Ones(1, 1);
    p.E1 = Mat::Ones(1, 1);
    p.E2 = Mat::Zero(1, 1);
    const NetworkModel m(0.0, Mat::Zero(1, 1), Mat::Zero(1, 1), Dynamics::linear(Mat::Ones(1, 1)), {p});
    EXPECT_DOUBLE_EQ(breve_lambda(m, 0), 1.0);
}

TEST(BreveLambda, MatchesSvdOracle) {
    std::mt19937_64 rng(8);
    for (int t = 0; t < 20; ++t) {
        NodeParams p;
        p.H = random_matrix(rng, 2, 2);
        p.Q = random_spd(rng, 2);
        p.R = random_spd(rng, 2);
        p.E1 = random_matrix(rng, 2, 2);
        p.E2 = random_matrix(rng, 2, 1);
        const double a = 0.3;
        const NetworkModel m(a, Mat::Zero(1, 1), Mat::Zero(2, 2), Dynamics::linear(Mat::Identity(2, 2)), {p});
        Mat E(2, 3);
        E << p.E1, p.E2;
        const Mat X = E.transpose() * p.H.transpose() * p.R.inverse() * p.H * E;
        const double oracle = Eigen::JacobiSVD<Mat>(X).singularValues()(0) / (1.0 + a);
        EXPECT_NEAR(breve_lambda(m, 0), oracle, 1e-12 * std::max(1.0, oracle));
    }
}

TEST(AlphaClosedForm, ExamplesAndClamping) {
    EXPECT_DOUBLE_EQ(alpha_closed_form(phis(0.0, 2.0, 0.0)).alpha, 1.0);
    EXPECT_DOUBLE_EQ(alpha_closed_form(phis(1.0, 1.0, 1.0)).alpha, 0.75);
    const auto c = alpha_closed_form(phis(-10.0, 1.0, 1.0));
    EXPECT_DOUBLE_EQ(c.phi_hat, -2.0);
    EXPECT_DOUBLE_EQ(c.alpha, 0.0);
    EXPECT_FALSE(c.fallback);
}

TEST(AlphaClosedForm, ZeroDenominatorFallsBackToZero) {
    const auto c = alpha_closed_form(phis(0.0, 0.0, 0.0));
    EXPECT_TRUE(c.fallback);
    EXPECT_EQ(c.alpha, 0.0);
}

TEST(PhiTerms, LambdaZeroKillsLambdaTerms) {
    std::mt19937_64 rng(1);
    const auto ctx = random_context(nominal(), rng, 1);
    const auto p = phi_terms(ctx, 0.0);
    EXPECT_EQ(p.phi0, 0.0);
    EXPECT_EQ(p.phi1, 0.0);
    EXPECT_GT(p.phi2, 0.0);
}

TEST(PhiTerms, ZeroInnovationKillsInnovationTerms) {
    std::mt19937_64 rng(2);
    auto ctx = random_context(uncertain(), rng, 2);
    ctx.b.setZero();
    const auto p = phi_terms(ctx, 2.0 * min_feasible_lambda(*ctx.model, 2));
    EXPECT_EQ(p.phi1, 0.0);
    EXPECT_EQ(p.phi2, 0.0);
    EXPECT_EQ(p.phi3_sum, 0.0);
}

TEST(PhiTerms, Phi2MatchesDenseForm) {
    std::mt19937_64 rng(3);
    for (int t = 0; t < 20; ++t) {
        const NodeId i = static_cast<NodeId>(t % 4);
        const auto ctx = random_context(uncertain(), rng, i);
        const auto& m = *ctx.model;
        const auto& p = m.node(i);
        const double lambda = 1.7 * min_feasible_lambda(m, i);
        const Mat Fa = ctx.F + m.a() * m.pi(i, i) * m.G();
        Mat A(1, 4);
        A << p.H * Fa, p.H;
        Mat S = Mat::Zero(4, 4);
        S.topLeftCorner(2, 2) = ctx.P.inverse() + 2.0 * lambda * Mat::Identity(2, 2);
        S.bottomRightCorner(2, 2) = p.Q.inverse();
        const Mat HE = p.H * m.E(i);
        const Mat R_hat = p.R / (1.0 + m.a()) - HE * HE.transpose() / lambda;
        const double oracle = ctx.b.dot((R_hat + A * S.inverse() * A.transpose()).inverse() * ctx.b);
        const auto phi = phi_terms(ctx, lambda);
        EXPECT_NEAR(phi.phi2, oracle, 1e-10 * std::max(1.0, oracle));
        EXPECT_GE(phi.phi2, 0.0);
        for (double raw : phi.phi3_raw) {
            EXPECT_GE(raw, 0.0);
        }
    }
}

TEST(J2Hat, IsTheAlphaQuadratic) {
    std::mt19937_64 rng(4);
    for (int t = 0; t < 40; ++t) {
        const NodeId i = static_cast<NodeId>(t % 4);
        const auto ctx = random_context(uncertain(), rng, i);
        // At λ̄ = λ_min itself R̂ is singular to 1e-10 and R̂⁻¹ swamps the
        // comparison; sample the interior of the feasible range.
        const double lambda = (1.25 + t % 5) * min_feasible_lambda(*ctx.model, i);
        const auto phi = phi_terms(ctx, lambda);
        const double a_cf = alpha_closed_form(phi).alpha;
        for (double alpha : {0.0, 0.2, 0.5, 0.9, a_cf}) {
            const double direct = j2_hat(ctx, lambda, alpha);
            EXPECT_NEAR(direct, quadratic(phi, alpha), 1e-9 * std::max(1.0, std::abs(direct)));
        }
        if (phi.phi2 + phi.phi3_sum > 0.0) {
            const double curvature = j2_hat(ctx, lambda, 1.0) - 2.0 * j2_hat(ctx, lambda, 0.5) + j2_hat(ctx, lambda, 0.0);
            EXPECT_GT(curvature, 0.0);
        }
    }
}

TEST(J2Hat, ZeroInnovationAndLambdaGiveZero) {
    std::mt19937_64 rng(5);
    auto ctx = random_context(nominal(), rng, 0);
    ctx.b.setZero();
    EXPECT_EQ(j2_hat(ctx, 0.0, 0.4), 0.0);
}

TEST(J2Hat, InfeasibleLambdaIsInfinite) {
    std::mt19937_64 rng(6);
    const auto ctx = random_context(uncertain(), rng, 0);
    EXPECT_TRUE(std::isinf(j2_hat(ctx, 0.5 * min_feasible_lambda(*ctx.model, 0), 0.1)));
}

TEST(J2Hat, ClosedFormAlphaBeatsGrid) {
    std::mt19937_64 rng(7);
    for (int t = 0; t < 100; ++t) {
        const NodeId i = static_cast<NodeId>(t % 4);
        const auto ctx = random_context(uncertain(), rng, i, 0.05 + 0.01 * t);
        const double lambda = 1.5 * min_feasible_lambda(*ctx.model, i);
        const double a_cf = alpha_closed_form(phi_terms(ctx, lambda)).alpha;
        const double j_cf = j2_hat(ctx, lambda, a_cf);
        double grid_min = j_cf;
        for (int g = 0; g <= 100; ++g) {
            grid_min = std::min(grid_min, j2_hat(ctx, lambda, g / 100.0));
        }
        EXPECT_LE(j_cf, grid_min + 1e-9 * std::max(1.0, std::abs(grid_min)));
    }
}

TEST(PhiTerms, PrintedConventionBreaksTheQuadraticIdentity) {
    std::mt19937_64 rng(9);
    const auto ctx = random_context(uncertain(), rng, 1, 1.0);
    const double lambda = 3.0 * min_feasible_lambda(*ctx.model, 1);
    const auto consistent = phi_terms(ctx, lambda, PhiConvention::consistent);
    const auto printed = phi_terms(ctx, lambda, PhiConvention::printed);
    EXPECT_EQ(consistent.phi2, printed.phi2);
    EXPECT_NE(consistent.phi0, printed.phi0);
    EXPECT_NE(consistent.phi1, printed.phi1);
    const double direct = j2_hat(ctx, lambda, 0.5);
    EXPECT_NEAR(quadratic(consistent, 0.5), direct, 1e-9 * std::abs(direct));
    EXPECT_GT(std::abs(quadratic(printed, 0.5) - direct), 1e-6 * std::abs(direct));
}

TEST(JointOptimize, WithoutUncertaintyPicksClosedForm) {
    std::mt19937_64 rng(10);
    TunerConfig cfg;
    for (int t = 0; t < 10; ++t) {
        const auto ctx = random_context(nominal(), rng, static_cast<NodeId>(t % 4));
        const auto res = joint_optimize(ctx, cfg);
        EXPECT_EQ(res.lambda_bar, 0.0);
        const double a_cf = alpha_closed_form(phi_terms(ctx, 0.0)).alpha;
        EXPECT_NEAR(res.alpha, std::min(a_cf, kAlphaCeiling), 0.01);
    }
}

TEST(JointOptimize, FixedAlphaIsEchoed) {
    std::mt19937_64 rng(11);
    const auto ctx = random_context(uncertain(), rng, 2);
    EXPECT_DOUBLE_EQ(joint_optimize(ctx, TunerConfig{}, 0.3).alpha, 0.3);
}

TEST(JointOptimize, NoWorseThanRandomProbes) {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    TunerConfig cfg;
    for (int t = 0; t < 8; ++t) {
        const NodeId i = static_cast<NodeId>(t % 4);
        const auto ctx = random_context(uncertain(), rng, i, 0.5);
        const auto res = joint_optimize(ctx, cfg);
        ASSERT_TRUE(std::isfinite(res.j2));
        EXPECT_NEAR(res.j2, j2_hat(ctx, res.lambda_bar, res.alpha), 1e-12 * std::abs(res.j2));
        const double lmin = min_feasible_lambda(*ctx.model, i);
        for (int p = 0; p < 50; ++p) {
            const double l = lmin * std::pow(cfg.lambda_span, u(rng));
            const double a = u(rng);
            EXPECT_LE(res.j2, j2_hat(ctx, l, a) + 1e-12 * std::abs(res.j2));
        }
    }
}

TEST(JointOptimize, DominatesInflatedRuleWithClosedFormAlpha) {
    std::mt19937_64 rng(13);
    TunerConfig cfg;
    for (int t = 0; t < 12; ++t) {
        const NodeId i = static_cast<NodeId>(t % 4);
        const auto ctx = random_context(uncertain(), rng, i, 0.5);
        const double rule = robustify_noise(*ctx.model, i, (1.0 + cfg.beta) * breve_lambda(*ctx.model, i)).lambda_bar;
        const double a_cf = alpha_closed_form(phi_terms(ctx, rule)).alpha;
        const double baseline = j2_hat(ctx, rule, a_cf);
        ASSERT_TRUE(std::isfinite(baseline));
        EXPECT_LE(joint_optimize(ctx, cfg).j2, baseline + 1e-12 * std::abs(baseline));
    }
}

TEST(ResolveTuning, Guards) {
    std::mt19937_64 rng(14);
    const ScenarioConfig chain = load_config("builtin:paper-chain");
    TunerConfig cfg;
    cfg.alpha.value = 1.0;
    const auto isolated = resolve_tuning(random_context(chain, rng, 0), cfg);
    EXPECT_TRUE(isolated.alpha_forced_zero);
    EXPECT_EQ(isolated.alpha, 0.0);
    const auto clamped = resolve_tuning(random_context(chain, rng, 1), cfg);
    EXPECT_TRUE(clamped.alpha_clamped);
    EXPECT_EQ(clamped.alpha, kAlphaCeiling);
}

TEST(ResolveTuning, InflatedRuleValue) {
    std::mt19937_64 rng(15);
    const auto ctx = random_context(uncertain(), rng, 3);
    TunerConfig cfg;
    const auto res = resolve_tuning(ctx, cfg);
    EXPECT_DOUBLE_EQ(res.lambda_requested, 1.5 * breve_lambda(*ctx.model, 3));
    EXPECT_GE(res.lambda_bar, res.lambda_requested);
    EXPECT_TRUE(r_hat_certified(*ctx.model, 3, res.lambda_bar));
}

TEST(TunerConfig, ValidationNamesField) {
    TunerConfig cfg;
    cfg.beta = 0.0;
    try {
        cfg.validate();
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.path(), "tuner.beta");
    }
    cfg.beta = 0.5;
    cfg.alpha.value = 1.5;
    EXPECT_THROW(cfg.validate(), ConfigError);
}

// The two matrix inequalities the decoupled cost rests on.
TEST(CostBoundInequalities, WeightedSquareSplit) {
    std::mt19937_64 rng(16);
    std::uniform_real_distribution<double> u(0.01, 10.0);
    for (int t = 0; t < 1000; ++t) {
        const Mat P = random_matrix(rng, 3, 2);
        const Mat Q = random_matrix(rng, 3, 2);
        const double beta = u(rng);
        const Mat gap = (1.0 + beta) * P.transpose() * P + (1.0 + 1.0 / beta) * Q.transpose() * Q -
                        (P + Q).transpose() * (P + Q);
        EXPECT_GE(min_eig(gap), -1e-10);
    }
}

TEST(CostBoundInequalities, SumOfSquares) {
    std::mt19937_64 rng(17);
    for (int t = 0; t < 1000; ++t) {
        const int N = 1 + t % 6;
        Mat sum = Mat::Zero(3, 2);
        Mat sq = Mat::Zero(2, 2);
        for (int k = 0; k < N; ++k) {
            const Mat P = random_matrix(rng, 3, 2);
            sum += P;
            sq += P.transpose() * P;
        }
        EXPECT_GE(min_eig(N * sq - sum.transpose() * sum), -1e-10);
    }
}
