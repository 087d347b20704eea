#include "rqda/discriminant.h"
#include "rqda/estimation.h"
#include "rqda/gestim.h"
#include "rqda/rmt.h"

#include <gtest/gtest.h>

#include <cmath>

namespace rqda {
namespace {

double isotropic_delta(double s, double c, double gamma) {
    const double b = 1.0 + gamma * s - c * gamma * s;
    return (-b + std::sqrt(b * b + 4.0 * gamma * c * s)) / (2.0 * gamma);
}

TEST(DeltaHat, IdentityResolventGivesZero) {
    EXPECT_DOUBLE_EQ(delta_hat(Matrix::Identity(30, 30), 20, 30, 1.5), 0.0);
}

TEST(DeltaHat, HandComputed) {
    // p/n = 2, Tr[H]/n = 1.5: (2 - 1.5) / (1 - 2 + 1.5) / gamma
    EXPECT_DOUBLE_EQ(delta_hat_from_trace(15.0, 10, 20, 0.5), 2.0);
}

TEST(DeltaHat, Errors) {
    EXPECT_THROW(delta_hat(Matrix::Identity(3, 3), 5, 3, 0.0), InvalidArgument);
    EXPECT_THROW(delta_hat(Matrix::Identity(3, 3), 0, 3, 1.0), InvalidArgument);
    EXPECT_THROW(delta_hat(Matrix::Zero(10, 10), 5, 10, 1.0), DegenerateEstimate);
}

TEST(DeltaHat, ConsistentForIsotropicCovariance) {
    // Sigma = 4 I, p = 1000, n = 500. The sample covariance has n - 1
    // degrees of freedom, so the target is the fixed point at p / (n - 1).
    const Index p = 1000, n = 500, n1 = 1000;
    const double target = isotropic_delta(4.0, 1000.0 / 499.0, 1.0);
    Rng rng(31);
    double mean_delta = 0.0, mean_g1 = 0.0;
    const int draws = 4;
    for (int d = 0; d < draws; ++d) {
        const Matrix x = 2.0 * rng.normal_matrix(n, p);
        const Matrix h = regularized_resolvent(sample_moments(x).covariance, 1.0);
        mean_delta += delta_hat(h, n - 1, p, 1.0) / draws;
        mean_g1 += gamma1_hat(h, n, n1, 1.0) / draws;
    }
    EXPECT_NEAR(mean_delta, target, 0.01 * target);
    const double g1 = gamma1_from_delta(target, n - 1, n1 - 1, 1.0);
    EXPECT_NEAR(mean_g1, g1, 0.01 * g1);
    // Close to the n-based worked value 0.29844 at this size.
    EXPECT_NEAR(mean_g1, 0.29844, 0.02 * 0.29844);
}

TEST(Gamma1Hat, BalancedAndInvalid) {
    EXPECT_DOUBLE_EQ(gamma1_hat(Matrix::Identity(4, 4), 50, 50, 0.3), 0.3);
    EXPECT_THROW(gamma1_hat_from_delta(5.0, 500, 100, 1.0), InvalidRegularizer);
}

struct Drawn {
    MixtureModel model;
    FittedStats fit;
};

Drawn draw(const ScenarioConfig& c, double gamma0, std::uint64_t stream) {
    Drawn d{make_scenario(c), {}};
    Rng rng(c.seed, stream);
    const TrainingSet train{sample_class(d.model.class0, c.n0, rng),
                            sample_class(d.model.class1, c.n1, rng)};
    d.fit = fit_moments(train);
    d.fit.set_gamma(0, gamma0);
    d.fit.set_gamma(1, gamma1_hat(d.fit.H0, c.n0, c.n1, gamma0));
    return d;
}

TEST(ThetaHat, EqualPriorsIsHalfGap) {
    ScenarioConfig c;
    c.p = 60;
    c.n0 = 30;
    c.n1 = 60;
    const Drawn d = draw(c, 1.0, 1);
    const BiasEstimate b = theta_hat(d.fit, {0.5, 0.5});
    EXPECT_DOUBLE_EQ(b.theta_hat, 0.5 * (b.beta_hat1 - b.beta_hat0));
    EXPECT_NEAR(b.alpha_hat * b.alpha_hat, 2.0 * b.B_hat0, 1e-12);
}

TEST(GEstimator, TracksTheoryAndTestError) {
    ScenarioConfig c;
    c.p = 200;
    c.n0 = 100;
    c.n1 = 200;
    c.test0 = 5000;
    c.test1 = 5000;
    double g_mean = 0.0, theory_mean = 0.0, empirical_mean = 0.0;
    const int reps = 3;
    for (int r = 0; r < reps; ++r) {
        const Drawn d = draw(c, 1.0, 100 + r);
        const GEstimate g = g_estimator_error(d.fit, d.model.priors);
        EXPECT_NEAR(g.gamma1_hat, d.fit.gamma1, 1e-12);
        const AsymptoticError th =
            asymptotic_error(d.model, c.n0, c.n1, d.fit.gamma0, d.fit.gamma1, g.theta_hat);
        Rng rng(c.seed, 900 + r);
        const DiscriminantRule rule = improved_rule(d.fit, g.theta_hat);
        const ErrorReport e =
            empirical_error(rule.score_batch(sample_class(d.model.class0, c.test0, rng)),
                            rule.score_batch(sample_class(d.model.class1, c.test1, rng)),
                            d.model.priors);
        g_mean += g.total_hat / reps;
        theory_mean += th.total / reps;
        empirical_mean += e.total / reps;
    }
    EXPECT_NEAR(g_mean, empirical_mean, 0.04);
    EXPECT_NEAR(theory_mean, empirical_mean, 0.02);
}

double null_gap(Index p) {
    const Index n = p * 4 / 5;
    const int draws = 20;
    double gap = 0.0;
    for (int d = 0; d < draws; ++d) {
        Rng rng(77, static_cast<std::uint64_t>(d));
        const TrainingSet train{rng.normal_matrix(n, p), rng.normal_matrix(n, p)};
        gap += (0.5 - g_estimator_error(fit(train, 1.0, 1.0), {0.5, 0.5}).total_hat) / draws;
    }
    return gap;
}

TEST(GEstimator, IdenticalClassesApproachChance) {
    // Any rule errs half the time here; the estimate's finite-p offset
    // shrinks like 1/sqrt(p).
    const double small = null_gap(100);
    const double large = null_gap(400);
    EXPECT_GT(large, 0.0);
    EXPECT_LT(large, 0.6 * small);
    EXPECT_LT(large, 0.08);
}

TEST(GEstimator, PureAndConsistentWithThetaOverload) {
    ScenarioConfig c;
    c.p = 40;
    c.n0 = 25;
    c.n1 = 50;
    const Drawn d = draw(c, 0.5, 3);
    const FittedStats before = d.fit;
    const GEstimate a = g_estimator_error(d.fit, d.model.priors);
    const GEstimate b = g_estimator_error(d.fit, a.theta_hat, d.model.priors);
    EXPECT_EQ(a.total_hat, b.total_hat);
    EXPECT_EQ(a.theta, a.theta_hat);
    EXPECT_EQ(d.fit.H0, before.H0);
    EXPECT_EQ(d.fit.H1, before.H1);

    const BiasEstimate t = theta_hat(d.fit, d.model.priors);
    EXPECT_EQ(t.theta_hat, a.theta_hat);

    // A larger bias pushes points towards class 1.
    const GEstimate lo = g_estimator_error(d.fit, a.theta_hat - 1.0, d.model.priors);
    const GEstimate hi = g_estimator_error(d.fit, a.theta_hat + 1.0, d.model.priors);
    EXPECT_LT(lo.eps_hat[0], hi.eps_hat[0]);
    EXPECT_GT(lo.eps_hat[1], hi.eps_hat[1]);

    const nlohmann::json j = a;
    EXPECT_DOUBLE_EQ(j.at("total_hat").get<double>(), a.total_hat);
}

}  // namespace
}  // namespace rqda
