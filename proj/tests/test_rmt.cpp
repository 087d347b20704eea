#include "rqda/discriminant.h"
#include "rqda/estimation.h"
#include "rqda/rmt.h"

#include <gtest/gtest.h>

#include <cmath>

namespace rqda {
namespace {

// Positive root of gamma d^2 + d (1 + gamma s - c gamma s) - c s = 0, the
// fixed point for Sigma = s I and c = p / n.
double isotropic_delta(double s, double c, double gamma) {
    const double b = 1.0 + gamma * s - c * gamma * s;
    return (-b + std::sqrt(b * b + 4.0 * gamma * c * s)) / (2.0 * gamma);
}

TEST(DeltaSolver, IsotropicClosedForm) {
    for (double gamma : {0.01, 0.3, 1.0, 10.0}) {
        const auto eq = solve_delta(4.0 * Matrix::Identity(60, 60), 30, gamma);
        EXPECT_NEAR(eq.delta, isotropic_delta(4.0, 2.0, gamma), 1e-10) << gamma;
        const auto sc = eigen_delta_solver(Vector::Constant(1, 4.0), 30, gamma, {},
                                           Vector::Constant(1, 60.0));
        EXPECT_NEAR(sc.delta, eq.delta, 1e-10);
        EXPECT_NEAR(sc.phi, eq.phi, 1e-10);
        EXPECT_GT(eq.stability(), 0.0);
    }
    EXPECT_NEAR(isotropic_delta(4.0, 2.0, 1.0), (3.0 + std::sqrt(41.0)) / 2.0, 1e-12);
}

TEST(DeltaSolver, SatisfiesFixedPointOnGeneralSpectrum) {
    Rng rng(4);
    const Matrix a = rng.normal_matrix(25, 40);
    const Matrix sigma = a * a.transpose() / 40.0 + 0.1 * Matrix::Identity(25, 25);
    const auto eq = solve_delta(sigma, 15, 0.7);
    const Matrix t = (Matrix::Identity(25, 25) + 0.7 / (1.0 + 0.7 * eq.delta) * sigma).inverse();
    EXPECT_NEAR(eq.delta, (sigma * t).trace() / 15.0, 1e-10);
    EXPECT_LT((eq.T - t).norm(), 1e-10);
    Eigen::SelfAdjointEigenSolver<Matrix> es(sigma);
    EXPECT_NEAR(eigen_delta_solver(es.eigenvalues(), 15, 0.7).delta, eq.delta, 1e-9);
}

TEST(DeltaSolver, RejectsBadInputs) {
    EXPECT_THROW(solve_delta(Matrix::Identity(3, 3), 0, 1.0), InvalidArgument);
    EXPECT_THROW(solve_delta(Matrix::Identity(3, 3), 5, -1.0), InvalidArgument);
    EXPECT_THROW(solve_delta(Matrix::Identity(3, 4), 5, 1.0), DimensionMismatch);
    EXPECT_THROW(eigen_delta_solver(Vector::Ones(3), 5, 1.0, {}, Vector::Ones(2)),
                 DimensionMismatch);
    DeltaSolverOptions opt;
    opt.max_iterations = 1;
    opt.damping = 0.01;
    EXPECT_THROW(solve_delta(4.0 * Matrix::Identity(50, 50), 10, 1.0, opt), ConvergenceError);
}

TEST(Gamma1, WorkedExample) {
    // Sigma0 = 4 I, p = 1000, n0 = 500, n1 = 1000, gamma0 = 1.
    const double delta0 = (3.0 + std::sqrt(41.0)) / 2.0;
    const double g1 = gamma1_from_delta(delta0, 500, 1000, 1.0);
    EXPECT_NEAR(g1, 1.0 / (1.0 + 0.5 * delta0), 1e-14);
    EXPECT_NEAR(g1, 0.29844, 1e-5);
    EXPECT_NEAR(gamma1_theoretical(4.0 * Matrix::Identity(1000, 1000), 500, 1000, 1.0), g1, 1e-9);
    EXPECT_DOUBLE_EQ(gamma1_from_delta(delta0, 700, 700, 0.37), 0.37);
    EXPECT_THROW(gamma1_from_delta(10.0, 1000, 100, 1.0), InvalidRegularizer);
}

ScenarioConfig small_scenario() {
    ScenarioConfig c;
    c.p = 80;
    c.n0 = 40;
    c.n1 = 80;
    return c;
}

TEST(SharedSpectrum, MatchesDenseSpectrumOfScenario) {
    const ScenarioConfig c = small_scenario();
    const MixtureModel m = make_scenario(c);
    const SharedSpectrum s = scenario_spectrum(c, m);
    EXPECT_DOUBLE_EQ(s.multiplicity.sum(), 80.0);
    EXPECT_NEAR(s.mean_weight.sum(), 9.0, 1e-10);
    EXPECT_NEAR((s.multiplicity.array() * s.lambda[1].array()).sum(), m.class1.covariance.trace(),
                1e-9);
    EXPECT_TRUE(find_shared_spectrum(m).has_value());

    ScenarioConfig corr = c;
    corr.base_correlation = 0.3;
    EXPECT_THROW(scenario_spectrum(corr, make_scenario(corr)), InvalidArgument);
}

TEST(SharedSpectrum, DetectsNonCommutingCovariances) {
    MixtureModel m;
    m.class0 = {Vector::Zero(2), Matrix::Identity(2, 2)};
    m.class0.covariance(0, 0) = 2.0;
    m.class1 = {Vector::Ones(2), Matrix::Identity(2, 2)};
    m.class1.covariance(0, 1) = m.class1.covariance(1, 0) = 0.5;
    EXPECT_FALSE(find_shared_spectrum(m).has_value());
}

TEST(AsymptoticError, SpectralAndDensePathsAgree) {
    const ScenarioConfig c = small_scenario();
    const MixtureModel m = make_scenario(c);
    const SharedSpectrum s = scenario_spectrum(c, m);
    for (double theta : {-0.5, 0.0, 0.8}) {
        const AsymptoticError a = asymptotic_error(m, s, 40, 80, 0.9, 0.4, theta);
        const AsymptoticError b = asymptotic_error_dense(m, 40, 80, 0.9, 0.4, theta);
        EXPECT_TRUE(a.used_shared_spectrum);
        EXPECT_FALSE(b.used_shared_spectrum);
        for (int i = 0; i < 2; ++i) {
            EXPECT_NEAR(a.xi_bar[i], b.xi_bar[i], 1e-8);
            EXPECT_NEAR(a.b_bar[i], b.b_bar[i], 1e-8);
            EXPECT_NEAR(a.B_bar[i], b.B_bar[i], 1e-8);
            EXPECT_NEAR(a.r_bar[i], b.r_bar[i], 1e-8);
        }
        EXPECT_NEAR(a.total, b.total, 1e-8);
    }
}

TEST(AsymptoticError, TracksMonteCarloError) {
    ScenarioConfig c;
    c.p = 160;
    c.n0 = 80;
    c.n1 = 160;
    c.test0 = 4000;
    c.test1 = 4000;
    const MixtureModel m = make_scenario(c);
    const double gamma0 = 1.0;
    const double gamma1 = gamma1_theoretical(m.class0.covariance, c.n0, c.n1, gamma0);
    const double theta = theta_star_theoretical(m, c.n0, c.n1, gamma0, gamma1).theta;
    const AsymptoticError theory = asymptotic_error(m, c.n0, c.n1, gamma0, gamma1, theta);

    Rng rng(c.seed, 11);
    const int reps = 4;
    double measured = 0.0;
    for (int r = 0; r < reps; ++r) {
        const TrainingSet train{sample_class(m.class0, c.n0, rng), sample_class(m.class1, c.n1, rng)};
        const DiscriminantRule rule = improved_rule(fit(train, gamma0, gamma1), theta);
        const Vector s0 = rule.score_batch(sample_class(m.class0, c.test0, rng));
        const Vector s1 = rule.score_batch(sample_class(m.class1, c.test1, rng));
        measured += empirical_error(s0, s1, m.priors).total / reps;
    }
    EXPECT_NEAR(measured, theory.total, 0.03);
}

TEST(BiasDesign, PublishedFormulaAndObjective) {
    const BiasDesign d{0.0, -1.6, -1.0, 0.9};
    const Priors equal{0.5, 0.5};
    EXPECT_DOUBLE_EQ(bias_from_components(d.beta0, d.beta1, d.alpha, equal), 0.3);

    const Priors skew{0.3, 0.7};
    const double log_ratio = std::log(0.7 / 0.3);
    const double theta = bias_from_components(d.beta0, d.beta1, d.alpha, skew);
    EXPECT_NEAR(theta, 0.3 + 2.0 * 0.81 / 2.6 * log_ratio, 1e-14);
    EXPECT_NEAR(bias_stationarity_residual(theta, d, skew), 0.0, 1e-12);

    // Direct minimisation of the objective on a fine grid lands on the
    // alpha^2 (not 2 alpha^2) coefficient.
    double best = 0.0, best_val = 1e300;
    for (int k = 0; k <= 400000; ++k) {
        const double t = -3.0 + 6.0 * k / 400000.0;
        const double v = bias_objective(t, d, skew);
        if (v < best_val) best_val = v, best = t;
    }
    EXPECT_NEAR(best, 0.3 + 0.81 / 2.6 * log_ratio, 1e-4);
    EXPECT_GT(bias_objective(theta, d, skew), best_val);
    EXPECT_THROW(bias_from_components(1.0, -1.0, 0.5, skew), DegenerateDesign);
}

TEST(BiasDesign, TheoreticalComponents) {
    const ScenarioConfig c = small_scenario();
    const MixtureModel m = make_scenario(c);
    const BiasDesign d = theta_star_theoretical(m, 40, 80, 1.0, 0.5);
    const AsymptoticError e = asymptotic_error(m, 40, 80, 1.0, 0.5, d.theta);
    EXPECT_NEAR(d.alpha, std::sqrt(2.0 * e.B_bar[0]), 1e-12);
    // Both conditional arguments reduce to (beta + theta)/alpha type forms.
    EXPECT_NEAR(e.xi_bar[0] - e.b_bar[0], d.beta0 + d.theta, 1e-10);
    EXPECT_NEAR(-(e.xi_bar[1] - e.b_bar[1]), d.beta1 - d.theta, 1e-10);
}

}  // namespace
}  // namespace rqda
