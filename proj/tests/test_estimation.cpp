#include "rqda/estimation.h"
#include "rqda/model.h"

#include <gtest/gtest.h>

#include <cmath>

namespace rqda {
namespace {

TEST(SampleMoments, UnbiasedNormalization) {
    Matrix x(2, 1);
    x << 0.0, 2.0;
    const SampleMoments m = sample_moments(x);
    EXPECT_DOUBLE_EQ(m.mean[0], 1.0);
    EXPECT_DOUBLE_EQ(m.covariance(0, 0), 2.0);
}

TEST(SampleMoments, HandComputedTwoByTwo) {
    Matrix x(3, 2);
    x << 1.0, 2.0, 3.0, 0.0, 5.0, 4.0;
    const SampleMoments m = sample_moments(x);
    EXPECT_DOUBLE_EQ(m.mean[0], 3.0);
    EXPECT_DOUBLE_EQ(m.mean[1], 2.0);
    // deviations (-2, 0), (0, -2), (2, 2)
    EXPECT_DOUBLE_EQ(m.covariance(0, 0), 4.0);
    EXPECT_DOUBLE_EQ(m.covariance(1, 1), 4.0);
    EXPECT_DOUBLE_EQ(m.covariance(0, 1), 2.0);
    EXPECT_DOUBLE_EQ(m.covariance(1, 0), 2.0);
}

TEST(SampleMoments, NeedsTwoRows) {
    EXPECT_THROW(sample_moments(Matrix::Ones(1, 3)), InsufficientSamples);
}

TEST(Resolvent, InvertsRegularizedCovariance) {
    Rng rng(3);
    const Matrix a = rng.normal_matrix(8, 5);
    const Matrix s = a * a.transpose() / 5.0;  // rank deficient
    const Resolvent r = regularized_resolvent_with_logdet(s, 0.7);
    const Matrix m = Matrix::Identity(8, 8) + 0.7 * s;
    EXPECT_LT((r.H * m - Matrix::Identity(8, 8)).norm(), 1e-12);
    EXPECT_NEAR(r.log_det, -std::log(m.determinant()), 1e-12);
    EXPECT_LT((r.H - r.H.transpose()).norm(), 1e-15);
}

TEST(Resolvent, ZeroRegularizerIsIdentity) {
    const Matrix s = Matrix::Identity(3, 3) * 5.0;
    const Resolvent r = regularized_resolvent_with_logdet(s, 0.0);
    EXPECT_EQ(r.H, Matrix::Identity(3, 3));
    EXPECT_EQ(r.log_det, 0.0);
}

TEST(Resolvent, ErrorCases) {
    EXPECT_THROW(regularized_resolvent(Matrix::Identity(2, 3), 1.0), DimensionMismatch);
    EXPECT_THROW(regularized_resolvent(Matrix::Identity(2, 2), -1.0), InvalidArgument);
    EXPECT_THROW(regularized_resolvent(-Matrix::Identity(2, 2), 2.0), SpdViolation);
}

TEST(Resolvent, EigenvaluesInUnitInterval) {
    Rng rng(9);
    const Matrix a = rng.normal_matrix(20, 10);
    const Matrix h = regularized_resolvent(a * a.transpose(), 2.0);
    Eigen::SelfAdjointEigenSolver<Matrix> es(h);
    EXPECT_GT(es.eigenvalues().minCoeff(), 0.0);
    EXPECT_LE(es.eigenvalues().maxCoeff(), 1.0 + 1e-12);
}

TrainingSet toy_training(Index p, Index n0, Index n1, std::uint64_t seed) {
    Rng rng(seed);
    Matrix x1 = rng.normal_matrix(n1, p);
    x1.array() += 1.0;
    return {rng.normal_matrix(n0, p), x1};
}

TEST(Fit, StatisticsPerClass) {
    const TrainingSet t = toy_training(4, 10, 15, 1);
    const FittedStats f = fit(t, 0.5, 2.0);
    EXPECT_EQ(f.n0, 10);
    EXPECT_EQ(f.n1, 15);
    EXPECT_LT((f.mu_hat1 - t.X1.colwise().mean().transpose()).norm(), 1e-14);
    EXPECT_LT((f.H1 - regularized_resolvent(f.sigma_hat1, 2.0)).norm(), 1e-14);
    EXPECT_DOUBLE_EQ(f.gamma(0), 0.5);

    FittedStats g = f;
    g.set_gamma(1, 0.5);
    EXPECT_LT((g.H1 - regularized_resolvent(f.sigma_hat1, 0.5)).norm(), 1e-14);

    const FittedStats s = f.swapped();
    EXPECT_EQ(s.H0, f.H1);
    EXPECT_EQ(s.n0, f.n1);
    EXPECT_EQ(s.mu_hat1, f.mu_hat0);
}

TEST(Fit, ValidatesTrainingSet) {
    TrainingSet t{Matrix::Ones(3, 2), Matrix::Ones(3, 3)};
    EXPECT_THROW(fit(t, 1.0, 1.0), DimensionMismatch);
    t = {Matrix::Ones(1, 2), Matrix::Ones(3, 2)};
    EXPECT_THROW(fit(t, 1.0, 1.0), InsufficientSamples);
}

TEST(Fit, MomentsOnlyLeavesResolventsEmpty) {
    const FittedStats f = fit_moments(toy_training(3, 5, 6, 2));
    EXPECT_EQ(f.H0.size(), 0);
    EXPECT_EQ(f.sigma_hat0.rows(), 3);
}

TEST(FitPooled, WeightsByDegreesOfFreedom) {
    const TrainingSet t = toy_training(3, 6, 11, 4);
    const FittedStats f = fit(t, 1.0, 1.0);
    const PooledFit pf = fit_pooled(f, 1.0);
    // Pooled scatter of the centered blocks over n - 2.
    const Matrix c0 = t.X0.rowwise() - f.mu_hat0.transpose();
    const Matrix c1 = t.X1.rowwise() - f.mu_hat1.transpose();
    const Matrix expect = (c0.transpose() * c0 + c1.transpose() * c1) / 15.0;
    EXPECT_LT((pf.sigma_pooled - expect).norm(), 1e-13);
    EXPECT_LT((pf.H - regularized_resolvent(expect, 1.0)).norm(), 1e-13);
}

}  // namespace
}  // namespace rqda
