#pragma once

#include "rqda/types.h"

namespace rqda {

/// Labeled training data, one row per observation.
struct TrainingSet {
    Matrix X0;
    Matrix X1;

    Index dim() const { return X0.cols(); }
    Index n0() const { return X0.rows(); }
    Index n1() const { return X1.rows(); }
    const Matrix& block(int i) const { return i == 0 ? X0 : X1; }
    void validate() const;
    TrainingSet swapped() const { return {X1, X0}; }
};

struct SampleMoments {
    Vector mean;
    Matrix covariance;
};

/// Column mean and unbiased (n - 1) sample covariance.
SampleMoments sample_moments(const Matrix& X);

/// H(gamma) = (I + gamma * S)^{-1} together with log|H|.
struct Resolvent {
    Matrix H;
    double gamma = 0.0;
    double log_det = 0.0;  ///< log|H| = -sum log diag(L)^2, L the Cholesky factor of I + gamma S
};

Resolvent regularized_resolvent_with_logdet(const Matrix& sigma_hat, double gamma);

Matrix regularized_resolvent(const Matrix& sigma_hat, double gamma);

/// Per-class plug-in statistics and their regularized resolvents.
struct FittedStats {
    Vector mu_hat0, mu_hat1;
    Matrix sigma_hat0, sigma_hat1;
    double gamma0 = 0.0, gamma1 = 0.0;
    Matrix H0, H1;
    double log_det_H0 = 0.0, log_det_H1 = 0.0;
    Index n0 = 0, n1 = 0;

    Index dim() const { return mu_hat0.size(); }
    const Vector& mu_hat(int i) const { return i == 0 ? mu_hat0 : mu_hat1; }
    const Matrix& sigma_hat(int i) const { return i == 0 ? sigma_hat0 : sigma_hat1; }
    const Matrix& H(int i) const { return i == 0 ? H0 : H1; }
    double gamma(int i) const { return i == 0 ? gamma0 : gamma1; }
    Index n(int i) const { return i == 0 ? n0 : n1; }

    /// Recomputes the resolvent of class i for a new regularizer.
    void set_gamma(int i, double gamma);
    FittedStats swapped() const;
};

FittedStats fit(const TrainingSet& train, double gamma0, double gamma1);

/// Sample means and covariances only; the resolvents are left empty until
/// set_gamma() is called for each class.
FittedStats fit_moments(const TrainingSet& train);

/// Pooled-covariance statistics for the R-LDA baseline.
struct PooledFit {
    Vector mu_hat0, mu_hat1;
    Matrix sigma_pooled;  ///< ((n0-1) S0 + (n1-1) S1) / (n - 2)
    double gamma = 0.0;
    Matrix H;
};

PooledFit fit_pooled(const FittedStats& stats, double gamma);

}  // namespace rqda
