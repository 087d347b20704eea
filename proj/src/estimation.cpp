#include "rqda/estimation.h"

#include <cmath>
#include <string>

namespace rqda {

void TrainingSet::validate() const {
    if (X0.cols() != X1.cols()) {
        throw DimensionMismatch("training set: class blocks have " + std::to_string(X0.cols()) +
                                " and " + std::to_string(X1.cols()) + " columns");
    }
    if (X0.cols() < 1) throw InvalidArgument("training set: no feature columns");
    if (X0.rows() < 2 || X1.rows() < 2) {
        throw InsufficientSamples("training set: need at least 2 rows per class, got n0=" +
                                  std::to_string(X0.rows()) + " n1=" + std::to_string(X1.rows()));
    }
}

SampleMoments sample_moments(const Matrix& X) {
    const Index n = X.rows();
    if (n < 2) {
        throw InsufficientSamples("sample_moments: need n >= 2 rows, got " + std::to_string(n));
    }
    SampleMoments m;
    m.mean = X.colwise().mean().transpose();
    const Matrix centered = X.rowwise() - m.mean.transpose();
    m.covariance = Matrix::Zero(X.cols(), X.cols());
    m.covariance.selfadjointView<Eigen::Lower>().rankUpdate(centered.transpose(),
                                                           1.0 / static_cast<double>(n - 1));
    m.covariance = m.covariance.selfadjointView<Eigen::Lower>();
    return m;
}

Resolvent regularized_resolvent_with_logdet(const Matrix& sigma_hat, double gamma) {
    if (sigma_hat.rows() != sigma_hat.cols()) {
        throw DimensionMismatch("regularized_resolvent: covariance is not square");
    }
    if (!(gamma >= 0.0) || !std::isfinite(gamma)) {
        throw InvalidArgument("regularized_resolvent: gamma must be finite and >= 0, got " +
                              std::to_string(gamma));
    }
    const Index p = sigma_hat.rows();
    Resolvent r;
    r.gamma = gamma;
    if (gamma == 0.0) {
        r.H = Matrix::Identity(p, p);
        return r;
    }
    Matrix a = gamma * sigma_hat;
    a.diagonal().array() += 1.0;
    Eigen::LLT<Matrix> llt(a);
    if (llt.info() != Eigen::Success) {
        throw SpdViolation("regularized_resolvent: I + gamma*S is not positive definite (gamma=" +
                           std::to_string(gamma) + ", min diag=" +
                           std::to_string(a.diagonal().minCoeff()) + ")");
    }
    const Vector diag = llt.matrixLLT().diagonal();
    r.log_det = -2.0 * diag.array().log().sum();
    r.H = llt.solve(Matrix::Identity(p, p));
    r.H = 0.5 * (r.H + r.H.transpose()).eval();
    return r;
}

Matrix regularized_resolvent(const Matrix& sigma_hat, double gamma) {
    return regularized_resolvent_with_logdet(sigma_hat, gamma).H;
}

void FittedStats::set_gamma(int i, double gamma) {
    Resolvent r = regularized_resolvent_with_logdet(sigma_hat(i), gamma);
    if (i == 0) {
        gamma0 = gamma;
        H0 = std::move(r.H);
        log_det_H0 = r.log_det;
    } else {
        gamma1 = gamma;
        H1 = std::move(r.H);
        log_det_H1 = r.log_det;
    }
}

FittedStats FittedStats::swapped() const {
    FittedStats s;
    s.mu_hat0 = mu_hat1;
    s.mu_hat1 = mu_hat0;
    s.sigma_hat0 = sigma_hat1;
    s.sigma_hat1 = sigma_hat0;
    s.gamma0 = gamma1;
    s.gamma1 = gamma0;
    s.H0 = H1;
    s.H1 = H0;
    s.log_det_H0 = log_det_H1;
    s.log_det_H1 = log_det_H0;
    s.n0 = n1;
    s.n1 = n0;
    return s;
}

FittedStats fit(const TrainingSet& train, double gamma0, double gamma1) {
    FittedStats f = fit_moments(train);
    f.set_gamma(0, gamma0);
    f.set_gamma(1, gamma1);
    return f;
}

FittedStats fit_moments(const TrainingSet& train) {
    train.validate();
    FittedStats f;
    SampleMoments m0 = sample_moments(train.X0);
    SampleMoments m1 = sample_moments(train.X1);
    f.mu_hat0 = std::move(m0.mean);
    f.mu_hat1 = std::move(m1.mean);
    f.sigma_hat0 = std::move(m0.covariance);
    f.sigma_hat1 = std::move(m1.covariance);
    f.n0 = train.n0();
    f.n1 = train.n1();
    return f;
}

PooledFit fit_pooled(const FittedStats& stats, double gamma) {
    PooledFit pf;
    pf.mu_hat0 = stats.mu_hat0;
    pf.mu_hat1 = stats.mu_hat1;
    const double w0 = static_cast<double>(stats.n0 - 1);
    const double w1 = static_cast<double>(stats.n1 - 1);
    pf.sigma_pooled = (w0 * stats.sigma_hat0 + w1 * stats.sigma_hat1) / (w0 + w1);
    pf.gamma = gamma;
    pf.H = regularized_resolvent(pf.sigma_pooled, gamma);
    return pf;
}

}  // namespace rqda
