#include "rqda/discriminant.h"

#include <cmath>
#include <string>

namespace rqda {

namespace {

// log|S| and S^{-1} for an SPD matrix.
std::pair<double, Matrix> spd_inverse_logdet(const Matrix& s, const char* what) {
    Eigen::LLT<Matrix> llt(s);
    if (llt.info() != Eigen::Success) {
        throw SpdViolation(std::string(what) + ": covariance is not positive definite");
    }
    const double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    Matrix inv = llt.solve(Matrix::Identity(s.rows(), s.cols()));
    inv = 0.5 * (inv + inv.transpose()).eval();
    return {logdet, std::move(inv)};
}

void check_dim(Index got, Index want, const char* what) {
    if (got != want) {
        throw DimensionMismatch(std::string(what) + ": expected dimension " +
                                std::to_string(want) + ", got " + std::to_string(got));
    }
}

// Tr[A B] for symmetric B without forming the product.
double trace_of_product(const Matrix& a, const Matrix& b) {
    return a.cwiseProduct(b.transpose()).sum();
}

}  // namespace

std::string_view to_string(RuleKind kind) {
    switch (kind) {
        case RuleKind::TrueQda: return "true-qda";
        case RuleKind::StandardRqda: return "standard-rqda";
        case RuleKind::ImprovedRqda: return "improved-rqda";
        case RuleKind::Rlda: return "rlda";
    }
    return "unknown";
}

DiscriminantRule::DiscriminantRule(RuleKind kind, double constant, Vector linear, Vector center0,
                                   Matrix weight0, Vector center1, Matrix weight1)
    : kind_(kind),
      dim_(linear.size()),
      constant_(constant),
      linear_(std::move(linear)),
      center0_(std::move(center0)),
      center1_(std::move(center1)),
      weight0_(std::move(weight0)),
      weight1_(std::move(weight1)) {
    if (weight0_.size() > 0) check_dim(weight0_.rows(), dim_, "discriminant rule");
    if (weight1_.size() > 0) check_dim(weight1_.rows(), dim_, "discriminant rule");
}

Score DiscriminantRule::score(const Eigen::Ref<const Vector>& x) const {
    check_dim(x.size(), dim_, "score");
    double w = constant_ + linear_.dot(x);
    if (weight0_.size() > 0) {
        const Vector d = x - center0_;
        w -= 0.5 * d.dot(weight0_ * d);
    }
    if (weight1_.size() > 0) {
        const Vector d = x - center1_;
        w += 0.5 * d.dot(weight1_ * d);
    }
    return {w, kind_};
}

Vector DiscriminantRule::score_batch(const Matrix& X) const {
    if (X.rows() == 0) return Vector(0);
    check_dim(X.cols(), dim_, "score_batch");
    Vector w = (X * linear_).array() + constant_;
    if (weight0_.size() > 0) {
        const Matrix d = X.rowwise() - center0_.transpose();
        w -= 0.5 * (d * weight0_).cwiseProduct(d).rowwise().sum();
    }
    if (weight1_.size() > 0) {
        const Matrix d = X.rowwise() - center1_.transpose();
        w += 0.5 * (d * weight1_).cwiseProduct(d).rowwise().sum();
    }
    return w;
}

DiscriminantRule true_qda_rule(const MixtureModel& model) {
    check_dim(model.class1.dim(), model.class0.dim(), "qda_score_true");
    auto [logdet0, inv0] = spd_inverse_logdet(model.class0.covariance, "qda_score_true");
    auto [logdet1, inv1] = spd_inverse_logdet(model.class1.covariance, "qda_score_true");
    const double c = -0.5 * (logdet0 - logdet1) - model.priors.log_ratio();
    return DiscriminantRule(RuleKind::TrueQda, c, Vector::Zero(model.dim()), model.class0.mean,
                            std::move(inv0), model.class1.mean, std::move(inv1));
}

DiscriminantRule rqda_rule(const FittedStats& fit, const Priors& priors) {
    if (fit.gamma0 != fit.gamma1) {
        throw InvalidArgument("rqda_score: standard R-QDA needs gamma0 == gamma1, got " +
                              std::to_string(fit.gamma0) + " and " + std::to_string(fit.gamma1));
    }
    const double c = 0.5 * (fit.log_det_H0 - fit.log_det_H1) - priors.log_ratio();
    return DiscriminantRule(RuleKind::StandardRqda, c, Vector::Zero(fit.dim()), fit.mu_hat0, fit.H0,
                            fit.mu_hat1, fit.H1);
}

DiscriminantRule improved_rule(const FittedStats& fit, double theta) {
    const double c = -0.5 * theta * std::sqrt(static_cast<double>(fit.dim()));
    return DiscriminantRule(RuleKind::ImprovedRqda, c, Vector::Zero(fit.dim()), fit.mu_hat0,
                            fit.H0, fit.mu_hat1, fit.H1);
}

DiscriminantRule rlda_rule(const PooledFit& pooled, const Priors& priors) {
    const Vector diff = pooled.mu_hat0 - pooled.mu_hat1;
    const Vector w = pooled.H * diff;
    const double c = -0.5 * (pooled.mu_hat0 + pooled.mu_hat1).dot(w) - priors.log_ratio();
    const Index p = diff.size();
    return DiscriminantRule(RuleKind::Rlda, c, w, Vector::Zero(p), Matrix(), Vector::Zero(p),
                            Matrix());
}

Score qda_score_true(const Vector& x, const MixtureModel& model) {
    return true_qda_rule(model).score(x);
}

Score rqda_score(const Vector& x, const FittedStats& fit, const Priors& priors) {
    return rqda_rule(fit, priors).score(x);
}

Score improved_score(const Vector& x, const FittedStats& fit, double theta) {
    return improved_rule(fit, theta).score(x);
}

Score rlda_score(const Vector& x, const PooledFit& pooled, const Priors& priors) {
    return rlda_rule(pooled, priors).score(x);
}

int classify(const Score& score) { return classify(score.value); }

void to_json(nlohmann::json& j, const ErrorReport& r) {
    j = nlohmann::json{{"eps0", r.eps0},
                       {"eps1", r.eps1},
                       {"total", r.total},
                       {"n_test0", r.n_test0},
                       {"n_test1", r.n_test1}};
}

ErrorReport empirical_error(const Vector& scores0, const Vector& scores1, const Priors& priors) {
    if (scores0.size() == 0 || scores1.size() == 0) {
        throw InsufficientSamples("empirical_error: need at least one test point per class, got " +
                                  std::to_string(scores0.size()) + " and " +
                                  std::to_string(scores1.size()));
    }
    ErrorReport r;
    r.n_test0 = scores0.size();
    r.n_test1 = scores1.size();
    for (Index k = 0; k < scores0.size(); ++k) r.errors0 += classify(scores0[k]) != 0;
    for (Index k = 0; k < scores1.size(); ++k) r.errors1 += classify(scores1[k]) != 1;
    r.eps0 = static_cast<double>(r.errors0) / static_cast<double>(r.n_test0);
    r.eps1 = static_cast<double>(r.errors1) / static_cast<double>(r.n_test1);
    r.total = priors.pi0 * r.eps0 + priors.pi1 * r.eps1;
    return r;
}

ScoreMoments conditional_score_moments(const FittedStats& fit, const MixtureModel& model,
                                       double theta, RuleKind kind) {
    check_dim(model.dim(), fit.dim(), "conditional_score_moments");
    const double p = static_cast<double>(fit.dim());
    const double sp = std::sqrt(p);
    const Matrix dH = fit.H1 - fit.H0;
    ScoreMoments m;
    for (int i = 0; i < 2; ++i) {
        const Matrix& sigma = model.cls(i).covariance;
        const Vector& mu = model.cls(i).mean;
        const Vector d0 = mu - fit.mu_hat0;
        const Vector d1 = mu - fit.mu_hat1;
        const double tr0 = trace_of_product(sigma, fit.H0);
        const double tr1 = trace_of_product(sigma, fit.H1);
        const double q0 = d0.dot(fit.H0 * d0);
        const double q1 = d1.dot(fit.H1 * d1);
        const Matrix dhs = dH * sigma;
        const double tr_quad = trace_of_product(dhs, dhs);
        const Vector v = fit.H1 * d1 - fit.H0 * d0;
        const double lin = v.dot(sigma * v);

        switch (kind) {
            case RuleKind::ImprovedRqda:
                m.mean[i] = -theta - tr0 / sp + tr1 / sp - q0 / sp + q1 / sp;
                m.variance[i] = 2.0 / p * tr_quad + 4.0 / p * lin;
                break;
            case RuleKind::StandardRqda:
                if (fit.gamma0 != fit.gamma1) {
                    throw InvalidArgument(
                        "conditional_score_moments: standard R-QDA needs gamma0 == gamma1");
                }
                m.mean[i] = (fit.log_det_H0 - fit.log_det_H1) / (2.0 * sp) - q0 / (2.0 * sp) -
                            model.priors.log_ratio() / sp + q1 / (2.0 * sp) - tr0 / (2.0 * sp) +
                            tr1 / (2.0 * sp);
                m.variance[i] = tr_quad / (2.0 * p) + lin / p;
                break;
            default:
                throw InvalidArgument("conditional_score_moments: unsupported rule kind " +
                                      std::string(to_string(kind)));
        }
    }
    return m;
}

}  // namespace rqda
