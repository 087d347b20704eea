#pragma once

#include "rqda/estimation.h"
#include "rqda/model.h"
#include "rqda/types.h"

#include <json.hpp>

#include <array>
#include <string_view>

namespace rqda {

enum class RuleKind { TrueQda, StandardRqda, ImprovedRqda, Rlda };

std::string_view to_string(RuleKind kind);

struct Score {
    double value = 0.0;
    RuleKind kind = RuleKind::TrueQda;
};

/// A two-class discriminant of the form
///
///   W(x) = c + w^T x - 1/2 (x - a0)^T P0 (x - a0) + 1/2 (x - a1)^T P1 (x - a1)
///
/// Every rule in this library is an instance: the three QDA variants use
/// (P0, P1) = (inverse covariance or resolvent of each class) and w = 0;
/// R-LDA is purely linear. Positive W votes for class 0.
class DiscriminantRule {
public:
    DiscriminantRule(RuleKind kind, double constant, Vector linear, Vector center0, Matrix weight0,
                     Vector center1, Matrix weight1);

    RuleKind kind() const { return kind_; }
    Index dim() const { return dim_; }
    double constant() const { return constant_; }

    Score score(const Eigen::Ref<const Vector>& x) const;
    /// One score per row of X (m x p).
    Vector score_batch(const Matrix& X) const;

private:
    RuleKind kind_;
    Index dim_;
    double constant_;
    Vector linear_;
    Vector center0_, center1_;
    Matrix weight0_, weight1_;
};

/// Bayes QDA with the true statistics.
DiscriminantRule true_qda_rule(const MixtureModel& model);
/// Plug-in R-QDA with one shared regularizer (fit.gamma0 must equal fit.gamma1).
DiscriminantRule rqda_rule(const FittedStats& fit, const Priors& priors);
/// Two-regularizer R-QDA with bias -theta sqrt(p) / 2 in place of the
/// log-determinant and prior terms.
DiscriminantRule improved_rule(const FittedStats& fit, double theta);
/// Regularized LDA on the pooled covariance.
DiscriminantRule rlda_rule(const PooledFit& pooled, const Priors& priors);

Score qda_score_true(const Vector& x, const MixtureModel& model);
Score rqda_score(const Vector& x, const FittedStats& fit, const Priors& priors);
Score improved_score(const Vector& x, const FittedStats& fit, double theta);
Score rlda_score(const Vector& x, const PooledFit& pooled, const Priors& priors);

/// 0 iff the score is strictly positive; ties go to class 1.
int classify(const Score& score);
inline int classify(double value) { return value > 0.0 ? 0 : 1; }

struct ErrorReport {
    double eps0 = 0.0;
    double eps1 = 0.0;
    double total = 0.0;
    Index n_test0 = 0;
    Index n_test1 = 0;
    Index errors0 = 0;
    Index errors1 = 0;
};

void to_json(nlohmann::json& j, const ErrorReport& r);

/// Misclassification rates from the scores of test points whose true class
/// is 0 (scores0) and 1 (scores1); total = pi0 eps0 + pi1 eps1.
ErrorReport empirical_error(const Vector& scores0, const Vector& scores1, const Priors& priors);

/// Conditional mean and variance of the normalized score over the test
/// distribution of each class, given the training data.
///
/// ImprovedRqda: moments of (2/sqrt(p)) W with bias theta.
/// StandardRqda: moments of (1/sqrt(p)) W with the priors of `model`;
/// theta is ignored and fit.gamma0 must equal fit.gamma1.
struct ScoreMoments {
    std::array<double, 2> mean{};
    std::array<double, 2> variance{};
};

ScoreMoments conditional_score_moments(const FittedStats& fit, const MixtureModel& model,
                                       double theta, RuleKind kind);

}  // namespace rqda
