#pragma once

#include "rqda/model.h"
#include "rqda/types.h"

#include <array>
#include <optional>
#include <vector>

namespace rqda {

/// Damped fixed-point iteration delta <- (1 - w) delta + w F(delta) for
///   F(delta) = (1/n) Tr[Sigma (I + gamma/(1 + gamma delta) Sigma)^{-1}].
struct DeltaSolverOptions {
    double damping = 0.5;
    /// Stop once |F(delta) - delta| <= tolerance * max(1, delta).
    double tolerance = 1e-12;
    int max_iterations = 10000;
    /// Starting point; defaults to (1/n) Tr[Sigma].
    std::optional<double> initial;
};

/// Scalar part of the deterministic equivalents of one class.
struct ScalarEquivalents {
    double delta = 0.0;
    double phi = 0.0;        ///< (1/n) Tr[Sigma^2 T^2]
    double phi_tilde = 0.0;  ///< 1 / (1 + gamma delta)^2
    double gamma = 0.0;
    Index n = 0;
    int iterations = 0;
    double residual = 0.0;

    /// 1 - gamma^2 phi phi_tilde; must stay positive.
    double stability() const { return 1.0 - gamma * gamma * phi * phi_tilde; }
};

struct DeterministicEquivalents : ScalarEquivalents {
    Matrix T;  ///< (I + gamma/(1 + gamma delta) Sigma)^{-1}
};

/// Dense solver: every iteration factorizes I + t Sigma.
DeterministicEquivalents solve_delta(const Matrix& sigma, Index n, double gamma,
                                     const DeltaSolverOptions& options = {});

/// Same fixed point restated on the eigenvalues of Sigma. `multiplicity`
/// (optional) gives how often each eigenvalue repeats.
ScalarEquivalents eigen_delta_solver(const Vector& eigenvalues, Index n, double gamma,
                                     const DeltaSolverOptions& options = {},
                                     const Vector& multiplicity = Vector());

/// Joint spectrum of two commuting covariances. Entry k is an eigenspace of
/// dimension multiplicity[k] on which Sigma_i acts as lambda[i][k];
/// mean_weight[k] is the squared norm of the projection of mu1 - mu0 on it.
struct SharedSpectrum {
    std::array<Vector, 2> lambda;
    Vector mean_weight;
    Vector multiplicity;

    SharedSpectrum swapped() const { return {{lambda[1], lambda[0]}, mean_weight, multiplicity}; }
};

/// Returns the shared eigenbasis of the two covariances, or nothing when
/// they do not commute to within `tolerance` (relative).
std::optional<SharedSpectrum> find_shared_spectrum(const MixtureModel& model,
                                                   double tolerance = 1e-10);

/// Shared spectrum of a make_scenario() model, built from the known spike
/// directions in O(p * rank) instead of a dense eigendecomposition. Only
/// valid for an isotropic base.
SharedSpectrum scenario_spectrum(const ScenarioConfig& config, const MixtureModel& model);

/// Trace functionals appearing in the asymptotic error, indexed by class i
/// (j = 1 - i).
struct TraceFunctionals {
    std::array<double, 2> mu_T_mu{};           ///< mu^T T_j mu, indexed by j
    std::array<std::array<double, 2>, 2> tr_sigma_T{};  ///< Tr[Sigma_i T_j]
    std::array<double, 2> tr_sigma2_T2_other{};  ///< Tr[Sigma_i^2 T_{1-i}^2]
    std::array<double, 2> tr_sigma_T1_sigma_T0{};  ///< Tr[Sigma_i T_1 Sigma_i T_0]
    std::array<double, 2> tr_sigma_sigma_T2{};   ///< Tr[Sigma_i Sigma_{1-i} T_{1-i}^2]
    std::array<double, 2> mu_sigma_T2_mu{};      ///< mu^T Sigma_{1-i} T_{1-i}^2 mu
};

struct AsymptoticError {
    std::array<ScalarEquivalents, 2> equivalents{};
    TraceFunctionals traces;
    std::array<double, 2> xi_bar{};
    std::array<double, 2> b_bar{};
    std::array<double, 2> B_bar{};
    std::array<double, 2> B_bar_simplified{};  ///< large-p simplification, diagnostic only
    std::array<double, 2> r_bar{};
    std::array<double, 2> eps{};
    double total = 0.0;
    bool used_shared_spectrum = false;
};

/// Deterministic approximation of the error of the two-regularizer rule with
/// bias theta, for training sizes n0, n1.
AsymptoticError asymptotic_error(const MixtureModel& model, Index n0, Index n1, double gamma0,
                                 double gamma1, double theta);

/// Same, on a precomputed shared spectrum (model must match it).
AsymptoticError asymptotic_error(const MixtureModel& model, const SharedSpectrum& spectrum,
                                 Index n0, Index n1, double gamma0, double gamma1, double theta);

/// Forces the dense-matrix path (used to cross-check the spectral path).
AsymptoticError asymptotic_error_dense(const MixtureModel& model, Index n0, Index n1,
                                       double gamma0, double gamma1, double theta);

/// Regularizer of the larger class that keeps b_bar bounded:
///   gamma1 = gamma0 / (1 - (1/n1 - 1/n0) gamma0 Tr[Sigma0 T0]).
double gamma1_theoretical(const Matrix& sigma0, Index n0, Index n1, double gamma0);
double gamma1_from_delta(double delta0, Index n0, Index n1, double gamma0);

struct BiasDesign {
    double theta = 0.0;
    double beta0 = 0.0;
    double beta1 = 0.0;
    double alpha = 0.0;
};

/// theta* = (beta1 - beta0)/2 - 2 alpha^2/(beta1 + beta0) log(pi1/pi0).
/// Throws DegenerateDesign when beta0 + beta1 == 0 with unequal priors.
double bias_from_components(double beta0, double beta1, double alpha, const Priors& priors);

BiasDesign theta_star_theoretical(const MixtureModel& model, Index n0, Index n1, double gamma0,
                                  double gamma1);
BiasDesign theta_star_from_error(const AsymptoticError& err, const Priors& priors, double p);

/// pi0 Phi((beta0 + theta)/alpha) + pi1 Phi((beta1 - theta)/alpha).
double bias_objective(double theta, const BiasDesign& d, const Priors& priors);

/// log(pi0/pi1) + ((beta1 - theta)/(2 alpha))^2 - ((beta0 + theta)/(2 alpha))^2.
double bias_stationarity_residual(double theta, const BiasDesign& d, const Priors& priors);

}  // namespace rqda
