#pragma once

#include "rqda/estimation.h"
#include "rqda/types.h"

#include <json.hpp>

#include <array>

namespace rqda {

/// Training-data estimate of delta for a resolvent H = (I + gamma S)^{-1}
/// built from n samples in dimension p:
///
///   delta_hat = (1/gamma) (p/n - Tr[H]/n) / (1 - p/n + Tr[H]/n)
///
/// Throws DegenerateEstimate when the denominator is not positive.
double delta_hat(const Matrix& H, Index n, Index p, double gamma);
double delta_hat_from_trace(double trace_H, Index n, Index p, double gamma);

/// gamma1_hat = gamma0 / (1 - gamma0 (n0/n1 - 1) delta_hat0).
double gamma1_hat(const Matrix& H0, Index n0, Index n1, double gamma0);
double gamma1_hat_from_delta(double delta_hat0, Index n0, Index n1, double gamma0);

struct BiasEstimate {
    double theta_hat = 0.0;
    double beta_hat0 = 0.0;
    double beta_hat1 = 0.0;
    double alpha_hat = 0.0;
    double B_hat0 = 0.0;
};

/// Consistent estimate of the optimal bias. `fit` must hold gamma0 for
/// class 0 (the smaller class) and gamma1_hat for class 1.
BiasEstimate theta_hat(const FittedStats& fit, const Priors& priors);

struct GEstimate {
    double delta_hat0 = 0.0, delta_hat1 = 0.0;
    double gamma1_hat = 0.0;
    double beta_hat0 = 0.0, beta_hat1 = 0.0;
    double alpha_hat = 0.0;
    double B_hat0 = 0.0, B_hat1 = 0.0;
    double theta_hat = 0.0;
    double theta = 0.0;  ///< bias the error estimate was evaluated at
    std::array<double, 2> xi_hat{};
    std::array<double, 2> b_hat{};
    std::array<double, 2> r_hat{};
    std::array<double, 2> eps_hat{};
    double total_hat = 0.0;
};

void to_json(nlohmann::json& j, const GEstimate& g);

/// Training-only estimate of the misclassification rates of the improved
/// rule with bias `theta` (no test data involved).
GEstimate g_estimator_error(const FittedStats& fit, double theta, const Priors& priors);

/// Same, evaluated at the estimated optimal bias.
GEstimate g_estimator_error(const FittedStats& fit, const Priors& priors);

}  // namespace rqda
