#include "rqda/gestim.h"

#include "rqda/rmt.h"

#include <cmath>
#include <optional>
#include <string>

namespace rqda {

namespace {

double trace_of_product(const Matrix& a, const Matrix& b) { return a.cwiseProduct(b.transpose()).sum(); }

// Sigma_hat is normalized by n - 1, so it behaves as a Wishart matrix with
// n - 1 degrees of freedom; every sample-size factor below uses that count.
Index dof(Index n) { return n - 1; }

// Spectral functionals of the training data shared by every estimate.
struct EmpiricalTraces {
    double p = 0.0;
    double sqrt_p = 0.0;
    std::array<double, 2> n{};
    std::array<double, 2> gamma{};
    std::array<double, 2> delta{};
    std::array<double, 2> q{};                       // d^T H_j d, d = mu_hat0 - mu_hat1
    std::array<std::array<double, 2>, 2> tr_SH{};    // Tr[S_i H_j]
    std::array<double, 2> tr_self{};                 // Tr[S_i H_i S_i H_i]
    std::array<double, 2> tr_other{};                // Tr[S_i H_j S_i H_j], j = 1 - i
    std::array<double, 2> tr_mixed{};                // Tr[S_i H_0 S_i H_1]
    std::array<double, 2> r{};                       // d^T H_j S_i H_j d / p
};

EmpiricalTraces compute_traces(const FittedStats& fit) {
    EmpiricalTraces t;
    const Index p = fit.dim();
    t.p = static_cast<double>(p);
    t.sqrt_p = std::sqrt(t.p);
    const Vector d = fit.mu_hat0 - fit.mu_hat1;
    for (int i = 0; i < 2; ++i) {
        t.n[i] = static_cast<double>(dof(fit.n(i)));
        t.gamma[i] = fit.gamma(i);
        t.delta[i] = delta_hat(fit.H(i), dof(fit.n(i)), p, fit.gamma(i));
        t.q[i] = d.dot(fit.H(i) * d);
    }
    for (int i = 0; i < 2; ++i) {
        const int j = 1 - i;
        const Matrix s_h0 = fit.sigma_hat(i) * fit.H0;
        const Matrix s_h1 = fit.sigma_hat(i) * fit.H1;
        t.tr_SH[i][0] = s_h0.trace();
        t.tr_SH[i][1] = s_h1.trace();
        const Matrix& own = i == 0 ? s_h0 : s_h1;
        const Matrix& other = i == 0 ? s_h1 : s_h0;
        t.tr_self[i] = trace_of_product(own, own);
        t.tr_other[i] = trace_of_product(other, other);
        t.tr_mixed[i] = trace_of_product(s_h0, s_h1);
        const Vector hd = fit.H(j) * d;
        t.r[i] = hd.dot(fit.sigma_hat(i) * hd) / t.p;
    }
    return t;
}

double B_hat(const EmpiricalTraces& t, int i) {
    const int j = 1 - i;
    const double g = 1.0 + t.gamma[i] * t.delta[i];
    const double g2 = g * g;
    const double p = t.p;
    const double ni = t.n[i];
    const double tr_cross = t.tr_SH[i][j];
    return g2 * g2 * t.tr_self[i] / p - ni / p * t.delta[i] * t.delta[i] * g2 +
           t.tr_other[i] / p - ni / p * (tr_cross / ni) * (tr_cross / ni) -
           2.0 * g2 * t.tr_mixed[i] / p + t.delta[i] * g * 2.0 / p * tr_cross;
}

BiasEstimate bias_from_traces(const EmpiricalTraces& t, const Priors& priors) {
    BiasEstimate b;
    b.beta_hat0 = -t.q[1] / t.sqrt_p - t.tr_SH[0][1] / t.sqrt_p + t.n[0] * t.delta[0] / t.sqrt_p;
    b.beta_hat1 = -t.q[0] / t.sqrt_p - t.tr_SH[1][0] / t.sqrt_p + t.n[1] * t.delta[1] / t.sqrt_p;
    b.B_hat0 = B_hat(t, 0);
    if (!(b.B_hat0 > 0.0)) {
        throw DegenerateEstimate("theta_hat: B_hat0 = " + std::to_string(b.B_hat0) +
                                 " is not positive");
    }
    b.alpha_hat = std::sqrt(2.0 * b.B_hat0);
    b.theta_hat = bias_from_components(b.beta_hat0, b.beta_hat1, b.alpha_hat, priors);
    return b;
}

}  // namespace

double delta_hat_from_trace(double trace_H, Index n, Index p, double gamma) {
    if (!(gamma > 0.0) || !std::isfinite(gamma)) {
        throw InvalidArgument("delta_hat: gamma must be positive, got " + std::to_string(gamma));
    }
    if (n < 1) throw InvalidArgument("delta_hat: n must be >= 1");
    const double c = static_cast<double>(p) / static_cast<double>(n);
    const double h = trace_H / static_cast<double>(n);
    const double denom = 1.0 - c + h;
    if (!(denom > 0.0)) {
        throw DegenerateEstimate("delta_hat: denominator 1 - p/n + Tr[H]/n = " +
                                 std::to_string(denom) + " is not positive (p=" +
                                 std::to_string(p) + ", n=" + std::to_string(n) + ")");
    }
    return (c - h) / denom / gamma;
}

double delta_hat(const Matrix& H, Index n, Index p, double gamma) {
    return delta_hat_from_trace(H.trace(), n, p, gamma);
}

double gamma1_hat_from_delta(double delta_hat0, Index n0, Index n1, double gamma0) {
    if (n0 == n1) return gamma0;
    const double ratio = static_cast<double>(n0) / static_cast<double>(n1);
    const double denom = 1.0 - gamma0 * (ratio * delta_hat0 - delta_hat0);
    if (!(denom > 0.0)) {
        throw InvalidRegularizer("gamma1_hat: non-positive denominator " + std::to_string(denom));
    }
    return gamma0 / denom;
}

double gamma1_hat(const Matrix& H0, Index n0, Index n1, double gamma0) {
    if (n0 == n1) return gamma0;
    return gamma1_hat_from_delta(delta_hat(H0, dof(n0), H0.rows(), gamma0), dof(n0), dof(n1),
                                 gamma0);
}

BiasEstimate theta_hat(const FittedStats& fit, const Priors& priors) {
    return bias_from_traces(compute_traces(fit), priors);
}

void to_json(nlohmann::json& j, const GEstimate& g) {
    j = nlohmann::json{{"delta_hat0", g.delta_hat0}, {"delta_hat1", g.delta_hat1},
                       {"gamma1_hat", g.gamma1_hat}, {"beta_hat0", g.beta_hat0},
                       {"beta_hat1", g.beta_hat1},   {"alpha_hat", g.alpha_hat},
                       {"B_hat0", g.B_hat0},         {"B_hat1", g.B_hat1},
                       {"theta_hat", g.theta_hat},   {"theta", g.theta},
                       {"xi_hat0", g.xi_hat[0]},     {"xi_hat1", g.xi_hat[1]},
                       {"b_hat0", g.b_hat[0]},       {"b_hat1", g.b_hat[1]},
                       {"r_hat0", g.r_hat[0]},       {"r_hat1", g.r_hat[1]},
                       {"eps_hat0", g.eps_hat[0]},   {"eps_hat1", g.eps_hat[1]},
                       {"total_hat", g.total_hat}};
}

namespace {

GEstimate estimate(const FittedStats& fit, const std::optional<double>& theta,
                   const Priors& priors) {
    const EmpiricalTraces t = compute_traces(fit);
    GEstimate g;
    g.delta_hat0 = t.delta[0];
    g.delta_hat1 = t.delta[1];
    g.gamma1_hat = gamma1_hat_from_delta(t.delta[0], dof(fit.n0), dof(fit.n1), fit.gamma0);
    g.B_hat1 = B_hat(t, 1);
    const BiasEstimate b = bias_from_traces(t, priors);
    g.beta_hat0 = b.beta_hat0;
    g.beta_hat1 = b.beta_hat1;
    g.alpha_hat = b.alpha_hat;
    g.B_hat0 = b.B_hat0;
    g.theta_hat = b.theta_hat;
    g.theta = theta.value_or(b.theta_hat);

    const std::array<double, 2> B{g.B_hat0, g.B_hat1};
    for (int i = 0; i < 2; ++i) {
        const int j = 1 - i;
        const double sign = i == 0 ? 1.0 : -1.0;  // (-1)^i
        g.xi_hat[i] = g.theta - sign * t.q[j] / t.sqrt_p;
        g.b_hat[i] = sign * t.tr_SH[i][j] / t.sqrt_p - sign * t.n[i] * t.delta[i] / t.sqrt_p;
        g.r_hat[i] = t.r[i];
        const double spread = 2.0 * B[i] + 4.0 * g.r_hat[i];
        if (!(spread > 0.0)) {
            throw DegenerateEstimate("g_estimator_error: 2 B_hat + 4 r_hat = " +
                                     std::to_string(spread) + " for class " + std::to_string(i));
        }
        g.eps_hat[i] = normal_cdf(sign * (g.xi_hat[i] - g.b_hat[i]) / std::sqrt(spread));
    }
    g.total_hat = priors.pi0 * g.eps_hat[0] + priors.pi1 * g.eps_hat[1];
    return g;
}

}  // namespace

GEstimate g_estimator_error(const FittedStats& fit, double theta, const Priors& priors) {
    return estimate(fit, theta, priors);
}

GEstimate g_estimator_error(const FittedStats& fit, const Priors& priors) {
    return estimate(fit, std::nullopt, priors);
}

}  // namespace rqda
