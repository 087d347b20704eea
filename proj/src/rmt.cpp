#include "rqda/rmt.h"

#include <cmath>
#include <sstream>
#include <string>

namespace rqda {

namespace {

double trace_of_product(const Matrix& a, const Matrix& b) { return a.cwiseProduct(b.transpose()).sum(); }

void check_solver_inputs(Index n, double gamma, const char* what) {
    if (n < 1) throw InvalidArgument(std::string(what) + ": n must be >= 1");
    if (!(gamma >= 0.0) || !std::isfinite(gamma)) {
        throw InvalidArgument(std::string(what) + ": gamma must be finite and >= 0, got " +
                              std::to_string(gamma));
    }
}

// Damped iteration shared by the dense and spectral solvers. `map` evaluates
// F(delta).
template <typename Map>
std::pair<double, double> iterate_delta(Map&& map, double initial, const DeltaSolverOptions& opt,
                                        int& iterations, const char* what) {
    double delta = initial;
    std::vector<double> history;
    for (int it = 1; it <= opt.max_iterations; ++it) {
        const double f = map(delta);
        const double residual = std::abs(f - delta);
        iterations = it;
        if (residual <= opt.tolerance * std::max(1.0, delta)) return {delta, residual};
        if (history.size() == 8) history.erase(history.begin());
        history.push_back(residual);
        delta = (1.0 - opt.damping) * delta + opt.damping * f;
        if (!std::isfinite(delta)) break;
    }
    std::ostringstream msg;
    msg << what << ": no convergence after " << opt.max_iterations
        << " iterations; last residuals:";
    for (double r : history) msg << ' ' << r;
    throw ConvergenceError(msg.str());
}

TraceFunctionals dense_traces(const MixtureModel& model, const Matrix& t0, const Matrix& t1) {
    const std::array<const Matrix*, 2> t{&t0, &t1};
    const Vector mu = model.class1.mean - model.class0.mean;
    TraceFunctionals tf;
    for (int j = 0; j < 2; ++j) tf.mu_T_mu[j] = mu.dot(*t[j] * mu);
    for (int i = 0; i < 2; ++i) {
        const int j = 1 - i;
        const Matrix& si = model.cls(i).covariance;
        const Matrix& sj = model.cls(j).covariance;
        for (int k = 0; k < 2; ++k) tf.tr_sigma_T[i][k] = trace_of_product(si, *t[k]);
        const Matrix tj2 = *t[j] * *t[j];
        tf.tr_sigma2_T2_other[i] = trace_of_product(si * si, tj2);
        tf.tr_sigma_T1_sigma_T0[i] = trace_of_product(si * t1, si * t0);
        tf.tr_sigma_sigma_T2[i] = trace_of_product(si * sj, tj2);
        tf.mu_sigma_T2_mu[i] = mu.dot(sj * (tj2 * mu));
    }
    return tf;
}

AsymptoticError assemble(const std::array<ScalarEquivalents, 2>& eq, const TraceFunctionals& tf,
                         const Priors& priors, double p, double theta) {
    AsymptoticError e;
    e.equivalents = eq;
    e.traces = tf;
    const double sp = std::sqrt(p);
    for (int i = 0; i < 2; ++i) {
        if (!(eq[i].stability() > 0.0)) {
            throw DivergedEquivalent("asymptotic_error: 1 - gamma^2 phi phi_tilde = " +
                                     std::to_string(eq[i].stability()) + " for class " +
                                     std::to_string(i));
        }
    }
    for (int i = 0; i < 2; ++i) {
        const int j = 1 - i;
        const ScalarEquivalents& own = eq[i];
        const ScalarEquivalents& other = eq[j];
        const double ni = static_cast<double>(own.n);
        const double nj = static_cast<double>(other.n);
        const double sign_xi = i == 0 ? -1.0 : 1.0;
        e.xi_bar[i] = sign_xi * tf.mu_T_mu[j] / sp + theta;
        e.b_bar[i] = (tf.tr_sigma_T[i][1] - tf.tr_sigma_T[i][0]) / sp;
        const double cross = tf.tr_sigma_sigma_T2[i];
        e.B_bar[i] = own.phi / own.stability() * ni / p + tf.tr_sigma2_T2_other[i] / p -
                     2.0 / p * tf.tr_sigma_T1_sigma_T0[i] +
                     other.gamma * other.gamma * other.phi_tilde / other.stability() * cross *
                         cross / (nj * p);
        e.B_bar_simplified[i] = 2.0 * ni / p * own.gamma * own.gamma * own.phi_tilde * own.phi *
                                own.phi / own.stability();
        e.r_bar[i] = tf.mu_sigma_T2_mu[i] / p / other.stability();
        const double sign = i == 0 ? 1.0 : -1.0;
        const double spread = std::sqrt(2.0 * e.B_bar[i] + 4.0 * e.r_bar[i]);
        e.eps[i] = normal_cdf(sign * (e.xi_bar[i] - e.b_bar[i]) / spread);
    }
    e.total = priors.pi0 * e.eps[0] + priors.pi1 * e.eps[1];
    return e;
}

std::array<ScalarEquivalents, 2> spectral_equivalents(const SharedSpectrum& s, Index n0, Index n1,
                                                      double gamma0, double gamma1) {
    return {eigen_delta_solver(s.lambda[0], n0, gamma0, {}, s.multiplicity),
            eigen_delta_solver(s.lambda[1], n1, gamma1, {}, s.multiplicity)};
}

}  // namespace

DeterministicEquivalents solve_delta(const Matrix& sigma, Index n, double gamma,
                                     const DeltaSolverOptions& options) {
    check_solver_inputs(n, gamma, "solve_delta");
    if (sigma.rows() != sigma.cols()) throw DimensionMismatch("solve_delta: sigma is not square");
    const Index p = sigma.rows();
    const double inv_n = 1.0 / static_cast<double>(n);
    auto resolvent = [&](double delta) {
        Matrix a = (gamma / (1.0 + gamma * delta)) * sigma;
        a.diagonal().array() += 1.0;
        Eigen::LLT<Matrix> llt(a);
        if (llt.info() != Eigen::Success) {
            throw SpdViolation("solve_delta: I + t*Sigma is not positive definite");
        }
        return llt;
    };
    auto map = [&](double delta) { return inv_n * resolvent(delta).solve(sigma).trace(); };

    DeterministicEquivalents eq;
    eq.gamma = gamma;
    eq.n = n;
    const double start = options.initial.value_or(inv_n * sigma.trace());
    auto [delta, residual] = iterate_delta(map, start, options, eq.iterations, "solve_delta");
    eq.delta = delta;
    eq.residual = residual;
    eq.T = resolvent(delta).solve(Matrix::Identity(p, p));
    eq.T = 0.5 * (eq.T + eq.T.transpose()).eval();
    const Matrix st = sigma * eq.T;
    eq.phi = inv_n * trace_of_product(st, st);
    eq.phi_tilde = 1.0 / ((1.0 + gamma * delta) * (1.0 + gamma * delta));
    return eq;
}

ScalarEquivalents eigen_delta_solver(const Vector& eigenvalues, Index n, double gamma,
                                     const DeltaSolverOptions& options,
                                     const Vector& multiplicity) {
    check_solver_inputs(n, gamma, "eigen_delta_solver");
    const Vector mult =
        multiplicity.size() == 0 ? Vector::Ones(eigenvalues.size()) : multiplicity;
    if (mult.size() != eigenvalues.size()) {
        throw DimensionMismatch("eigen_delta_solver: multiplicity length mismatch");
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    const Eigen::ArrayXd lam = eigenvalues.array();
    const Eigen::ArrayXd m = mult.array();
    auto map = [&](double delta) {
        const double t = gamma / (1.0 + gamma * delta);
        return inv_n * (m * lam / (1.0 + t * lam)).sum();
    };
    ScalarEquivalents eq;
    eq.gamma = gamma;
    eq.n = n;
    const double start = options.initial.value_or(inv_n * (m * lam).sum());
    auto [delta, residual] =
        iterate_delta(map, start, options, eq.iterations, "eigen_delta_solver");
    eq.delta = delta;
    eq.residual = residual;
    const double t = gamma / (1.0 + gamma * delta);
    const Eigen::ArrayXd st = lam / (1.0 + t * lam);
    eq.phi = inv_n * (m * st * st).sum();
    eq.phi_tilde = 1.0 / ((1.0 + gamma * delta) * (1.0 + gamma * delta));
    return eq;
}

std::optional<SharedSpectrum> find_shared_spectrum(const MixtureModel& model, double tolerance) {
    const Matrix& s0 = model.class0.covariance;
    const Matrix& s1 = model.class1.covariance;
    const double scale = std::max({1.0, s0.norm(), s1.norm()});
    if ((s0 * s1 - s1 * s0).norm() > tolerance * scale * scale) return std::nullopt;
    // A generic combination separates the joint eigenspaces.
    const Matrix combo = s0 + std::sqrt(2.0) * s1;
    Eigen::SelfAdjointEigenSolver<Matrix> es(combo);
    if (es.info() != Eigen::Success) return std::nullopt;
    const Matrix& u = es.eigenvectors();
    const Matrix d0 = u.transpose() * s0 * u;
    const Matrix d1 = u.transpose() * s1 * u;
    const Matrix off0 = d0 - Matrix(d0.diagonal().asDiagonal());
    const Matrix off1 = d1 - Matrix(d1.diagonal().asDiagonal());
    if (off0.norm() > tolerance * 100.0 * scale || off1.norm() > tolerance * 100.0 * scale) {
        return std::nullopt;
    }
    SharedSpectrum s;
    s.lambda = {d0.diagonal(), d1.diagonal()};
    s.mean_weight = (u.transpose() * (model.class1.mean - model.class0.mean)).array().square();
    s.multiplicity = Vector::Ones(u.cols());
    return s;
}

SharedSpectrum scenario_spectrum(const ScenarioConfig& config, const MixtureModel& model) {
    if (config.base_correlation != 0.0) {
        throw InvalidArgument("scenario_spectrum: needs an isotropic base (base_correlation = 0)");
    }
    const Index p = config.p;
    const Index rank = config.effective_spike_rank();
    const SpikedCovariance spiked =
        make_spiked(config.base_scale, config.spike_strength, rank, p, config.seed);
    const Vector mu = model.class1.mean - model.class0.mean;
    const Vector proj = spiked.directions.transpose() * mu;
    SharedSpectrum s;
    const Index k = rank + (rank < p ? 1 : 0);
    s.lambda = {Vector::Constant(k, config.base_scale), Vector::Constant(k, config.base_scale)};
    s.mean_weight = Vector::Zero(k);
    s.multiplicity = Vector::Ones(k);
    for (Index r = 0; r < rank; ++r) {
        s.lambda[1][r] = config.base_scale + config.spike_strength;
        s.mean_weight[r] = proj[r] * proj[r];
    }
    if (rank < p) {
        s.multiplicity[rank] = static_cast<double>(p - rank);
        s.mean_weight[rank] = std::max(0.0, mu.squaredNorm() - proj.squaredNorm());
    }
    return s;
}

AsymptoticError asymptotic_error(const MixtureModel& model, const SharedSpectrum& s, Index n0,
                                 Index n1, double gamma0, double gamma1, double theta) {
    const auto eq = spectral_equivalents(s, n0, n1, gamma0, gamma1);
    const Eigen::ArrayXd m = s.multiplicity.array();
    const Eigen::ArrayXd w = s.mean_weight.array();
    std::array<Eigen::ArrayXd, 2> lam{s.lambda[0].array(), s.lambda[1].array()};
    std::array<Eigen::ArrayXd, 2> t;
    for (int j = 0; j < 2; ++j) {
        const double g = eq[j].gamma / (1.0 + eq[j].gamma * eq[j].delta);
        t[j] = 1.0 / (1.0 + g * lam[j]);
    }
    TraceFunctionals tf;
    for (int j = 0; j < 2; ++j) tf.mu_T_mu[j] = (w * t[j]).sum();
    for (int i = 0; i < 2; ++i) {
        const int j = 1 - i;
        for (int k = 0; k < 2; ++k) tf.tr_sigma_T[i][k] = (m * lam[i] * t[k]).sum();
        tf.tr_sigma2_T2_other[i] = (m * lam[i].square() * t[j].square()).sum();
        tf.tr_sigma_T1_sigma_T0[i] = (m * lam[i].square() * t[1] * t[0]).sum();
        tf.tr_sigma_sigma_T2[i] = (m * lam[i] * lam[j] * t[j].square()).sum();
        tf.mu_sigma_T2_mu[i] = (w * lam[j] * t[j].square()).sum();
    }
    AsymptoticError e =
        assemble(eq, tf, model.priors, static_cast<double>(model.dim()), theta);
    e.used_shared_spectrum = true;
    return e;
}

AsymptoticError asymptotic_error_dense(const MixtureModel& model, Index n0, Index n1,
                                       double gamma0, double gamma1, double theta) {
    const DeterministicEquivalents e0 = solve_delta(model.class0.covariance, n0, gamma0);
    const DeterministicEquivalents e1 = solve_delta(model.class1.covariance, n1, gamma1);
    const TraceFunctionals tf = dense_traces(model, e0.T, e1.T);
    return assemble({e0, e1}, tf, model.priors, static_cast<double>(model.dim()), theta);
}

AsymptoticError asymptotic_error(const MixtureModel& model, Index n0, Index n1, double gamma0,
                                 double gamma1, double theta) {
    if (auto s = find_shared_spectrum(model)) {
        return asymptotic_error(model, *s, n0, n1, gamma0, gamma1, theta);
    }
    return asymptotic_error_dense(model, n0, n1, gamma0, gamma1, theta);
}

double gamma1_from_delta(double delta0, Index n0, Index n1, double gamma0) {
    if (n0 == n1) return gamma0;
    const double coupling = (1.0 / static_cast<double>(n1) - 1.0 / static_cast<double>(n0)) *
                            gamma0 * static_cast<double>(n0) * delta0;
    const double denom = 1.0 - coupling;
    if (!(denom > 0.0)) {
        throw InvalidRegularizer("gamma1: non-positive denominator " + std::to_string(denom) +
                                 " (n0=" + std::to_string(n0) + ", n1=" + std::to_string(n1) +
                                 ", gamma0=" + std::to_string(gamma0) + ")");
    }
    return gamma0 / denom;
}

double gamma1_theoretical(const Matrix& sigma0, Index n0, Index n1, double gamma0) {
    if (n0 == n1) return gamma0;
    const DeterministicEquivalents eq = solve_delta(sigma0, n0, gamma0);
    return gamma1_from_delta(eq.delta, n0, n1, gamma0);
}

double bias_from_components(double beta0, double beta1, double alpha, const Priors& priors) {
    const double half_gap = 0.5 * (beta1 - beta0);
    const double log_ratio = priors.log_ratio();
    if (log_ratio == 0.0) return half_gap;
    const double sum = beta1 + beta0;
    if (sum == 0.0 || !std::isfinite(sum)) {
        throw DegenerateDesign("optimal bias: beta0 + beta1 = 0 with unequal priors");
    }
    return half_gap - 2.0 * alpha * alpha / sum * log_ratio;
}

BiasDesign theta_star_from_error(const AsymptoticError& err, const Priors& priors, double p) {
    const double sp = std::sqrt(p);
    BiasDesign d;
    d.beta0 = -err.traces.mu_T_mu[1] / sp - err.b_bar[0];
    d.beta1 = -err.traces.mu_T_mu[0] / sp + err.b_bar[1];
    d.alpha = std::sqrt(2.0 * err.B_bar[0]);
    d.theta = bias_from_components(d.beta0, d.beta1, d.alpha, priors);
    return d;
}

BiasDesign theta_star_theoretical(const MixtureModel& model, Index n0, Index n1, double gamma0,
                                  double gamma1) {
    const AsymptoticError err = asymptotic_error(model, n0, n1, gamma0, gamma1, 0.0);
    return theta_star_from_error(err, model.priors, static_cast<double>(model.dim()));
}

double bias_objective(double theta, const BiasDesign& d, const Priors& priors) {
    return priors.pi0 * normal_cdf((d.beta0 + theta) / d.alpha) +
           priors.pi1 * normal_cdf((d.beta1 - theta) / d.alpha);
}

double bias_stationarity_residual(double theta, const BiasDesign& d, const Priors& priors) {
    const double a = (d.beta1 - theta) / (2.0 * d.alpha);
    const double b = (d.beta0 + theta) / (2.0 * d.alpha);
    return std::log(priors.pi0 / priors.pi1) + a * a - b * b;
}

}  // namespace rqda
