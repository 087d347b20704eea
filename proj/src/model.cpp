#include "rqda/model.h"

#include <cmath>
#include <cstdlib>
#include <string>

namespace rqda {

namespace {

constexpr double kSymmetryTol = 1e-12;

std::seed_seq make_seed_seq(std::uint64_t seed, std::uint64_t stream) {
    return std::seed_seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                         static_cast<std::uint32_t>(stream),
                         static_cast<std::uint32_t>(stream >> 32), 0x52514441u};
}

}  // namespace

double Priors::log_ratio() const { return std::log(pi1 / pi0); }

void Priors::validate() const {
    if (!(pi0 > 0.0 && pi0 < 1.0 && pi1 > 0.0 && pi1 < 1.0) || std::abs(pi0 + pi1 - 1.0) > 1e-12) {
        throw InvalidArgument("priors must lie in (0,1) and sum to 1, got pi0=" +
                              std::to_string(pi0) + " pi1=" + std::to_string(pi1));
    }
}

Priors Priors::from_counts(Index n0, Index n1) {
    const double n = static_cast<double>(n0 + n1);
    return {static_cast<double>(n0) / n, static_cast<double>(n1) / n};
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

Rng::Rng(std::uint64_t seed, std::uint64_t stream) {
    auto seq = make_seed_seq(seed, stream);
    engine_.seed(seq);
}

Matrix Rng::normal_matrix(Index rows, Index cols) {
    Matrix z(rows, cols);
    // Fill row by row so the first k rows do not depend on the total count.
    for (Index r = 0; r < rows; ++r) {
        for (Index c = 0; c < cols; ++c) z(r, c) = normal();
    }
    return z;
}

void ClassStatistics::validate() const {
    const Index p = mean.size();
    if (p < 1) throw InvalidArgument("class statistics: empty mean vector");
    if (covariance.rows() != p || covariance.cols() != p) {
        throw DimensionMismatch("class statistics: mean has length " + std::to_string(p) +
                                " but covariance is " + std::to_string(covariance.rows()) + "x" +
                                std::to_string(covariance.cols()));
    }
    const double scale = std::max(1.0, covariance.cwiseAbs().maxCoeff());
    if ((covariance - covariance.transpose()).cwiseAbs().maxCoeff() > kSymmetryTol * scale) {
        throw SpdViolation("class statistics: covariance is not symmetric");
    }
    Eigen::LLT<Matrix> llt(covariance);
    if (llt.info() != Eigen::Success) {
        throw SpdViolation("class statistics: covariance is not positive definite");
    }
}

void MixtureModel::validate() const {
    class0.validate();
    class1.validate();
    if (class0.dim() != class1.dim()) {
        throw DimensionMismatch("mixture: classes have dimensions " + std::to_string(class0.dim()) +
                                " and " + std::to_string(class1.dim()));
    }
    priors.validate();
}

Index ScenarioConfig::effective_spike_rank() const {
    if (spike_rank) return *spike_rank;
    return static_cast<Index>(std::ceil(std::sqrt(static_cast<double>(p))));
}

Priors ScenarioConfig::priors() const {
    if (prior0) return {*prior0, 1.0 - *prior0};
    return Priors::from_counts(n0, n1);
}

void ScenarioConfig::validate() const {
    if (p < 1) throw InvalidArgument("scenario: p must be >= 1");
    if (n0 < 2 || n1 < 2) throw InvalidArgument("scenario: n0 and n1 must be >= 2");
    if (test0 < 0 || test1 < 0) throw InvalidArgument("scenario: test counts must be >= 0");
    if (!(base_scale > 0.0)) throw InvalidArgument("scenario: base_scale must be positive");
    if (!(std::abs(base_correlation) < 1.0)) {
        throw InvalidArgument("scenario: base_correlation must lie in (-1, 1)");
    }
    const Index rank = effective_spike_rank();
    if (rank < 0 || rank > p) throw InvalidArgument("scenario: spike_rank must lie in [0, p]");
    if (!(base_scale + std::min(0.0, spike_strength) > 0.0)) {
        throw InvalidArgument("scenario: base_scale + spike_strength must stay positive");
    }
    priors().validate();
}

void to_json(nlohmann::json& j, const ScenarioConfig& c) {
    j = nlohmann::json{{"p", c.p},
                       {"n0", c.n0},
                       {"n1", c.n1},
                       {"test0", c.test0},
                       {"test1", c.test1},
                       {"base_scale", c.base_scale},
                       {"spike_strength", c.spike_strength},
                       {"spike_rank", c.effective_spike_rank()},
                       {"mean_offset", c.mean_offset},
                       {"base_correlation", c.base_correlation},
                       {"prior0", c.priors().pi0},
                       {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, ScenarioConfig& c) {
    ScenarioConfig d;
    c.p = j.value("p", d.p);
    c.n0 = j.value("n0", d.n0);
    c.n1 = j.value("n1", d.n1);
    c.test0 = j.value("test0", d.test0);
    c.test1 = j.value("test1", d.test1);
    c.base_scale = j.value("base_scale", d.base_scale);
    c.spike_strength = j.value("spike_strength", d.spike_strength);
    c.spike_rank.reset();
    if (j.contains("spike_rank") && !j.at("spike_rank").is_null()) {
        c.spike_rank = j.at("spike_rank").get<Index>();
    }
    c.mean_offset = j.value("mean_offset", d.mean_offset);
    c.base_correlation = j.value("base_correlation", d.base_correlation);
    c.prior0.reset();
    if (j.contains("prior0") && !j.at("prior0").is_null()) c.prior0 = j.at("prior0").get<double>();
    c.seed = j.value("seed", d.seed);
}

Matrix random_orthonormal(Index p, Index cols, Rng& rng) {
    if (cols > p) throw InvalidArgument("random_orthonormal: more columns than rows");
    if (cols == 0) return Matrix(p, 0);
    const Matrix g = rng.normal_matrix(p, cols);
    Eigen::HouseholderQR<Matrix> qr(g);
    Matrix q = qr.householderQ() * Matrix::Identity(p, cols);
    const Matrix r = qr.matrixQR().topRows(cols).triangularView<Eigen::Upper>();
    for (Index k = 0; k < cols; ++k) {
        if (r(k, k) < 0.0) q.col(k) = -q.col(k);
    }
    return q;
}

SpikedCovariance make_spiked(double base_scale, double spike_strength, Index spike_rank, Index p,
                             std::uint64_t seed) {
    if (p < 1) throw InvalidArgument("make_spiked_covariance: p must be >= 1");
    if (spike_rank < 0 || spike_rank > p) {
        throw InvalidArgument("make_spiked_covariance: spike_rank " + std::to_string(spike_rank) +
                              " outside [0, " + std::to_string(p) + "]");
    }
    if (!(base_scale + std::min(0.0, spike_strength) > 0.0)) {
        throw InvalidArgument("make_spiked_covariance: base_scale + spike_strength must be > 0 "
                              "(result would not be positive definite)");
    }
    SpikedCovariance out;
    out.base_scale = base_scale;
    out.spike_strength = spike_strength;
    Rng rng(seed, 0);
    out.directions = random_orthonormal(p, spike_rank, rng);
    out.matrix = base_scale * Matrix::Identity(p, p);
    if (spike_rank > 0 && spike_strength != 0.0) {
        out.matrix.noalias() += spike_strength * out.directions * out.directions.transpose();
        out.matrix = 0.5 * (out.matrix + out.matrix.transpose()).eval();
    }
    return out;
}

Matrix make_spiked_covariance(double base_scale, double spike_strength, Index spike_rank, Index p,
                              std::uint64_t seed) {
    return make_spiked(base_scale, spike_strength, spike_rank, p, seed).matrix;
}

Matrix scenario_base_covariance(const ScenarioConfig& config) {
    const Index p = config.p;
    if (config.base_correlation == 0.0) return config.base_scale * Matrix::Identity(p, p);
    Matrix r(p, p);
    for (Index k = 0; k < p; ++k) {
        for (Index l = 0; l < p; ++l) {
            r(k, l) = config.base_scale *
                      std::pow(config.base_correlation, static_cast<double>(std::abs(k - l)));
        }
    }
    return r;
}

MixtureModel make_scenario(const ScenarioConfig& config) {
    config.validate();
    const Index p = config.p;
    MixtureModel m;
    m.class0.mean = Vector::Zero(p);
    m.class0.covariance = scenario_base_covariance(config);
    m.class1.mean = Vector::Constant(p, config.mean_offset / std::sqrt(static_cast<double>(p)));
    const SpikedCovariance spiked = make_spiked(config.base_scale, config.spike_strength,
                                                config.effective_spike_rank(), p, config.seed);
    m.class1.covariance = spiked.matrix;
    if (config.base_correlation != 0.0) {
        m.class1.covariance += m.class0.covariance - config.base_scale * Matrix::Identity(p, p);
    }
    m.priors = config.priors();
    return m;
}

AssumptionReport validate_assumptions(const MixtureModel& model, Index n0, Index n1,
                                      double eigen_threshold) {
    if (model.class0.dim() != model.class1.dim() ||
        model.class0.covariance.rows() != model.class0.dim() ||
        model.class1.covariance.rows() != model.class1.dim()) {
        throw DimensionMismatch("validate_assumptions: class dimensions disagree");
    }
    AssumptionReport r;
    r.p = model.dim();
    const double p = static_cast<double>(r.p);
    r.sqrt_p = std::sqrt(p);
    r.p_over_n = p / static_cast<double>(n0 + n1);
    r.n0_over_n1 = static_cast<double>(n0) / static_cast<double>(n1);
    r.mean_gap_sq = (model.class1.mean - model.class0.mean).squaredNorm();
    r.mean_gap_sq_over_sqrt_p = r.mean_gap_sq / r.sqrt_p;

    Eigen::SelfAdjointEigenSolver<Matrix> e0(model.class0.covariance, Eigen::EigenvaluesOnly);
    Eigen::SelfAdjointEigenSolver<Matrix> e1(model.class1.covariance, Eigen::EigenvaluesOnly);
    r.spectral_norm0 = e0.eigenvalues().cwiseAbs().maxCoeff();
    r.spectral_norm1 = e1.eigenvalues().cwiseAbs().maxCoeff();

    const Matrix diff = model.class0.covariance - model.class1.covariance;
    Eigen::SelfAdjointEigenSolver<Matrix> ed(diff, Eigen::EigenvaluesOnly);
    r.eigen_threshold = eigen_threshold;
    r.large_eigen_count = (ed.eigenvalues().array().abs() > eigen_threshold).count();
    return r;
}

Matrix sample_with_factor(const Vector& mean, const Matrix& lower, Index n, Rng& rng) {
    if (n < 1) throw InvalidArgument("sample_class: n must be >= 1");
    const Matrix z = rng.normal_matrix(n, mean.size());
    Matrix x = z * lower.transpose();
    x.rowwise() += mean.transpose();
    return x;
}

Matrix sample_class(const ClassStatistics& stats, Index n, Rng& rng) {
    if (n < 1) throw InvalidArgument("sample_class: n must be >= 1");
    Eigen::LLT<Matrix> llt(stats.covariance);
    if (llt.info() != Eigen::Success) {
        throw SpdViolation("sample_class: covariance factorization failed");
    }
    return sample_with_factor(stats.mean, llt.matrixL(), n, rng);
}

}  // namespace rqda
