#pragma once

#include "rqda/types.h"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <random>

namespace rqda {

/// Pseudo-random stream. Streams derived from one master seed by index are
/// independent and reproducible, so Monte-Carlo workers never share state.
class Rng {
public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

    double normal() { return normal_(engine_); }
    std::uint64_t next_u64() { return engine_(); }
    Matrix normal_matrix(Index rows, Index cols);
    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

/// Mean and covariance of one Gaussian class.
struct ClassStatistics {
    Vector mean;
    Matrix covariance;

    Index dim() const { return mean.size(); }
    /// Throws InvalidArgument / SpdViolation when the invariants fail.
    void validate() const;
};

struct MixtureModel {
    ClassStatistics class0;
    ClassStatistics class1;
    Priors priors;

    Index dim() const { return class0.dim(); }
    const ClassStatistics& cls(int i) const { return i == 0 ? class0 : class1; }
    void validate() const;
    /// Relabels classes 0 <-> 1 (priors follow).
    MixtureModel swapped() const { return {class1, class0, priors.swapped()}; }
};

/// Synthetic two-class scenario. Class 0 has covariance base_scale * R and
/// mean 0, where R is the identity or, with a nonzero base_correlation rho,
/// the AR(1) correlation R_kl = rho^|k-l|. Class 1 adds
/// spike_strength * Q D Q^T (D selecting spike_rank random orthonormal
/// directions) and shifts the mean by mean_offset / sqrt(p) in every
/// coordinate.
struct ScenarioConfig {
    Index p = 200;
    Index n0 = 200;
    Index n1 = 100;
    Index test0 = 2000;
    Index test1 = 1000;
    double base_scale = 4.0;
    double spike_strength = 3.0;
    /// Number of spikes; unset means ceil(sqrt(p)).
    std::optional<Index> spike_rank;
    double mean_offset = 3.0;
    double base_correlation = 0.0;
    /// Unset means the training proportion n0 / (n0 + n1).
    std::optional<double> prior0;
    std::uint64_t seed = 1;

    Index effective_spike_rank() const;
    Priors priors() const;
    void validate() const;
};

void to_json(nlohmann::json& j, const ScenarioConfig& c);
void from_json(const nlohmann::json& j, ScenarioConfig& c);

/// A spiked covariance base_scale * I + spike_strength * V V^T together with
/// its spike directions V (p x rank, orthonormal columns).
struct SpikedCovariance {
    Matrix matrix;
    Matrix directions;
    double base_scale = 0.0;
    double spike_strength = 0.0;
};

/// Random orthogonal matrix (Haar) with `cols` columns, from the QR
/// factorization of a Gaussian matrix with the sign of diag(R) fixed.
Matrix random_orthonormal(Index p, Index cols, Rng& rng);

SpikedCovariance make_spiked(double base_scale, double spike_strength, Index spike_rank, Index p,
                             std::uint64_t seed);

Matrix make_spiked_covariance(double base_scale, double spike_strength, Index spike_rank, Index p,
                              std::uint64_t seed);

/// base_scale * R for the scenario's base correlation.
Matrix scenario_base_covariance(const ScenarioConfig& config);

/// Builds the ground-truth mixture of a scenario. The spike directions are
/// drawn from stream 0 of the scenario seed.
MixtureModel make_scenario(const ScenarioConfig& config);

struct AssumptionReport {
    Index p = 0;
    double p_over_n = 0.0;
    double n0_over_n1 = 0.0;
    double mean_gap_sq = 0.0;          ///< ||mu1 - mu0||^2
    double mean_gap_sq_over_sqrt_p = 0.0;
    double spectral_norm0 = 0.0;
    double spectral_norm1 = 0.0;
    double eigen_threshold = 0.0;
    Index large_eigen_count = 0;       ///< eigenvalues of |Sigma0 - Sigma1| above threshold
    double sqrt_p = 0.0;
};

/// Scalar diagnostics for the growth-regime assumptions. Advisory only.
AssumptionReport validate_assumptions(const MixtureModel& model, Index n0, Index n1,
                                      double eigen_threshold = 0.5);

/// n i.i.d. rows mu + L z with L the Cholesky factor of the covariance.
Matrix sample_class(const ClassStatistics& stats, Index n, Rng& rng);

/// Same as sample_class with a precomputed lower Cholesky factor.
Matrix sample_with_factor(const Vector& mean, const Matrix& lower, Index n, Rng& rng);

}  // namespace rqda
