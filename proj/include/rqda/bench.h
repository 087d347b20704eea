#pragma once

#include "rqda/discriminant.h"
#include "rqda/gestim.h"
#include "rqda/model.h"
#include "rqda/rmt.h"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace rqda {

struct BenchConfig {
    ScenarioConfig scenario;
    int replicates = 20;
    int threads = 1;
    double gamma0 = 1.0;
    /// Empty means default_gamma_grid().
    std::vector<double> gamma_grid;
    std::vector<Index> p_list{100, 200, 400};

    // real-data protocol
    std::string dataset;
    std::string label_column = "0";  ///< header name, or a zero-based index
    std::optional<bool> header;
    bool standardize = false;
    int class_a = 0;
    int class_b = 1;
    std::vector<double> ratios{0.25, 0.5, 1.0};
    Index train_n1 = 100;

    std::vector<double> effective_grid() const;
    void validate() const;
};

void to_json(nlohmann::json& j, const BenchConfig& c);
void from_json(const nlohmann::json& j, BenchConfig& c);

/// FNV-1a of the canonical JSON form of the config, as 16 hex digits.
std::string config_hash(const BenchConfig& config);

/// Ground truth of a scenario plus the pieces every replicate reuses.
struct ScenarioSetup {
    ScenarioConfig config;
    MixtureModel model;  ///< caller's labels
    Matrix lower0, lower1;
    bool swapped = false;               ///< canonical frame has the classes exchanged
    MixtureModel canonical;             ///< minority class first
    std::optional<SharedSpectrum> spectrum;  ///< canonical frame

    explicit ScenarioSetup(const ScenarioConfig& config);
    Index canonical_n(int i) const;
};

/// Outcome of one training draw at one gamma0. Errors are in the caller's
/// labels; theory and G-estimates refer to the same classifier.
struct RunResult {
    std::string scenario_id;
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;
    double gamma0 = 0.0;
    double gamma1_hat = 0.0;
    double theta_hat = 0.0;
    ErrorReport true_qda, standard_rqda, improved_rqda, rlda;
    double theorem1 = 0.0;  ///< deterministic-equivalent error at (gamma0, gamma1_hat, theta_hat)
    GEstimate g;
    double seconds = 0.0;
};

/// Draws training and test data from RNG stream `stream` and evaluates all
/// four rules.
RunResult run_replicate(const ScenarioSetup& setup, double gamma0, std::uint64_t stream);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

/// Header comment, header row and data rows.
std::string render_csv(const CsvTable& table, const BenchConfig& config, const std::string& command);

std::string format_number(double v);

CsvTable cmd_histogram(const BenchConfig& config);
CsvTable cmd_sweep_gamma(const BenchConfig& config);
CsvTable cmd_sweep_p(const BenchConfig& config);
CsvTable cmd_real(const BenchConfig& config);
CsvTable cmd_tune(const BenchConfig& config);

}  // namespace rqda
