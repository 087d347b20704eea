#pragma once

#include "rqda/discriminant.h"
#include "rqda/estimation.h"
#include "rqda/gestim.h"
#include "rqda/types.h"

#include <json.hpp>

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace rqda {

struct TuningPoint {
    double gamma0 = 0.0;
    std::optional<double> total_hat;  ///< unset when the candidate was degenerate
    std::string failure;
};

/// Improved R-QDA fitted in the canonical frame, where class 0 is the
/// smaller training class.
struct ImprovedModel {
    static constexpr int kFormatVersion = 1;

    FittedStats fit;  ///< canonical frame, gamma1 = gamma1_hat
    double theta = 0.0;
    /// label_map[canonical class] = caller's label.
    std::array<int, 2> label_map{0, 1};
    Priors priors;  ///< caller's frame
    std::vector<TuningPoint> tuning_trace;

    bool swapped() const { return label_map[0] == 1; }
    Priors canonical_priors() const { return swapped() ? priors.swapped() : priors; }
    double gamma0() const { return fit.gamma0; }
    double gamma1() const { return fit.gamma1; }
    Index dim() const { return fit.dim(); }
};

/// Canonicalize, estimate gamma1 from the minority class, then
/// the optimal bias. Priors default to the training proportions.
ImprovedModel fit_improved(const TrainingSet& train, double gamma0,
                           const std::optional<Priors>& priors = std::nullopt);

/// G-estimate of the fitted model's error (canonical frame).
GEstimate estimate_error(const ImprovedModel& model);

/// 25 log-spaced points in [1e-2, 1e2].
std::vector<double> default_gamma_grid();
std::vector<double> log_grid(double lo, double hi, int count);

struct TuningResult {
    double gamma0_star = 0.0;
    ImprovedModel model;
    std::vector<TuningPoint> trace;
};

/// Picks the grid point minimizing the G-estimated total error; ties go to
/// the smaller gamma0. Candidates whose estimate fails are kept in the trace
/// with the reason. `threads` = 0 uses every core.
TuningResult tune_gamma0(const TrainingSet& train, const std::vector<double>& grid,
                         const std::optional<Priors>& priors = std::nullopt, int threads = 1);

/// Raw scores in the canonical frame (positive votes for canonical class 0).
Vector decision_scores(const ImprovedModel& model, const Matrix& X);

/// Labels in the caller's original space, one per row of X.
std::vector<int> predict(const ImprovedModel& model, const Matrix& X);

nlohmann::json model_to_json(const ImprovedModel& model);
ImprovedModel model_from_json(const nlohmann::json& j);
void save_model(const ImprovedModel& model, const std::string& path);
ImprovedModel load_model(const std::string& path);

}  // namespace rqda
