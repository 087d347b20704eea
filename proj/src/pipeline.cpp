#include "rqda/pipeline.h"

#include "rqda/parallel.h"

#include <spdlog/spdlog.h>

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace rqda {

namespace {

struct Canonical {
    TrainingSet train;
    Priors priors;  // canonical frame
    std::array<int, 2> label_map{0, 1};
};

Canonical canonicalize(const TrainingSet& train, const std::optional<Priors>& priors) {
    train.validate();
    const Priors given = priors.value_or(Priors::from_counts(train.n0(), train.n1()));
    given.validate();
    if (train.n1() < train.n0()) return {train.swapped(), given.swapped(), {1, 0}};
    return {train, given, {0, 1}};
}

// gamma1 and bias estimation on precomputed moments.
FittedStats design(const FittedStats& moments, double gamma0) {
    if (!(gamma0 > 0.0) || !std::isfinite(gamma0)) {
        throw InvalidArgument("fit_improved: gamma0 must be positive, got " +
                              std::to_string(gamma0));
    }
    FittedStats f = moments;
    f.set_gamma(0, gamma0);
    f.set_gamma(1, gamma1_hat(f.H0, f.n0, f.n1, gamma0));
    return f;
}

ImprovedModel assemble(FittedStats f, const Canonical& c, const Priors& caller_priors) {
    ImprovedModel m;
    m.theta = theta_hat(f, c.priors).theta_hat;
    m.fit = std::move(f);
    m.label_map = c.label_map;
    m.priors = caller_priors;
    return m;
}

nlohmann::json matrix_to_json(const Matrix& a) {
    std::vector<double> data;
    data.reserve(static_cast<std::size_t>(a.size()));
    for (Index r = 0; r < a.rows(); ++r) {
        for (Index c = 0; c < a.cols(); ++c) data.push_back(a(r, c));
    }
    return {{"rows", a.rows()}, {"cols", a.cols()}, {"data", data}};
}

Matrix matrix_from_json(const nlohmann::json& j) {
    const Index rows = j.at("rows").get<Index>();
    const Index cols = j.at("cols").get<Index>();
    const auto data = j.at("data").get<std::vector<double>>();
    if (static_cast<Index>(data.size()) != rows * cols) {
        throw ParseError("model: matrix data has " + std::to_string(data.size()) +
                         " entries, expected " + std::to_string(rows * cols));
    }
    Matrix a(rows, cols);
    for (Index r = 0; r < rows; ++r) {
        for (Index c = 0; c < cols; ++c) a(r, c) = data[static_cast<std::size_t>(r * cols + c)];
    }
    return a;
}

nlohmann::json vector_to_json(const Vector& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
}

Vector vector_from_json(const nlohmann::json& j) {
    const auto data = j.get<std::vector<double>>();
    return Eigen::Map<const Vector>(data.data(), static_cast<Index>(data.size()));
}

}  // namespace

ImprovedModel fit_improved(const TrainingSet& train, double gamma0,
                           const std::optional<Priors>& priors) {
    const Canonical c = canonicalize(train, priors);
    const Priors caller = priors.value_or(Priors::from_counts(train.n0(), train.n1()));
    return assemble(design(fit_moments(c.train), gamma0), c, caller);
}

GEstimate estimate_error(const ImprovedModel& model) {
    return g_estimator_error(model.fit, model.theta, model.canonical_priors());
}

std::vector<double> log_grid(double lo, double hi, int count) {
    if (count < 1) throw InvalidArgument("log_grid: count must be >= 1");
    if (!(lo > 0.0) || !(hi >= lo)) throw InvalidArgument("log_grid: need 0 < lo <= hi");
    if (count == 1) return {lo};
    std::vector<double> grid(static_cast<std::size_t>(count));
    const double a = std::log10(lo);
    const double b = std::log10(hi);
    for (int k = 0; k < count; ++k) {
        grid[static_cast<std::size_t>(k)] = std::pow(10.0, a + (b - a) * k / (count - 1));
    }
    return grid;
}

std::vector<double> default_gamma_grid() { return log_grid(1e-2, 1e2, 25); }

TuningResult tune_gamma0(const TrainingSet& train, const std::vector<double>& grid,
                         const std::optional<Priors>& priors, int threads) {
    if (grid.empty()) throw InvalidArgument("tune_gamma0: empty grid");
    for (double g : grid) {
        if (!(g > 0.0) || !std::isfinite(g)) {
            throw InvalidArgument("tune_gamma0: grid candidates must be positive, got " +
                                  std::to_string(g));
        }
    }
    const Canonical c = canonicalize(train, priors);
    const Priors caller = priors.value_or(Priors::from_counts(train.n0(), train.n1()));
    const FittedStats moments = fit_moments(c.train);

    std::vector<TuningPoint> trace(grid.size());
    parallel_for(grid.size(), threads, [&](std::size_t k) {
        TuningPoint& point = trace[k];
        point.gamma0 = grid[k];
        try {
            const FittedStats f = design(moments, grid[k]);
            point.total_hat = g_estimator_error(f, c.priors).total_hat;
        } catch (const NumericalError& e) {
            point.failure = e.what();
        }
    });

    std::optional<std::size_t> best;
    for (std::size_t k = 0; k < trace.size(); ++k) {
        if (!trace[k].total_hat) continue;
        if (!best || *trace[k].total_hat < *trace[*best].total_hat ||
            (*trace[k].total_hat == *trace[*best].total_hat &&
             trace[k].gamma0 < trace[*best].gamma0)) {
            best = k;
        }
    }
    if (!best) {
        std::ostringstream msg;
        msg << "tune_gamma0: every candidate failed";
        for (const auto& point : trace) msg << "\n  gamma0=" << point.gamma0 << ": " << point.failure;
        throw TuningFailed(msg.str());
    }
    for (const auto& point : trace) {
        if (!point.total_hat) spdlog::debug("tune_gamma0: skipped gamma0={} ({})", point.gamma0, point.failure);
    }

    TuningResult r;
    r.gamma0_star = trace[*best].gamma0;
    r.model = assemble(design(moments, r.gamma0_star), c, caller);
    r.model.tuning_trace = trace;
    r.trace = std::move(trace);
    return r;
}

Vector decision_scores(const ImprovedModel& model, const Matrix& X) {
    if (X.rows() > 0 && X.cols() != model.dim()) {
        throw DimensionMismatch("predict: expected " + std::to_string(model.dim()) +
                                " columns, got " + std::to_string(X.cols()));
    }
    return improved_rule(model.fit, model.theta).score_batch(X);
}

std::vector<int> predict(const ImprovedModel& model, const Matrix& X) {
    const Vector w = decision_scores(model, X);
    std::vector<int> labels(static_cast<std::size_t>(w.size()));
    for (Index k = 0; k < w.size(); ++k) {
        labels[static_cast<std::size_t>(k)] = model.label_map[classify(w[k])];
    }
    return labels;
}

nlohmann::json model_to_json(const ImprovedModel& m) {
    nlohmann::json trace = nlohmann::json::array();
    for (const auto& point : m.tuning_trace) {
        nlohmann::json t{{"gamma0", point.gamma0}};
        t["total_hat"] = point.total_hat ? nlohmann::json(*point.total_hat) : nlohmann::json();
        if (!point.failure.empty()) t["failure"] = point.failure;
        trace.push_back(std::move(t));
    }
    return {{"format", "rqda-improved-model"},
            {"version", ImprovedModel::kFormatVersion},
            {"theta", m.theta},
            {"gamma0", m.fit.gamma0},
            {"gamma1", m.fit.gamma1},
            {"label_map", m.label_map},
            {"priors", {{"pi0", m.priors.pi0}, {"pi1", m.priors.pi1}}},
            {"n0", m.fit.n0},
            {"n1", m.fit.n1},
            {"mu_hat0", vector_to_json(m.fit.mu_hat0)},
            {"mu_hat1", vector_to_json(m.fit.mu_hat1)},
            {"sigma_hat0", matrix_to_json(m.fit.sigma_hat0)},
            {"sigma_hat1", matrix_to_json(m.fit.sigma_hat1)},
            {"tuning_trace", trace}};
}

ImprovedModel model_from_json(const nlohmann::json& j) {
    try {
        if (j.value("format", std::string()) != "rqda-improved-model") {
            throw ParseError("model: not an rqda improved-model document");
        }
        const int version = j.at("version").get<int>();
        if (version != ImprovedModel::kFormatVersion) {
            throw ParseError("model: unsupported format version " + std::to_string(version));
        }
        ImprovedModel m;
        m.theta = j.at("theta").get<double>();
        m.label_map = j.at("label_map").get<std::array<int, 2>>();
        if (!((m.label_map[0] == 0 && m.label_map[1] == 1) ||
              (m.label_map[0] == 1 && m.label_map[1] == 0))) {
            throw ParseError("model: label_map must be a permutation of {0, 1}");
        }
        m.priors = {j.at("priors").at("pi0").get<double>(), j.at("priors").at("pi1").get<double>()};
        m.fit.n0 = j.at("n0").get<Index>();
        m.fit.n1 = j.at("n1").get<Index>();
        m.fit.mu_hat0 = vector_from_json(j.at("mu_hat0"));
        m.fit.mu_hat1 = vector_from_json(j.at("mu_hat1"));
        m.fit.sigma_hat0 = matrix_from_json(j.at("sigma_hat0"));
        m.fit.sigma_hat1 = matrix_from_json(j.at("sigma_hat1"));
        const Index p = m.fit.mu_hat0.size();
        if (m.fit.mu_hat1.size() != p || m.fit.sigma_hat0.rows() != p ||
            m.fit.sigma_hat0.cols() != p || m.fit.sigma_hat1.rows() != p ||
            m.fit.sigma_hat1.cols() != p) {
            throw DimensionMismatch("model: inconsistent dimensions in saved statistics");
        }
        m.fit.set_gamma(0, j.at("gamma0").get<double>());
        m.fit.set_gamma(1, j.at("gamma1").get<double>());
        for (const auto& t : j.value("tuning_trace", nlohmann::json::array())) {
            TuningPoint point;
            point.gamma0 = t.at("gamma0").get<double>();
            if (!t.at("total_hat").is_null()) point.total_hat = t.at("total_hat").get<double>();
            point.failure = t.value("failure", std::string());
            m.tuning_trace.push_back(std::move(point));
        }
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("model: malformed document: ") + e.what());
    }
}

void save_model(const ImprovedModel& model, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw InvalidArgument("save_model: cannot open " + path);
    out << model_to_json(model).dump();
    if (!out) throw InvalidArgument("save_model: write failed for " + path);
}

ImprovedModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("load_model: cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError("load_model: " + path + ": " + e.what());
    }
    return model_from_json(j);
}

}  // namespace rqda
