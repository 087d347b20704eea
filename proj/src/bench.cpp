#include "rqda/bench.h"

#include "rqda/estimation.h"
#include "rqda/ingestion.h"
#include "rqda/parallel.h"
#include "rqda/pipeline.h"

#include <spdlog/spdlog.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace rqda {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Matrix cholesky_lower(const Matrix& sigma, const char* what) {
    Eigen::LLT<Matrix> llt(sigma);
    if (llt.info() != Eigen::Success) {
        throw SpdViolation(std::string(what) + ": covariance is not positive definite");
    }
    return llt.matrixL();
}

ErrorReport error_from_labels(const std::vector<int>& labels0, const std::vector<int>& labels1,
                              const Priors& priors) {
    ErrorReport r;
    r.n_test0 = static_cast<Index>(labels0.size());
    r.n_test1 = static_cast<Index>(labels1.size());
    for (int l : labels0) r.errors0 += l != 0;
    for (int l : labels1) r.errors1 += l != 1;
    r.eps0 = static_cast<double>(r.errors0) / static_cast<double>(r.n_test0);
    r.eps1 = static_cast<double>(r.errors1) / static_cast<double>(r.n_test1);
    r.total = priors.pi0 * r.eps0 + priors.pi1 * r.eps1;
    return r;
}

struct Accumulator {
    double sum = 0.0;
    int count = 0;
    void add(double v) {
        sum += v;
        ++count;
    }
    double mean() const { return count ? sum / count : kNaN; }
};

std::string join_notes(const std::vector<std::string>& notes) {
    std::string out;
    for (const auto& n : notes) {
        if (n.empty()) continue;
        if (!out.empty()) out += " | ";
        out += n;
    }
    for (char& ch : out) {
        if (ch == ',' || ch == '\n' || ch == '"') ch = ';';
    }
    return out;
}

struct Outcome {
    std::optional<RunResult> result;
    std::string failure;
};

std::vector<Outcome> run_grid(const std::vector<const ScenarioSetup*>& setups,
                              const std::vector<double>& gammas, int replicates, int threads) {
    // Task (s, g, r) -> index ((s * G) + g) * R + r; stream depends only on r.
    const std::size_t G = gammas.size();
    const std::size_t R = static_cast<std::size_t>(replicates);
    std::vector<Outcome> out(setups.size() * G * R);
    parallel_for(out.size(), threads, [&](std::size_t k) {
        const std::size_t r = k % R;
        const std::size_t g = (k / R) % G;
        const std::size_t s = k / (R * G);
        try {
            out[k].result = run_replicate(*setups[s], gammas[g], 1 + r);
        } catch (const NumericalError& e) {
            out[k].failure = e.what();
        }
    });
    return out;
}

}  // namespace

std::vector<double> BenchConfig::effective_grid() const {
    return gamma_grid.empty() ? default_gamma_grid() : gamma_grid;
}

void BenchConfig::validate() const {
    scenario.validate();
    if (replicates < 1) throw InvalidArgument("config: replicates must be >= 1");
    if (threads < 0) throw InvalidArgument("config: threads must be >= 0");
    if (!(gamma0 > 0.0)) throw InvalidArgument("config: gamma0 must be positive");
    for (double g : gamma_grid) {
        if (!(g > 0.0)) throw InvalidArgument("config: gamma_grid entries must be positive");
    }
    for (Index p : p_list) {
        if (p < 1) throw InvalidArgument("config: p_list entries must be >= 1");
    }
    for (double r : ratios) {
        if (!(r > 0.0)) throw InvalidArgument("config: ratios must be positive");
    }
    if (train_n1 < 2) throw InvalidArgument("config: train_n1 must be >= 2");
}

void to_json(nlohmann::json& j, const BenchConfig& c) {
    j = nlohmann::json{{"scenario", c.scenario},
                       {"replicates", c.replicates},
                       {"gamma0", c.gamma0},
                       {"gamma_grid", c.effective_grid()},
                       {"p_list", c.p_list},
                       {"dataset", c.dataset},
                       {"label_column", c.label_column},
                       {"standardize", c.standardize},
                       {"class_a", c.class_a},
                       {"class_b", c.class_b},
                       {"ratios", c.ratios},
                       {"train_n1", c.train_n1}};
    j["header"] = c.header ? nlohmann::json(*c.header) : nlohmann::json();
}

void from_json(const nlohmann::json& j, BenchConfig& c) {
    const BenchConfig d;
    // Scenario fields may sit at the top level or under "scenario".
    nlohmann::json scenario = j.value("scenario", nlohmann::json::object());
    for (const char* key : {"p", "n0", "n1", "test0", "test1", "base_scale", "spike_strength",
                            "spike_rank", "mean_offset", "base_correlation", "prior0", "seed"}) {
        if (j.contains(key)) scenario[key] = j.at(key);
    }
    c.scenario = scenario.get<ScenarioConfig>();
    c.replicates = j.value("replicates", d.replicates);
    c.threads = j.value("threads", d.threads);
    c.gamma0 = j.value("gamma0", d.gamma0);
    c.gamma_grid = j.value("gamma_grid", d.gamma_grid);
    c.p_list = j.value("p_list", d.p_list);
    c.dataset = j.value("dataset", d.dataset);
    if (j.contains("label_column")) {
        const auto& lc = j.at("label_column");
        c.label_column = lc.is_string() ? lc.get<std::string>() : std::to_string(lc.get<Index>());
    }
    c.header.reset();
    if (j.contains("header") && !j.at("header").is_null()) c.header = j.at("header").get<bool>();
    c.standardize = j.value("standardize", d.standardize);
    c.class_a = j.value("class_a", d.class_a);
    c.class_b = j.value("class_b", d.class_b);
    c.ratios = j.value("ratios", d.ratios);
    c.train_n1 = j.value("train_n1", d.train_n1);
}

std::string config_hash(const BenchConfig& config) {
    const std::string text = nlohmann::json(config).dump();
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

ScenarioSetup::ScenarioSetup(const ScenarioConfig& cfg) : config(cfg), model(make_scenario(cfg)) {
    lower0 = cholesky_lower(model.class0.covariance, "scenario class 0");
    lower1 = cholesky_lower(model.class1.covariance, "scenario class 1");
    swapped = cfg.n1 < cfg.n0;
    canonical = swapped ? model.swapped() : model;
    if (cfg.base_correlation == 0.0) {
        const SharedSpectrum s = scenario_spectrum(cfg, model);
        spectrum = swapped ? s.swapped() : s;
    }
}

Index ScenarioSetup::canonical_n(int i) const {
    const bool first = (i == 0) != swapped;
    return first ? config.n0 : config.n1;
}

RunResult run_replicate(const ScenarioSetup& setup, double gamma0, std::uint64_t stream) {
    const auto start = std::chrono::steady_clock::now();
    const ScenarioConfig& cfg = setup.config;
    if (cfg.test0 < 1 || cfg.test1 < 1) {
        throw InvalidArgument("run_replicate: need test0 >= 1 and test1 >= 1");
    }
    Rng rng(cfg.seed, stream);
    TrainingSet train{sample_with_factor(setup.model.class0.mean, setup.lower0, cfg.n0, rng),
                      sample_with_factor(setup.model.class1.mean, setup.lower1, cfg.n1, rng)};
    const Matrix test0 = sample_with_factor(setup.model.class0.mean, setup.lower0, cfg.test0, rng);
    const Matrix test1 = sample_with_factor(setup.model.class1.mean, setup.lower1, cfg.test1, rng);
    const Priors priors = setup.model.priors;

    RunResult r;
    r.scenario_id = "p" + std::to_string(cfg.p) + "-n" + std::to_string(cfg.n0) + "x" +
                    std::to_string(cfg.n1);
    r.seed = cfg.seed;
    r.stream = stream;
    r.gamma0 = gamma0;

    const DiscriminantRule truth = true_qda_rule(setup.model);
    r.true_qda = empirical_error(truth.score_batch(test0), truth.score_batch(test1), priors);

    const FittedStats shared = fit(train, gamma0, gamma0);
    const DiscriminantRule standard = rqda_rule(shared, priors);
    r.standard_rqda = empirical_error(standard.score_batch(test0), standard.score_batch(test1), priors);
    const DiscriminantRule lda = rlda_rule(fit_pooled(shared, gamma0), priors);
    r.rlda = empirical_error(lda.score_batch(test0), lda.score_batch(test1), priors);

    const ImprovedModel improved = fit_improved(train, gamma0, priors);
    r.gamma1_hat = improved.gamma1();
    r.theta_hat = improved.theta;
    r.improved_rqda = error_from_labels(predict(improved, test0), predict(improved, test1), priors);
    r.g = estimate_error(improved);

    const Index n0 = setup.canonical_n(0);
    const Index n1 = setup.canonical_n(1);
    const AsymptoticError theory =
        setup.spectrum ? asymptotic_error(setup.canonical, *setup.spectrum, n0, n1, gamma0,
                                          r.gamma1_hat, r.theta_hat)
                       : asymptotic_error(setup.canonical, n0, n1, gamma0, r.gamma1_hat, r.theta_hat);
    r.theorem1 = theory.total;
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
}

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

std::string render_csv(const CsvTable& table, const BenchConfig& config, const std::string& command) {
    std::ostringstream out;
    out << "# command=" << command << " seed=" << config.scenario.seed
        << " config_hash=" << config_hash(config) << '\n';
    for (std::size_t k = 0; k < table.header.size(); ++k) out << (k ? "," : "") << table.header[k];
    out << '\n';
    for (const auto& row : table.rows) {
        for (std::size_t k = 0; k < row.size(); ++k) out << (k ? "," : "") << row[k];
        out << '\n';
    }
    return out.str();
}

CsvTable cmd_histogram(const BenchConfig& config) {
    config.validate();
    const ScenarioSetup setup(config.scenario);
    const ScenarioConfig& cfg = setup.config;
    Rng rng(cfg.seed, 1);
    TrainingSet train{sample_with_factor(setup.model.class0.mean, setup.lower0, cfg.n0, rng),
                      sample_with_factor(setup.model.class1.mean, setup.lower1, cfg.n1, rng)};
    const std::array<Matrix, 2> test{
        sample_with_factor(setup.model.class0.mean, setup.lower0, cfg.test0, rng),
        sample_with_factor(setup.model.class1.mean, setup.lower1, cfg.test1, rng)};
    const Priors priors = setup.model.priors;

    const FittedStats shared = fit(train, config.gamma0, config.gamma0);
    const ImprovedModel improved = fit_improved(train, config.gamma0, priors);
    const double orient = improved.swapped() ? -1.0 : 1.0;

    CsvTable t;
    t.header = {"rule", "true_class", "score"};
    auto emit = [&](RuleKind kind, const Vector& s, int cls) {
        for (Index k = 0; k < s.size(); ++k) {
            t.rows.push_back({std::string(to_string(kind)), std::to_string(cls), format_number(s[k])});
        }
    };
    const DiscriminantRule truth = true_qda_rule(setup.model);
    const DiscriminantRule standard = rqda_rule(shared, priors);
    const DiscriminantRule lda = rlda_rule(fit_pooled(shared, config.gamma0), priors);
    for (int cls = 0; cls < 2; ++cls) emit(RuleKind::TrueQda, truth.score_batch(test[cls]), cls);
    for (int cls = 0; cls < 2; ++cls) emit(RuleKind::StandardRqda, standard.score_batch(test[cls]), cls);
    for (int cls = 0; cls < 2; ++cls) {
        emit(RuleKind::ImprovedRqda, orient * decision_scores(improved, test[cls]), cls);
    }
    for (int cls = 0; cls < 2; ++cls) emit(RuleKind::Rlda, lda.score_batch(test[cls]), cls);
    return t;
}

CsvTable cmd_sweep_gamma(const BenchConfig& config) {
    config.validate();
    const ScenarioSetup setup(config.scenario);
    const std::vector<double> grid = config.effective_grid();
    const auto outcomes = run_grid({&setup}, grid, config.replicates, config.threads);

    CsvTable t;
    t.header = {"gamma0",   "empirical_std_rqda", "empirical_improved", "empirical_rlda",
                "theorem1", "g_estimate",         "gamma1_hat",         "theta_hat",
                "failures", "note"};
    const std::size_t R = static_cast<std::size_t>(config.replicates);
    for (std::size_t g = 0; g < grid.size(); ++g) {
        Accumulator std_err, imp, lda, th, ge, g1, theta;
        std::vector<std::string> notes;
        int failures = 0;
        for (std::size_t r = 0; r < R; ++r) {
            const Outcome& o = outcomes[g * R + r];
            if (!o.result) {
                ++failures;
                if (notes.empty()) notes.push_back(o.failure);
                continue;
            }
            std_err.add(o.result->standard_rqda.total);
            imp.add(o.result->improved_rqda.total);
            lda.add(o.result->rlda.total);
            th.add(o.result->theorem1);
            ge.add(o.result->g.total_hat);
            g1.add(o.result->gamma1_hat);
            theta.add(o.result->theta_hat);
        }
        t.rows.push_back({format_number(grid[g]), format_number(std_err.mean()),
                          format_number(imp.mean()), format_number(lda.mean()),
                          format_number(th.mean()), format_number(ge.mean()),
                          format_number(g1.mean()), format_number(theta.mean()),
                          std::to_string(failures), join_notes(notes)});
    }
    return t;
}

CsvTable cmd_sweep_p(const BenchConfig& config) {
    config.validate();
    if (config.p_list.empty()) throw InvalidArgument("sweep-p: empty p list");
    std::vector<ScenarioSetup> setups;
    setups.reserve(config.p_list.size());
    for (Index p : config.p_list) {
        ScenarioConfig s = config.scenario;
        const double scale = static_cast<double>(p) / static_cast<double>(config.scenario.p);
        s.p = p;
        s.n0 = std::max<Index>(2, std::llround(static_cast<double>(config.scenario.n0) * scale));
        s.n1 = std::max<Index>(2, std::llround(static_cast<double>(config.scenario.n1) * scale));
        if (!config.scenario.spike_rank) s.spike_rank.reset();
        setups.emplace_back(s);
    }
    std::vector<const ScenarioSetup*> ptrs;
    for (const auto& s : setups) ptrs.push_back(&s);
    const auto outcomes = run_grid(ptrs, {config.gamma0}, config.replicates, config.threads);

    CsvTable t;
    t.header = {"p",     "n0",       "n1",         "true_qda", "std_rqda", "improved",
                "rlda",  "theorem1", "g_estimate", "failures", "note"};
    const std::size_t R = static_cast<std::size_t>(config.replicates);
    for (std::size_t s = 0; s < setups.size(); ++s) {
        Accumulator tq, st, imp, lda, th, ge;
        std::vector<std::string> notes;
        int failures = 0;
        for (std::size_t r = 0; r < R; ++r) {
            const Outcome& o = outcomes[s * R + r];
            if (!o.result) {
                ++failures;
                if (notes.empty()) notes.push_back(o.failure);
                continue;
            }
            tq.add(o.result->true_qda.total);
            st.add(o.result->standard_rqda.total);
            imp.add(o.result->improved_rqda.total);
            lda.add(o.result->rlda.total);
            th.add(o.result->theorem1);
            ge.add(o.result->g.total_hat);
        }
        const ScenarioConfig& c = setups[s].config;
        t.rows.push_back({std::to_string(c.p), std::to_string(c.n0), std::to_string(c.n1),
                          format_number(tq.mean()), format_number(st.mean()),
                          format_number(imp.mean()), format_number(lda.mean()),
                          format_number(th.mean()), format_number(ge.mean()),
                          std::to_string(failures), join_notes(notes)});
    }
    return t;
}

namespace {

LabeledDataset load_bench_dataset(const BenchConfig& config) {
    if (config.dataset.empty()) throw InvalidArgument("real: --dataset is required");
    CsvOptions opt;
    opt.header = config.header;
    opt.standardize = config.standardize;
    const std::string& lc = config.label_column;
    const bool numeric = !lc.empty() && lc.find_first_not_of("0123456789") == std::string::npos;
    if (numeric) {
        opt.label_column = static_cast<Index>(std::stoll(lc));
    } else {
        opt.label_column = lc;
    }
    return load_csv(config.dataset, opt);
}

struct RealOutcome {
    double standard = kNaN, improved = kNaN, rlda = kNaN, g_estimate = kNaN;
    Index n0 = 0, n1 = 0;
    std::string failure;
};

RealOutcome run_split(const LabeledDataset& ds, const BenchConfig& config, double ratio,
                      std::uint64_t stream) {
    SplitRequest req;
    req.class_a = config.class_a;
    req.class_b = config.class_b;
    req.ratio = ratio;
    req.n1 = config.train_n1;
    req.seed = Rng(config.scenario.seed, stream).next_u64();
    const DatasetSplit split = make_imbalanced_split(ds, req);
    if (split.test0.rows() == 0 || split.test1.rows() == 0) {
        throw InsufficientSamples("real: no held-out rows left for one of the classes");
    }
    const Priors priors = config.scenario.prior0
                              ? Priors{*config.scenario.prior0, 1.0 - *config.scenario.prior0}
                              : Priors::from_counts(split.train.n0(), split.train.n1());
    RealOutcome o;
    o.n0 = split.train.n0();
    o.n1 = split.train.n1();
    const FittedStats shared = fit(split.train, config.gamma0, config.gamma0);
    const DiscriminantRule standard = rqda_rule(shared, priors);
    o.standard =
        empirical_error(standard.score_batch(split.test0), standard.score_batch(split.test1), priors)
            .total;
    const DiscriminantRule lda = rlda_rule(fit_pooled(shared, config.gamma0), priors);
    o.rlda = empirical_error(lda.score_batch(split.test0), lda.score_batch(split.test1), priors).total;
    const ImprovedModel improved = fit_improved(split.train, config.gamma0, priors);
    o.improved =
        error_from_labels(predict(improved, split.test0), predict(improved, split.test1), priors).total;
    o.g_estimate = estimate_error(improved).total_hat;
    return o;
}

}  // namespace

CsvTable cmd_real(const BenchConfig& config) {
    config.validate();
    if (config.ratios.empty()) throw InvalidArgument("real: empty ratio list");
    LabeledDataset ds = load_bench_dataset(config);
    ds.index_classes(1);

    const std::size_t R = static_cast<std::size_t>(config.replicates);
    std::vector<RealOutcome> out(config.ratios.size() * R);
    parallel_for(out.size(), config.threads, [&](std::size_t k) {
        try {
            out[k] = run_split(ds, config, config.ratios[k / R], 1 + k % R);
        } catch (const NumericalError& e) {
            out[k].failure = e.what();
        }
    });

    CsvTable t;
    t.header = {"ratio", "method", "error", "n0", "n1", "splits", "failures", "note"};
    for (std::size_t q = 0; q < config.ratios.size(); ++q) {
        Accumulator st, imp, lda, ge;
        std::vector<std::string> notes;
        int failures = 0;
        Index n0 = 0, n1 = 0;
        for (std::size_t r = 0; r < R; ++r) {
            const RealOutcome& o = out[q * R + r];
            if (!o.failure.empty()) {
                ++failures;
                if (notes.empty()) notes.push_back(o.failure);
                continue;
            }
            n0 = o.n0;
            n1 = o.n1;
            st.add(o.standard);
            imp.add(o.improved);
            lda.add(o.rlda);
            ge.add(o.g_estimate);
        }
        const std::string ratio = format_number(config.ratios[q]);
        const std::string note = join_notes(notes);
        const std::pair<const char*, const Accumulator*> methods[] = {
            {"g-estimate", &ge}, {"improved-rqda", &imp}, {"rlda", &lda}, {"standard-rqda", &st}};
        for (const auto& [name, acc] : methods) {
            t.rows.push_back({ratio, name, format_number(acc->mean()), std::to_string(n0),
                              std::to_string(n1), std::to_string(acc->count),
                              std::to_string(failures), note});
        }
    }
    return t;
}

CsvTable cmd_tune(const BenchConfig& config) {
    config.validate();
    const std::vector<double> grid = config.effective_grid();
    TrainingSet train;
    Matrix test0, test1;
    std::optional<Priors> priors;
    if (!config.dataset.empty()) {
        LabeledDataset ds = load_bench_dataset(config);
        ds.index_classes(1);
        SplitRequest req;
        req.class_a = config.class_a;
        req.class_b = config.class_b;
        req.ratio = config.ratios.empty() ? 1.0 : config.ratios.front();
        req.n1 = config.train_n1;
        req.seed = Rng(config.scenario.seed, 1).next_u64();
        DatasetSplit split = make_imbalanced_split(ds, req);
        train = std::move(split.train);
        test0 = std::move(split.test0);
        test1 = std::move(split.test1);
        if (config.scenario.prior0) priors = Priors{*config.scenario.prior0, 1.0 - *config.scenario.prior0};
    } else {
        const ScenarioSetup setup(config.scenario);
        const ScenarioConfig& cfg = setup.config;
        Rng rng(cfg.seed, 1);
        train = {sample_with_factor(setup.model.class0.mean, setup.lower0, cfg.n0, rng),
                 sample_with_factor(setup.model.class1.mean, setup.lower1, cfg.n1, rng)};
        test0 = sample_with_factor(setup.model.class0.mean, setup.lower0, cfg.test0, rng);
        test1 = sample_with_factor(setup.model.class1.mean, setup.lower1, cfg.test1, rng);
        priors = setup.model.priors;
    }
    const Priors used = priors.value_or(Priors::from_counts(train.n0(), train.n1()));
    const TuningResult tuned = tune_gamma0(train, grid, used, config.threads);

    std::vector<double> empirical(grid.size(), kNaN);
    if (test0.rows() > 0 && test1.rows() > 0) {
        parallel_for(grid.size(), config.threads, [&](std::size_t k) {
            if (!tuned.trace[k].total_hat) return;
            const ImprovedModel m = fit_improved(train, grid[k], used);
            empirical[k] = error_from_labels(predict(m, test0), predict(m, test1), used).total;
        });
    }

    CsvTable t;
    t.header = {"gamma0", "g_estimate", "empirical_improved", "selected", "note"};
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const TuningPoint& point = tuned.trace[k];
        t.rows.push_back({format_number(point.gamma0),
                          format_number(point.total_hat.value_or(kNaN)),
                          format_number(empirical[k]),
                          point.gamma0 == tuned.gamma0_star ? "1" : "0",
                          join_notes({point.failure})});
    }
    spdlog::info("tune: selected gamma0={} theta={}", tuned.gamma0_star, tuned.model.theta);
    return t;
}

}  // namespace rqda
