// Desk-scale experiment driver: emits plot-ready CSV for the synthetic and
// real-data protocols.

#include "rqda/bench.h"

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

std::vector<double> parse_double_list(const std::string& text, const char* flag) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw rqda::InvalidArgument(std::string("--") + flag + ": '" + item + "' is not a number");
        }
    }
    return out;
}

struct Overrides {
    std::optional<std::string> config_path;
    std::optional<std::uint64_t> seed;
    std::optional<int> replicates, threads;
    std::optional<rqda::Index> p, n0, n1, test0, test1, spike_rank, train_n1;
    std::optional<double> base_scale, spike_strength, mean_offset, base_correlation, prior0, gamma0;
    std::optional<std::string> gamma_grid, p_list, ratios, dataset, label_column;
    std::optional<int> class_a, class_b;
    bool standardize = false;
    bool no_header = false;
    std::string out;
    bool verbose = false;
};

void add_common(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--config", o.config_path, "JSON config file");
    cmd->add_option("--seed", o.seed, "master seed");
    cmd->add_option("--out", o.out, "output CSV path (default stdout)");
    cmd->add_option("--replicates", o.replicates, "training replicates / splits");
    cmd->add_option("--threads", o.threads, "worker threads (0 = all cores)");
    cmd->add_option("--p", o.p, "dimension");
    cmd->add_option("--n0", o.n0, "training size of class 0");
    cmd->add_option("--n1", o.n1, "training size of class 1");
    cmd->add_option("--test0", o.test0, "test size of class 0");
    cmd->add_option("--test1", o.test1, "test size of class 1");
    cmd->add_option("--base-scale", o.base_scale);
    cmd->add_option("--spike-strength", o.spike_strength);
    cmd->add_option("--spike-rank", o.spike_rank);
    cmd->add_option("--mean-offset", o.mean_offset);
    cmd->add_option("--base-correlation", o.base_correlation);
    cmd->add_option("--prior0", o.prior0, "prior of class 0 (default: training proportion)");
    cmd->add_option("--gamma0", o.gamma0, "regularizer of the minority class");
    cmd->add_option("--gamma-grid", o.gamma_grid, "comma-separated gamma0 values");
    cmd->add_flag("-v,--verbose", o.verbose);
}

void add_dataset(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--dataset", o.dataset, "CSV file");
    cmd->add_option("--label-column", o.label_column, "label column name or zero-based index");
    cmd->add_option("--class-a", o.class_a, "label used as training class 0");
    cmd->add_option("--class-b", o.class_b, "label used as training class 1");
    cmd->add_option("--ratios", o.ratios, "comma-separated n0/n1 ratios");
    cmd->add_option("--train-n1", o.train_n1, "training rows of class b");
    cmd->add_flag("--standardize", o.standardize, "z-score every feature column");
    cmd->add_flag("--no-header", o.no_header, "first row is data");
}

rqda::BenchConfig build_config(const Overrides& o) {
    rqda::BenchConfig c;
    if (o.config_path) {
        std::ifstream in(*o.config_path);
        if (!in) throw rqda::InvalidArgument("cannot open config " + *o.config_path);
        try {
            c = nlohmann::json::parse(in).get<rqda::BenchConfig>();
        } catch (const nlohmann::json::exception& e) {
            throw rqda::InvalidArgument("config " + *o.config_path + ": " + e.what());
        }
    }
    auto& s = c.scenario;
    if (o.seed) s.seed = *o.seed;
    if (o.replicates) c.replicates = *o.replicates;
    if (o.threads) c.threads = *o.threads;
    if (o.p) s.p = *o.p;
    if (o.n0) s.n0 = *o.n0;
    if (o.n1) s.n1 = *o.n1;
    if (o.test0) s.test0 = *o.test0;
    if (o.test1) s.test1 = *o.test1;
    if (o.base_scale) s.base_scale = *o.base_scale;
    if (o.spike_strength) s.spike_strength = *o.spike_strength;
    if (o.spike_rank) s.spike_rank = *o.spike_rank;
    if (o.mean_offset) s.mean_offset = *o.mean_offset;
    if (o.base_correlation) s.base_correlation = *o.base_correlation;
    if (o.prior0) s.prior0 = *o.prior0;
    if (o.gamma0) c.gamma0 = *o.gamma0;
    if (o.gamma_grid) c.gamma_grid = parse_double_list(*o.gamma_grid, "gamma-grid");
    if (o.p_list) {
        c.p_list.clear();
        for (double v : parse_double_list(*o.p_list, "p-list")) c.p_list.push_back(static_cast<rqda::Index>(v));
    }
    if (o.ratios) c.ratios = parse_double_list(*o.ratios, "ratios");
    if (o.dataset) c.dataset = *o.dataset;
    if (o.label_column) c.label_column = *o.label_column;
    if (o.class_a) c.class_a = *o.class_a;
    if (o.class_b) c.class_b = *o.class_b;
    if (o.train_n1) c.train_n1 = *o.train_n1;
    if (o.standardize) c.standardize = true;
    if (o.no_header) c.header = false;
    c.validate();
    return c;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"rqda_bench: improved R-QDA experiments"};
    app.require_subcommand(1);
    Overrides o;

    auto* histogram = app.add_subcommand("histogram", "raw discriminant scores per rule and class");
    auto* sweep_gamma = app.add_subcommand("sweep-gamma", "error versus gamma0");
    auto* sweep_p = app.add_subcommand("sweep-p", "error versus dimension");
    auto* real = app.add_subcommand("real", "real-data imbalance-ratio protocol");
    auto* tune = app.add_subcommand("tune", "G-estimator tuning trace");
    for (auto* cmd : {histogram, sweep_gamma, sweep_p, real, tune}) add_common(cmd, o);
    sweep_p->add_option("--p-list", o.p_list, "comma-separated dimensions");
    add_dataset(real, o);
    add_dataset(tune, o);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    spdlog::set_level(o.verbose ? spdlog::level::debug : spdlog::level::warn);
    try {
        const rqda::BenchConfig config = build_config(o);
        rqda::CsvTable table;
        std::string command;
        if (*histogram) {
            command = "histogram";
            table = rqda::cmd_histogram(config);
        } else if (*sweep_gamma) {
            command = "sweep-gamma";
            table = rqda::cmd_sweep_gamma(config);
        } else if (*sweep_p) {
            command = "sweep-p";
            table = rqda::cmd_sweep_p(config);
        } else if (*real) {
            command = "real";
            table = rqda::cmd_real(config);
        } else {
            command = "tune";
            table = rqda::cmd_tune(config);
        }
        const std::string csv = rqda::render_csv(table, config, command);
        if (o.out.empty()) {
            std::cout << csv;
        } else {
            std::ofstream out(o.out, std::ios::binary);
            if (!out) throw rqda::InvalidArgument("cannot open output " + o.out);
            out << csv;
        }
    } catch (const rqda::InvalidArgument& e) {
        spdlog::error("{}", e.what());
        return 1;
    } catch (const rqda::NumericalError& e) {
        spdlog::error("{}", e.what());
        return 2;
    }
    return 0;
}
