#ifndef FEDSIM_GRID_HPP
#define FEDSIM_GRID_HPP

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fedsim/engine.hpp"
#include "fedsim/error.hpp"
#include "fedsim/stats.hpp"

namespace fedsim {

// A base configuration plus axis lists whose cross-product defines the grid.
// Missing axes fall back to the base config's single value.
struct GridSpec {
    ExperimentConfig base;
    std::vector<AggregatorKind> aggregators;
    std::vector<ThreatKind> threats;
    std::vector<double> proportions;
    std::vector<double> non_iid_degrees;
};

struct GridCell {
    std::string id;
    ExperimentConfig config;
};

namespace detail {

// Shortest decimal form that round-trips; used for every double we write so
// output files are byte-stable.
inline std::string format_double(double value) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    if (ec != std::errc()) {
        throw Error("format_double: conversion failed");
    }
    return std::string(buf, ptr);
}

inline AggregatorKind parse_aggregator(const std::string& name, const std::string& path) {
    static const std::map<std::string, AggregatorKind> table = {
        {"fedavg", AggregatorKind::FedAvg},
        {"krum", AggregatorKind::Krum},
        {"median", AggregatorKind::Median},
        {"trimmed_mean", AggregatorKind::TrimmedMean},
        {"ensemble", AggregatorKind::Ensemble},
    };
    const auto it = table.find(name);
    if (it == table.end()) {
        throw ConfigError(path + ": unknown aggregator '" + name +
                          "' (valid: fedavg, krum, median, trimmed_mean, ensemble)");
    }
    return it->second;
}

inline ThreatKind parse_threat(const std::string& name, const std::string& path) {
    static const std::map<std::string, ThreatKind> table = {
        {"none", ThreatKind::None},
        {"label_flip", ThreatKind::LabelFlip},
        {"random_update", ThreatKind::RandomUpdate},
        {"sign_flip", ThreatKind::SignFlip},
        {"backdoor", ThreatKind::Backdoor},
        {"noise", ThreatKind::NoiseMut},
        {"delete", ThreatKind::DeleteMut},
        {"unbalance", ThreatKind::UnbalanceMut},
        {"overlap", ThreatKind::OverlapMut},
    };
    const auto it = table.find(name);
    if (it == table.end()) {
        throw ConfigError(path + ": unknown threat '" + name +
                          "' (valid: none, label_flip, random_update, sign_flip, backdoor, "
                          "noise, delete, unbalance, overlap)");
    }
    return it->second;
}

inline const char* threat_name(ThreatKind k) {
    switch (k) {
    case ThreatKind::None: return "none";
    case ThreatKind::LabelFlip: return "label_flip";
    case ThreatKind::RandomUpdate: return "random_update";
    case ThreatKind::SignFlip: return "sign_flip";
    case ThreatKind::Backdoor: return "backdoor";
    case ThreatKind::NoiseMut: return "noise";
    case ThreatKind::DeleteMut: return "delete";
    case ThreatKind::UnbalanceMut: return "unbalance";
    case ThreatKind::OverlapMut: return "overlap";
    }
    return "?";
}

inline void reject_unknown_keys(const nlohmann::json& obj, const std::string& path,
                                std::initializer_list<const char*> allowed) {
    for (const auto& item : obj.items()) {
        bool known = false;
        for (const char* key : allowed) {
            if (item.key() == key) {
                known = true;
                break;
            }
        }
        if (!known) {
            std::string valid;
            for (const char* key : allowed) {
                valid += valid.empty() ? key : std::string(", ") + key;
            }
            throw ConfigError(path + ": unknown key '" + item.key() + "' (valid: " + valid + ")");
        }
    }
}

template <typename T>
T get_as(const nlohmann::json& obj, const std::string& path, const char* key, T fallback) {
    if (!obj.contains(key)) {
        return fallback;
    }
    try {
        return obj.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError(path + "." + key + ": wrong value type");
    }
}

} // namespace detail

// Parses and validates a grid configuration. Unknown keys, unknown enum
// values, and out-of-range numbers are reported with their field path; every
// grid cell must map to a valid ExperimentConfig.
inline GridSpec parse_grid_spec(const nlohmann::json& root) {
    using detail::get_as;
    using detail::reject_unknown_keys;

    if (!root.is_object()) {
        throw ConfigError("config: top level must be an object");
    }
    reject_unknown_keys(root, "config",
                        {"master_seed", "dataset", "model", "training", "federation",
                         "partition", "aggregator", "threat", "grid"});
    GridSpec spec;
    ExperimentConfig& base = spec.base;
    base.master_seed = get_as<std::uint64_t>(root, "config", "master_seed", base.master_seed);

    if (!root.contains("dataset")) {
        throw ConfigError("config: missing required key 'dataset'");
    }
    const auto& dataset = root.at("dataset");
    const auto type = get_as<std::string>(dataset, "dataset", "type", "synthetic");
    if (type == "synthetic") {
        reject_unknown_keys(dataset, "dataset",
                            {"type", "num_classes", "feature_dim", "per_class", "spread", "seed"});
        base.dataset.type = DatasetSource::Type::Synthetic;
        auto& s = base.dataset.synthetic;
        s.num_classes = get_as<int>(dataset, "dataset", "num_classes", s.num_classes);
        s.feature_dim = get_as<std::size_t>(dataset, "dataset", "feature_dim", s.feature_dim);
        s.per_class = get_as<std::size_t>(dataset, "dataset", "per_class", s.per_class);
        s.spread = get_as<double>(dataset, "dataset", "spread", s.spread);
        s.seed = get_as<std::uint64_t>(dataset, "dataset", "seed", s.seed);
        if (s.num_classes < 2) {
            throw ConfigError("dataset.num_classes: must be at least 2");
        }
        if (s.spread < 0.0) {
            throw ConfigError("dataset.spread: must be non-negative");
        }
    } else if (type == "csv") {
        reject_unknown_keys(dataset, "dataset", {"type", "path"});
        base.dataset.type = DatasetSource::Type::Csv;
        base.dataset.csv_path = get_as<std::string>(dataset, "dataset", "path", "");
        if (base.dataset.csv_path.empty()) {
            throw ConfigError("dataset.path: required for csv datasets");
        }
    } else {
        throw ConfigError("dataset.type: unknown type '" + type + "' (valid: synthetic, csv)");
    }

    if (root.contains("model")) {
        const auto& model = root.at("model");
        reject_unknown_keys(model, "model", {"hidden_dims"});
        base.hidden_dims = get_as<std::vector<std::size_t>>(model, "model", "hidden_dims",
                                                            base.hidden_dims);
        for (const std::size_t d : base.hidden_dims) {
            if (d == 0) {
                throw ConfigError("model.hidden_dims: layer widths must be positive");
            }
        }
    }

    if (root.contains("training")) {
        const auto& training = root.at("training");
        reject_unknown_keys(training, "training", {"learning_rate", "batch_size", "local_epochs"});
        base.training.learning_rate =
            get_as<double>(training, "training", "learning_rate", base.training.learning_rate);
        base.training.batch_size =
            get_as<std::size_t>(training, "training", "batch_size", base.training.batch_size);
        base.training.local_epochs =
            get_as<std::size_t>(training, "training", "local_epochs", base.training.local_epochs);
        if (!(base.training.learning_rate > 0.0)) {
            throw ConfigError("training.learning_rate: must be positive");
        }
        if (base.training.batch_size == 0 || base.training.local_epochs == 0) {
            throw ConfigError("training.batch_size/local_epochs: must be positive");
        }
    }

    if (root.contains("federation")) {
        const auto& fed = root.at("federation");
        reject_unknown_keys(fed, "federation",
                            {"mode", "num_clients", "clients_per_round", "rounds", "num_runs"});
        const auto mode = get_as<std::string>(fed, "federation", "mode", "cross-device");
        if (mode == "cross-device") {
            base.mode = FederationMode::CrossDevice;
        } else if (mode == "cross-silo") {
            base.mode = FederationMode::CrossSilo;
        } else {
            throw ConfigError("federation.mode: unknown mode '" + mode +
                              "' (valid: cross-device, cross-silo)");
        }
        base.num_clients = get_as<std::size_t>(fed, "federation", "num_clients", base.num_clients);
        base.clients_per_round =
            get_as<std::size_t>(fed, "federation", "clients_per_round", base.clients_per_round);
        base.rounds = get_as<std::size_t>(fed, "federation", "rounds", base.rounds);
        base.num_runs = get_as<std::size_t>(fed, "federation", "num_runs", base.num_runs);
        if (base.mode == FederationMode::CrossSilo) {
            base.clients_per_round = base.num_clients;
        }
    }

    if (root.contains("partition")) {
        const auto& part = root.at("partition");
        reject_unknown_keys(part, "partition", {"non_iid_degree"});
        base.non_iid_degree = get_as<double>(part, "partition", "non_iid_degree", base.non_iid_degree);
        if (!(base.non_iid_degree >= 0.0 && base.non_iid_degree < 1.0)) {
            throw ConfigError("partition.non_iid_degree: must be in [0, 1)");
        }
    }

    if (root.contains("aggregator")) {
        const auto& agg = root.at("aggregator");
        reject_unknown_keys(agg, "aggregator", {"kind", "krum_f", "trim_beta"});
        base.aggregator.kind = detail::parse_aggregator(
            get_as<std::string>(agg, "aggregator", "kind", "fedavg"), "aggregator.kind");
        if (agg.contains("krum_f")) {
            base.aggregator.krum_f = get_as<int>(agg, "aggregator", "krum_f", 0);
        }
        if (agg.contains("trim_beta")) {
            base.aggregator.trim_beta = get_as<double>(agg, "aggregator", "trim_beta", 0.0);
        }
    }

    if (root.contains("threat")) {
        const auto& threat = root.at("threat");
        reject_unknown_keys(threat, "threat",
                            {"kind", "proportion", "std_dev", "multiplier", "portion", "noise_pct",
                             "target_label", "pattern_indices", "pattern_value", "poison_fraction"});
        base.threat.kind = detail::parse_threat(
            get_as<std::string>(threat, "threat", "kind", "none"), "threat.kind");
        base.threat.proportion = get_as<double>(threat, "threat", "proportion", base.threat.proportion);
        base.threat.std_dev = get_as<double>(threat, "threat", "std_dev", base.threat.std_dev);
        base.threat.multiplier = get_as<double>(threat, "threat", "multiplier", base.threat.multiplier);
        base.threat.portion = get_as<double>(threat, "threat", "portion", base.threat.portion);
        base.threat.noise_pct = get_as<double>(threat, "threat", "noise_pct", base.threat.noise_pct);
        base.threat.target_label =
            get_as<int>(threat, "threat", "target_label", base.threat.target_label);
        base.threat.pattern.indices = get_as<std::vector<std::size_t>>(
            threat, "threat", "pattern_indices", base.threat.pattern.indices);
        base.threat.pattern.value =
            get_as<double>(threat, "threat", "pattern_value", base.threat.pattern.value);
        base.threat.poison_fraction =
            get_as<double>(threat, "threat", "poison_fraction", base.threat.poison_fraction);
        if (!(base.threat.proportion >= 0.0 && base.threat.proportion <= 1.0)) {
            throw ConfigError("threat.proportion: must be in [0, 1]");
        }
    }

    if (root.contains("grid")) {
        const auto& grid = root.at("grid");
        reject_unknown_keys(grid, "grid",
                            {"aggregators", "threats", "proportions", "non_iid_degrees"});
        for (const auto& name : get_as<std::vector<std::string>>(grid, "grid", "aggregators", {})) {
            spec.aggregators.push_back(detail::parse_aggregator(name, "grid.aggregators"));
        }
        for (const auto& name : get_as<std::vector<std::string>>(grid, "grid", "threats", {})) {
            spec.threats.push_back(detail::parse_threat(name, "grid.threats"));
        }
        spec.proportions = get_as<std::vector<double>>(grid, "grid", "proportions", {});
        for (const double p : spec.proportions) {
            if (!(p >= 0.0 && p <= 1.0)) {
                throw ConfigError("grid.proportions: value " + detail::format_double(p) +
                                  " out of range [0, 1]");
            }
        }
        spec.non_iid_degrees = get_as<std::vector<double>>(grid, "grid", "non_iid_degrees", {});
        for (const double q : spec.non_iid_degrees) {
            if (!(q >= 0.0 && q < 1.0)) {
                throw ConfigError("grid.non_iid_degrees: value " + detail::format_double(q) +
                                  " out of range [0, 1)");
            }
        }
    }

    if (spec.aggregators.empty()) {
        spec.aggregators = {base.aggregator.kind};
    }
    if (spec.threats.empty()) {
        spec.threats = {base.threat.kind};
    }
    if (spec.proportions.empty()) {
        spec.proportions = {base.threat.proportion};
    }
    if (spec.non_iid_degrees.empty()) {
        spec.non_iid_degrees = {base.non_iid_degree};
    }
    return spec;
}

inline GridSpec parse_grid_spec_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("config: cannot open " + path);
    }
    nlohmann::json root;
    try {
        root = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        // e.what() carries the byte position of the failure.
        throw ConfigError(path + ": " + e.what());
    }
    return parse_grid_spec(root);
}

inline std::string cell_id(AggregatorKind agg, ThreatKind threat, double p, double q) {
    return std::string(aggregator_name(agg)) + "__" + detail::threat_name(threat) + "__p" +
           detail::format_double(p) + "__q" + detail::format_double(q);
}

// Cross product in fixed nesting order: aggregator, threat, proportion,
// non-iid degree. Every cell is validated here.
inline std::vector<GridCell> expand_grid(const GridSpec& spec) {
    std::vector<GridCell> cells;
    for (const AggregatorKind agg : spec.aggregators) {
        for (const ThreatKind threat : spec.threats) {
            for (const double p : spec.proportions) {
                for (const double q : spec.non_iid_degrees) {
                    GridCell cell;
                    cell.config = spec.base;
                    cell.config.aggregator.kind = agg;
                    cell.config.threat.kind = threat;
                    cell.config.threat.proportion = p;
                    cell.config.non_iid_degree = q;
                    cell.id = cell_id(agg, threat, p, q);
                    cell.config.validate();
                    cells.push_back(std::move(cell));
                }
            }
        }
    }
    return cells;
}

struct CellOutcome {
    std::string id;
    AggregatorKind aggregator = AggregatorKind::FedAvg;
    ThreatKind threat = ThreatKind::None;
    double proportion = 0.0;
    double non_iid_degree = 0.0;
    std::string status; // executed | resumed | krum_precondition | failed
    std::string error;
    std::vector<double> final_test_accuracy;     // per completed run
    std::vector<double> final_backdoor_accuracy; // per completed run, backdoor only
    std::optional<double> median_test_accuracy;
    std::optional<double> median_backdoor_accuracy;
    std::string csv_file;
};

struct GridOutcome {
    std::vector<CellOutcome> cells;
    std::size_t executed = 0;
    std::size_t resumed = 0;
    std::size_t failed = 0;
    bool krum_precondition_failure = false;

    bool all_ok() const { return failed == 0; }
};

namespace detail {

inline std::string csv_filename(const std::string& id) { return id + ".csv"; }

inline void write_cell_csv(const std::filesystem::path& path, const RepeatedResult& result) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot write " + path.string());
    }
    out << "round,run,test_accuracy,backdoor_accuracy,chosen_aggregator\n";
    for (std::size_t run = 0; run < result.runs.size(); ++run) {
        if (!result.runs[run]) {
            continue;
        }
        for (const RoundRecord& rec : result.runs[run]->trace) {
            out << rec.round << ',' << run << ',' << format_double(rec.test_accuracy) << ',';
            if (rec.backdoor_accuracy) {
                out << format_double(*rec.backdoor_accuracy);
            }
            out << ',';
            if (rec.chosen_aggregator) {
                out << aggregator_name(*rec.chosen_aggregator);
            }
            out << '\n';
        }
    }
}

// Recovers the per-run final metrics from an existing cell CSV so a resumed
// grid still produces a complete summary.
inline bool read_cell_finals(const std::filesystem::path& path, CellOutcome& cell) {
    std::ifstream in(path);
    if (!in) {
        return false;
    }
    std::string line;
    if (!std::getline(in, line) ||
        line != "round,run,test_accuracy,backdoor_accuracy,chosen_aggregator") {
        return false;
    }
    std::map<std::size_t, std::pair<double, std::optional<double>>> finals;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        std::vector<std::string> cols;
        std::stringstream ss(line);
        std::string col;
        while (std::getline(ss, col, ',')) {
            cols.push_back(col);
        }
        cols.resize(5);
        try {
            const auto run = static_cast<std::size_t>(std::stoull(cols[1]));
            const double acc = std::stod(cols[2]);
            std::optional<double> backdoor;
            if (!cols[3].empty()) {
                backdoor = std::stod(cols[3]);
            }
            finals[run] = {acc, backdoor}; // rows are round-ascending; last one wins
        } catch (const std::exception&) {
            return false;
        }
    }
    if (finals.empty()) {
        return false;
    }
    for (const auto& [run, metrics] : finals) {
        cell.final_test_accuracy.push_back(metrics.first);
        if (metrics.second) {
            cell.final_backdoor_accuracy.push_back(*metrics.second);
        }
    }
    return true;
}

} // namespace detail

inline nlohmann::ordered_json summary_json(const GridOutcome& outcome,
                                           const ExperimentConfig& base) {
    nlohmann::ordered_json summary;
    summary["master_seed"] = base.master_seed;
    summary["num_runs"] = base.num_runs;
    summary["rounds"] = base.rounds;
    summary["cells"] = nlohmann::ordered_json::array();
    for (const CellOutcome& cell : outcome.cells) {
        nlohmann::ordered_json j;
        j["id"] = cell.id;
        j["aggregator"] = aggregator_name(cell.aggregator);
        j["threat"] = detail::threat_name(cell.threat);
        j["proportion"] = cell.proportion;
        j["non_iid_degree"] = cell.non_iid_degree;
        // executed and resumed cells hold identical data; the summary must
        // not depend on which invocation produced it
        j["status"] = (cell.status == "executed" || cell.status == "resumed") ? "ok" : cell.status;
        if (!cell.error.empty()) {
            j["error"] = cell.error;
        }
        if (!cell.final_test_accuracy.empty()) {
            j["final_test_accuracy_per_run"] = cell.final_test_accuracy;
            j["final_test_accuracy_median"] = *cell.median_test_accuracy;
        }
        if (!cell.final_backdoor_accuracy.empty()) {
            j["final_backdoor_accuracy_per_run"] = cell.final_backdoor_accuracy;
            j["final_backdoor_accuracy_median"] = *cell.median_backdoor_accuracy;
        }
        if (!cell.csv_file.empty()) {
            j["csv"] = cell.csv_file;
        }
        summary["cells"].push_back(std::move(j));
    }
    return summary;
}

// Executes every cell of the grid, writing one CSV per cell plus a summary
// JSON. Cells whose CSV already exists are skipped unless force is set; their
// finals are re-read so the summary stays complete. Worker threads only
// parallelize the runs inside one cell, so file writes stay single-threaded
// and output bytes are independent of the thread count.
inline GridOutcome run_grid(const GridSpec& spec, const std::filesystem::path& out_dir,
                            bool force = false, unsigned threads = 1,
                            std::ostream* log = nullptr) {
    const auto cells = expand_grid(spec);
    if (log) {
        *log << "grid: " << cells.size() << " cell(s), " << spec.base.num_runs
             << " run(s) each\n";
    }
    std::filesystem::create_directories(out_dir);

    GridOutcome outcome;
    for (const GridCell& cell : cells) {
        CellOutcome result;
        result.id = cell.id;
        result.aggregator = cell.config.aggregator.kind;
        result.threat = cell.config.threat.kind;
        result.proportion = cell.config.threat.proportion;
        result.non_iid_degree = cell.config.non_iid_degree;
        result.csv_file = detail::csv_filename(cell.id);
        const auto csv_path = out_dir / result.csv_file;

        if (!force && std::filesystem::exists(csv_path) &&
            detail::read_cell_finals(csv_path, result)) {
            result.status = "resumed";
            ++outcome.resumed;
        } else {
            const RepeatedResult repeated = run_repeated(cell.config, threads);
            if (repeated.all_failed()) {
                result.status = repeated.krum_precondition_failure ? "krum_precondition" : "failed";
                for (const auto& err : repeated.run_errors) {
                    if (!err.empty()) {
                        result.error = err;
                        break;
                    }
                }
                result.csv_file.clear();
                ++outcome.failed;
                outcome.krum_precondition_failure |= repeated.krum_precondition_failure;
            } else {
                detail::write_cell_csv(csv_path, repeated);
                result.status = "executed";
                ++outcome.executed;
                for (const auto& run : repeated.runs) {
                    if (!run) {
                        continue;
                    }
                    result.final_test_accuracy.push_back(run->final_test_accuracy);
                    if (run->final_backdoor_accuracy) {
                        result.final_backdoor_accuracy.push_back(*run->final_backdoor_accuracy);
                    }
                }
                if (repeated.completed < cell.config.num_runs && log) {
                    *log << "warning: cell " << cell.id << " completed only "
                         << repeated.completed << "/" << cell.config.num_runs << " runs\n";
                }
            }
        }
        if (!result.final_test_accuracy.empty()) {
            result.median_test_accuracy = median_of(result.final_test_accuracy);
        }
        if (!result.final_backdoor_accuracy.empty()) {
            result.median_backdoor_accuracy = median_of(result.final_backdoor_accuracy);
        }
        if (log) {
            *log << cell.id << ": " << result.status;
            if (result.median_test_accuracy) {
                *log << " median_test_accuracy=" << detail::format_double(*result.median_test_accuracy);
            }
            if (result.median_backdoor_accuracy) {
                *log << " median_backdoor_accuracy="
                     << detail::format_double(*result.median_backdoor_accuracy);
            }
            *log << '\n';
        }
        outcome.cells.push_back(std::move(result));
    }

    std::ofstream summary(out_dir / "summary.json", std::ios::binary);
    if (!summary) {
        throw Error("cannot write " + (out_dir / "summary.json").string());
    }
    summary << summary_json(outcome, spec.base).dump(2) << '\n';
    return outcome;
}

struct CompareRow {
    std::string id;
    std::string metric; // test_accuracy or backdoor_accuracy
    double median_a = 0.0;
    double median_b = 0.0;
    std::optional<double> u;
    std::optional<double> p_value;
    bool significant = false;
};

struct CompareReport {
    std::vector<CompareRow> rows;
    std::vector<std::string> warnings;
};

// Per shared cell: medians of both result sets, Mann-Whitney U on the per-run
// finals, and a significance flag at 0.05. Backdoor cells compare the
// backdoor-task metric, everything else the test accuracy.
inline CompareReport compare_summaries(const nlohmann::json& a, const nlohmann::json& b) {
    CompareReport report;
    std::map<std::string, nlohmann::json> b_cells;
    for (const auto& cell : b.at("cells")) {
        b_cells[cell.at("id").get<std::string>()] = cell;
    }
    for (const auto& cell_a : a.at("cells")) {
        const auto id = cell_a.at("id").get<std::string>();
        const auto it = b_cells.find(id);
        if (it == b_cells.end()) {
            continue;
        }
        const auto& cell_b = it->second;
        const bool backdoor = cell_a.contains("final_backdoor_accuracy_per_run") &&
                              cell_b.contains("final_backdoor_accuracy_per_run");
        const char* key = backdoor ? "final_backdoor_accuracy_per_run" : "final_test_accuracy_per_run";
        if (!cell_a.contains(key) || !cell_b.contains(key)) {
            report.warnings.push_back("cell " + id + ": missing run data, skipped");
            continue;
        }
        const auto runs_a = cell_a.at(key).get<std::vector<double>>();
        const auto runs_b = cell_b.at(key).get<std::vector<double>>();
        CompareRow row;
        row.id = id;
        row.metric = backdoor ? "backdoor_accuracy" : "test_accuracy";
        row.median_a = median_of(runs_a);
        row.median_b = median_of(runs_b);
        if (runs_a.size() >= 3 && runs_b.size() >= 3) {
            const auto mw = mann_whitney_u(runs_a, runs_b);
            row.u = mw.u;
            row.p_value = mw.p_value;
            row.significant = mw.p_value < 0.05;
        } else {
            report.warnings.push_back("cell " + id + ": fewer than 3 runs, no significance test");
        }
        report.rows.push_back(std::move(row));
    }
    if (report.rows.empty()) {
        report.warnings.push_back("no shared cells between the two result sets");
    }
    return report;
}

inline CompareReport compare_summary_files(const std::string& path_a, const std::string& path_b) {
    const auto load = [](const std::string& path) {
        std::ifstream in(path);
        if (!in) {
            throw ConfigError("compare: cannot open " + path);
        }
        try {
            return nlohmann::json::parse(in);
        } catch (const nlohmann::json::parse_error& e) {
            throw ConfigError(path + ": " + e.what());
        }
    };
    return compare_summaries(load(path_a), load(path_b));
}

inline void print_compare_report(const CompareReport& report, std::ostream& out) {
    for (const auto& warning : report.warnings) {
        out << "warning: " << warning << '\n';
    }
    out << "cell,metric,median_a,median_b,U,p_value,significant_at_0.05\n";
    for (const CompareRow& row : report.rows) {
        out << row.id << ',' << row.metric << ',' << detail::format_double(row.median_a) << ','
            << detail::format_double(row.median_b) << ',';
        if (row.u) {
            out << detail::format_double(*row.u);
        }
        out << ',';
        if (row.p_value) {
            out << detail::format_double(*row.p_value);
        }
        out << ',' << (row.significant ? "yes" : "no") << '\n';
    }
}

} // namespace fedsim

#endif
