// Command-line front end for the federated-learning robustness simulator.
//
// Exit codes: 0 success, 1 usage/config error, 2 execution failure,
// 3 aggregation-precondition failure (for example Krum with n - f - 2 < 1).

#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "fedsim/fedsim.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitExecution = 2;
constexpr int kExitAggPrecondition = 3;

// FEDSIM_SEED overrides the config file's master_seed when set.
void apply_seed_override(fedsim::GridSpec& spec) {
    const char* env = std::getenv("FEDSIM_SEED");
    if (env == nullptr || *env == '\0') {
        return;
    }
    try {
        spec.base.master_seed = std::stoull(env);
    } catch (const std::exception&) {
        throw fedsim::ConfigError(std::string("FEDSIM_SEED: not a valid integer: ") + env);
    }
}

int cmd_run(const std::string& config_path, const std::string& out_dir, bool force,
            unsigned threads) {
    auto spec = fedsim::parse_grid_spec_file(config_path);
    apply_seed_override(spec);
    const auto outcome = fedsim::run_grid(spec, out_dir, force, threads, &std::cout);
    std::cout << "executed " << outcome.executed << ", resumed " << outcome.resumed
              << ", failed " << outcome.failed << '\n';
    if (outcome.failed > 0) {
        return outcome.krum_precondition_failure ? kExitAggPrecondition : kExitExecution;
    }
    return kExitOk;
}

int cmd_validate(const std::string& config_path) {
    auto spec = fedsim::parse_grid_spec_file(config_path);
    apply_seed_override(spec);
    const auto cells = fedsim::expand_grid(spec);
    std::cout << "config ok: " << cells.size() << " cell(s), " << spec.base.num_runs
              << " run(s) each\n";
    for (const auto& cell : cells) {
        std::cout << "  " << cell.id << '\n';
    }
    return kExitOk;
}

int cmd_compare(const std::string& path_a, const std::string& path_b) {
    const auto report = fedsim::compare_summary_files(path_a, path_b);
    fedsim::print_compare_report(report, std::cout);
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Deterministic byzantine-robust federated learning simulator"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = "results";
    bool force = false;
    unsigned threads = 1;

    auto* run = app.add_subcommand("run", "Execute a configuration grid");
    run->add_option("config", config_path, "JSON configuration file")->required();
    run->add_option("--out", out_dir, "Output directory for CSV results and summary.json");
    run->add_flag("--force", force, "Re-run cells whose result files already exist");
    run->add_option("--threads", threads, "Worker threads for repeated runs");

    auto* validate = app.add_subcommand("validate", "Parse and validate a configuration");
    validate->add_option("config", config_path, "JSON configuration file")->required();

    std::string compare_a, compare_b;
    auto* compare = app.add_subcommand("compare", "Significance report for two result sets");
    compare->add_option("a", compare_a, "First summary.json")->required();
    compare->add_option("b", compare_b, "Second summary.json")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (run->parsed()) {
            return cmd_run(config_path, out_dir, force, threads);
        }
        if (validate->parsed()) {
            return cmd_validate(config_path);
        }
        if (compare->parsed()) {
            return cmd_compare(compare_a, compare_b);
        }
    } catch (const fedsim::ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const fedsim::KrumPreconditionError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitAggPrecondition;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitExecution;
    }
    return kExitConfig;
}
