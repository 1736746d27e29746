#ifndef FEDSIM_ENGINE_HPP
#define FEDSIM_ENGINE_HPP

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "fedsim/aggregate.hpp"
#include "fedsim/data.hpp"
#include "fedsim/error.hpp"
#include "fedsim/model.hpp"
#include "fedsim/params.hpp"
#include "fedsim/random.hpp"
#include "fedsim/stats.hpp"
#include "fedsim/threat.hpp"

namespace fedsim {

enum class FederationMode {
    CrossDevice, // sample clients_per_round clients each round
    CrossSilo,   // every client participates every round
};

struct SyntheticSpec {
    int num_classes = 4;
    std::size_t feature_dim = 20;
    std::size_t per_class = 200;
    double spread = 0.1;
    std::uint64_t seed = 1;
};

struct DatasetSource {
    enum class Type { Synthetic, Csv };
    Type type = Type::Synthetic;
    SyntheticSpec synthetic;
    std::string csv_path;
};

// One fully resolved configuration: dataset, partitioning, model, training,
// aggregation, threat, and the federation shape.
struct ExperimentConfig {
    DatasetSource dataset;
    double non_iid_degree = 0.0;
    std::vector<std::size_t> hidden_dims = {16};
    TrainingConfig training;
    AggregatorSpec aggregator;
    ThreatSpec threat;
    std::size_t rounds = 60;
    std::size_t num_clients = 20;
    std::size_t clients_per_round = 5;
    FederationMode mode = FederationMode::CrossDevice;
    std::uint64_t master_seed = 42;
    std::size_t num_runs = 10;
    double test_fraction = 0.2;
    double validation_fraction = 0.1; // share of the test split held for the ensemble

    void validate() const {
        if (rounds == 0) {
            throw InvalidArgument("rounds must be positive");
        }
        if (num_clients == 0) {
            throw InvalidArgument("num_clients must be positive");
        }
        if (clients_per_round == 0 || clients_per_round > num_clients) {
            throw InvalidArgument("clients_per_round must be in [1, num_clients]");
        }
        if (mode == FederationMode::CrossSilo && clients_per_round != num_clients) {
            throw InvalidArgument("cross-silo mode requires clients_per_round == num_clients");
        }
        if (num_runs == 0) {
            throw InvalidArgument("num_runs must be positive");
        }
        if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
            throw InvalidArgument("test_fraction must be in (0, 1)");
        }
        if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) {
            throw InvalidArgument("validation_fraction must be in [0, 1)");
        }
        threat.validate();
        aggregator.validate();
    }
};

struct RoundRecord {
    std::size_t round = 0;
    double test_accuracy = 0.0;
    std::optional<double> backdoor_accuracy;          // present iff Backdoor threat
    std::optional<AggregatorKind> chosen_aggregator;  // present iff Ensemble
    double wall_time_s = 0.0;
};

struct RunResult {
    std::uint64_t run_seed = 0;
    std::vector<RoundRecord> trace;
    double final_test_accuracy = 0.0;
    std::optional<double> final_backdoor_accuracy;
    double wall_time_s = 0.0;
};

namespace engine_seed {

// Seed-derivation tags. Exposed so tests can reproduce any stream the engine
// consumes.
inline std::uint64_t run(std::uint64_t master_seed, std::size_t run_index) {
    return derive_seed(master_seed, "run", run_index);
}
inline std::uint64_t split(std::uint64_t run_seed) { return derive_seed(run_seed, "split"); }
inline std::uint64_t validation_split(std::uint64_t run_seed) { return derive_seed(run_seed, "validation-split"); }
inline std::uint64_t partition(std::uint64_t run_seed) { return derive_seed(run_seed, "partition"); }
inline std::uint64_t byzantine(std::uint64_t run_seed) { return derive_seed(run_seed, "byzantine"); }
inline std::uint64_t init(std::uint64_t run_seed) { return derive_seed(run_seed, "init"); }
inline std::uint64_t corrupt(std::uint64_t run_seed, std::size_t client) {
    return derive_seed(run_seed, "corrupt", client);
}
inline std::uint64_t sample(std::uint64_t run_seed, std::size_t round) {
    return derive_seed(run_seed, "sample", round);
}
inline std::uint64_t train(std::uint64_t run_seed, std::size_t round, std::size_t client) {
    return derive_seed(run_seed, "train", round, client);
}
inline std::uint64_t attack(std::uint64_t run_seed, std::size_t round, std::size_t client) {
    return derive_seed(run_seed, "attack", round, client);
}

} // namespace engine_seed

// Uniform sample of m distinct clients out of n, reported in ascending id
// order so downstream processing is schedule-independent.
inline std::vector<std::size_t> sample_cohort(std::size_t n, std::size_t m, Rng& rng) {
    if (m == 0 || m > n) {
        throw InvalidArgument("sample_cohort: need 1 <= m <= n");
    }
    auto ids = rng.permutation(n);
    ids.resize(m);
    std::sort(ids.begin(), ids.end());
    return ids;
}

// Everything one run needs: the immutable world built at setup plus the
// mutable global model and metric trace.
struct EngineState {
    ExperimentConfig config;
    std::uint64_t run_seed = 0;
    Dataset test_set;       // held-out evaluation split
    Dataset validation_set; // server-held split for the ensemble
    std::vector<ClientShard> shards; // per client, corruption already applied
    ByzantineAssignment byzantine;
    MlpModel global;
    int krum_f = 0;
    double trim_beta = 0.0;
    std::size_t round = 0;
    std::vector<RoundRecord> trace;

    EngineState(ExperimentConfig cfg, MlpModel model)
        : config(std::move(cfg)), global(std::move(model)) {}
};

namespace detail {

inline Dataset build_dataset(const DatasetSource& source) {
    if (source.type == DatasetSource::Type::Synthetic) {
        const auto& s = source.synthetic;
        return generate_synthetic(s.num_classes, s.feature_dim, s.per_class, s.spread, s.seed);
    }
    return load_csv(source.csv_path);
}

// Data-level corruption, applied once at setup to each affected shard. Model
// poisoning attacks transform updates per round instead.
inline ClientShard corrupt_shard(const ClientShard& shard, const ThreatSpec& threat,
                                 int num_classes, std::uint64_t seed) {
    switch (threat.kind) {
    case ThreatKind::LabelFlip:
        return label_flip(shard, num_classes, seed);
    case ThreatKind::Backdoor:
        return backdoor_poison(shard, threat.pattern, threat.target_label, num_classes,
                               threat.poison_fraction, seed);
    case ThreatKind::NoiseMut:
        return noise_mutator(shard, threat.noise_pct, seed);
    case ThreatKind::DeleteMut:
        return delete_mutator(shard, threat.portion, seed);
    case ThreatKind::UnbalanceMut:
        return unbalance_mutator(shard, threat.portion, seed);
    case ThreatKind::OverlapMut:
        return overlap_mutator(shard, threat.portion, seed);
    default:
        return shard;
    }
}

} // namespace detail

inline EngineState setup(const ExperimentConfig& config, std::uint64_t run_seed) {
    config.validate();

    Dataset full = detail::build_dataset(config.dataset);
    auto [train_set, test_side] = split_dataset(full, config.test_fraction,
                                                engine_seed::split(run_seed));
    auto [test_set, validation_set] =
        split_dataset(test_side, config.validation_fraction, engine_seed::validation_split(run_seed));
    if (train_set.empty() || test_set.empty()) {
        throw InvalidArgument("setup: dataset too small for the configured split");
    }

    PartitionSpec pspec;
    pspec.num_clients = config.num_clients;
    pspec.non_iid_degree = config.non_iid_degree;
    pspec.seed = engine_seed::partition(run_seed);
    auto shards = partition(train_set, pspec);

    auto byzantine = select_byzantine(config.num_clients, config.threat.proportion,
                                      engine_seed::byzantine(run_seed));
    for (const std::size_t id : byzantine.affected) {
        if (is_data_threat(config.threat.kind)) {
            shards[id] = detail::corrupt_shard(shards[id], config.threat, full.num_classes,
                                               engine_seed::corrupt(run_seed, id));
        }
    }

    std::vector<std::size_t> dims;
    dims.push_back(full.feature_dim);
    dims.insert(dims.end(), config.hidden_dims.begin(), config.hidden_dims.end());
    dims.push_back(static_cast<std::size_t>(full.num_classes));

    EngineState state(config, MlpModel::init(dims, engine_seed::init(run_seed)));
    state.run_seed = run_seed;
    state.test_set = std::move(test_set);
    state.validation_set = std::move(validation_set);
    state.shards = std::move(shards);
    state.byzantine = std::move(byzantine);
    state.krum_f = config.aggregator.krum_f.value_or(static_cast<int>(std::llround(
        config.threat.proportion * static_cast<double>(config.clients_per_round))));
    state.trim_beta = config.aggregator.trim_beta.value_or(
        std::min(config.threat.proportion, 0.49));
    return state;
}

/*
 * One communication round: broadcast, local training (or an attack in place
 * of it), aggregation, global update, metrics.
 *
 *   - honest clients and data-poisoned clients train on their (possibly
 *     corrupted) shard and report new - old;
 *   - RandomUpdate byzantines skip training and send a Gaussian vector;
 *   - SignFlip byzantines train honestly, then reverse and scale the update;
 *   - Backdoor byzantines train on their poisoned shard, then scale.
 */
inline void run_round(EngineState& state) {
    if (state.round >= state.config.rounds) {
        throw InvalidArgument("run_round: experiment already finished");
    }
    const auto started = std::chrono::steady_clock::now();
    const ExperimentConfig& cfg = state.config;
    const std::size_t dim = state.global.weights().dim();

    std::vector<std::size_t> cohort;
    if (cfg.mode == FederationMode::CrossSilo) {
        for (std::size_t id = 0; id < cfg.num_clients; ++id) {
            cohort.push_back(id);
        }
    } else {
        Rng rng(engine_seed::sample(state.run_seed, state.round));
        cohort = sample_cohort(cfg.num_clients, cfg.clients_per_round, rng);
    }

    std::vector<ClientUpdate> updates;
    updates.reserve(cohort.size());
    for (const std::size_t id : cohort) {
        const ClientShard& shard = state.shards[id];
        const bool byzantine = state.byzantine.contains(id);
        ParamVector update;
        if (byzantine && cfg.threat.kind == ThreatKind::RandomUpdate) {
            update = random_update(dim, cfg.threat.std_dev,
                                   engine_seed::attack(state.run_seed, state.round, id));
        } else {
            TrainingConfig tc = cfg.training;
            tc.shuffle_seed = engine_seed::train(state.run_seed, state.round, id);
            const MlpModel trained = local_train(state.global, shard, tc);
            update = compute_update(trained, state.global);
            if (byzantine && cfg.threat.kind == ThreatKind::SignFlip) {
                update = sign_flip(update, cfg.threat.multiplier);
            } else if (byzantine && cfg.threat.kind == ThreatKind::Backdoor) {
                update = backdoor_scale(update, cfg.threat.multiplier);
            }
        }
        updates.push_back({id, std::move(update), shard.examples.size()});
    }

    RoundRecord record;
    record.round = state.round;
    ParamVector aggregate;
    switch (cfg.aggregator.kind) {
    case AggregatorKind::FedAvg:
        aggregate = fed_avg(updates);
        break;
    case AggregatorKind::Krum:
        aggregate = krum(updates, state.krum_f);
        break;
    case AggregatorKind::Median:
        aggregate = median_agg(updates);
        break;
    case AggregatorKind::TrimmedMean:
        aggregate = trimmed_mean_agg(updates, state.trim_beta);
        break;
    case AggregatorKind::Ensemble: {
        auto ensemble = ensemble_agg(updates, state.global, state.validation_set,
                                     state.krum_f, state.trim_beta,
                                     cfg.aggregator.ensemble_order);
        aggregate = std::move(ensemble.update);
        record.chosen_aggregator = ensemble.chosen;
        break;
    }
    }

    state.global = apply_update(state.global, aggregate);
    record.test_accuracy = evaluate(state.global, state.test_set);
    if (cfg.threat.kind == ThreatKind::Backdoor) {
        record.backdoor_accuracy = backdoor_accuracy(state.global, state.test_set,
                                                     cfg.threat.pattern, cfg.threat.target_label);
    }
    record.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    state.trace.push_back(record);
    ++state.round;
}

// One full run of R rounds. Run i of a repeated experiment derives its seed
// from (master_seed, i).
inline RunResult run_experiment(const ExperimentConfig& config, std::size_t run_index = 0) {
    const auto started = std::chrono::steady_clock::now();
    const std::uint64_t run_seed = engine_seed::run(config.master_seed, run_index);
    EngineState state = setup(config, run_seed);
    for (std::size_t r = 0; r < config.rounds; ++r) {
        run_round(state);
    }
    RunResult result;
    result.run_seed = run_seed;
    result.trace = std::move(state.trace);
    result.final_test_accuracy = result.trace.back().test_accuracy;
    result.final_backdoor_accuracy = result.trace.back().backdoor_accuracy;
    result.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return result;
}

struct RepeatedResult {
    std::vector<std::optional<RunResult>> runs; // index = run number; nullopt on failure
    std::vector<std::string> run_errors;        // parallel to runs; empty string when ok
    bool krum_precondition_failure = false;
    std::size_t completed = 0;
    double median_final_test_accuracy = 0.0;
    std::optional<double> median_final_backdoor_accuracy;
    double wall_time_s = 0.0;

    bool all_failed() const { return completed == 0; }
};

// num_runs independent runs; medians of the final-round metrics. Runs may
// execute in parallel: each one is fully derived from (master_seed, index),
// so the worker count never changes any result.
inline RepeatedResult run_repeated(const ExperimentConfig& config, unsigned threads = 1) {
    const auto started = std::chrono::steady_clock::now();
    RepeatedResult result;
    result.runs.resize(config.num_runs);
    result.run_errors.resize(config.num_runs);

    std::atomic<bool> krum_failed{false};
    const auto work = [&](std::size_t run_index) {
        try {
            result.runs[run_index] = run_experiment(config, run_index);
        } catch (const KrumPreconditionError& e) {
            result.run_errors[run_index] = e.what();
            krum_failed = true;
        } catch (const std::exception& e) {
            result.run_errors[run_index] = e.what();
        }
    };

    if (threads <= 1 || config.num_runs == 1) {
        for (std::size_t i = 0; i < config.num_runs; ++i) {
            work(i);
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        const unsigned count = std::min<unsigned>(threads, static_cast<unsigned>(config.num_runs));
        pool.reserve(count);
        for (unsigned t = 0; t < count; ++t) {
            pool.emplace_back([&] {
                for (std::size_t i = next.fetch_add(1); i < config.num_runs; i = next.fetch_add(1)) {
                    work(i);
                }
            });
        }
        for (auto& th : pool) {
            th.join();
        }
    }

    result.krum_precondition_failure = krum_failed.load();
    std::vector<double> finals;
    std::vector<double> backdoor_finals;
    for (const auto& run : result.runs) {
        if (!run) {
            continue;
        }
        ++result.completed;
        finals.push_back(run->final_test_accuracy);
        if (run->final_backdoor_accuracy) {
            backdoor_finals.push_back(*run->final_backdoor_accuracy);
        }
    }
    if (!finals.empty()) {
        result.median_final_test_accuracy = median_of(finals);
    }
    if (!backdoor_finals.empty()) {
        result.median_final_backdoor_accuracy = median_of(backdoor_finals);
    }
    result.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return result;
}

} // namespace fedsim

#endif
