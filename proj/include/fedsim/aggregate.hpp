#ifndef FEDSIM_AGGREGATE_HPP
#define FEDSIM_AGGREGATE_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "fedsim/data.hpp"
#include "fedsim/error.hpp"
#include "fedsim/model.hpp"
#include "fedsim/params.hpp"

namespace fedsim {

// One client's contribution to a round.
struct ClientUpdate {
    std::size_t client_id = 0;
    ParamVector update;
    std::size_t num_samples = 1;
};

enum class AggregatorKind {
    FedAvg,
    Krum,
    Median,
    TrimmedMean,
    Ensemble,
};

inline const char* aggregator_name(AggregatorKind k) {
    switch (k) {
    case AggregatorKind::FedAvg: return "fedavg";
    case AggregatorKind::Krum: return "krum";
    case AggregatorKind::Median: return "median";
    case AggregatorKind::TrimmedMean: return "trimmed_mean";
    case AggregatorKind::Ensemble: return "ensemble";
    }
    return "?";
}

// f and beta stay optional here; the engine resolves them from the configured
// byzantine proportion when unset.
struct AggregatorSpec {
    AggregatorKind kind = AggregatorKind::FedAvg;
    std::optional<int> krum_f;
    std::optional<double> trim_beta;
    // Validation-accuracy ties inside the ensemble break by this precedence.
    std::array<AggregatorKind, 4> ensemble_order = {
        AggregatorKind::FedAvg, AggregatorKind::Median,
        AggregatorKind::TrimmedMean, AggregatorKind::Krum};

    void validate() const {
        if (krum_f && *krum_f < 0) {
            throw InvalidArgument("aggregator.krum_f must be non-negative");
        }
        if (trim_beta && !(*trim_beta >= 0.0 && *trim_beta < 0.5)) {
            throw InvalidArgument("aggregator.trim_beta must be in [0, 0.5)");
        }
    }
};

namespace detail {

inline std::vector<ClientUpdate> sorted_by_id(std::vector<ClientUpdate> updates, const char* op) {
    if (updates.empty()) {
        throw InvalidArgument(std::string(op) + ": empty update list");
    }
    for (const auto& u : updates) {
        require_same_dim(updates.front().update, u.update, op);
    }
    // Canonical client_id order makes every aggregator bit-invariant under
    // permutation of the input list.
    std::sort(updates.begin(), updates.end(),
              [](const ClientUpdate& a, const ClientUpdate& b) { return a.client_id < b.client_id; });
    return updates;
}

inline std::vector<ParamVector> vectors_of(const std::vector<ClientUpdate>& updates) {
    std::vector<ParamVector> vs;
    vs.reserve(updates.size());
    for (const auto& u : updates) {
        vs.push_back(u.update);
    }
    return vs;
}

} // namespace detail

// Sample-count weighted mean of the updates.
inline ParamVector fed_avg(const std::vector<ClientUpdate>& updates) {
    const auto sorted = detail::sorted_by_id(updates, "fed_avg");
    std::vector<double> out(sorted.front().update.dim(), 0.0);
    double total_weight = 0.0;
    for (const auto& u : sorted) {
        if (u.num_samples == 0) {
            throw InvalidArgument("fed_avg: num_samples must be positive");
        }
        const auto w = static_cast<double>(u.num_samples);
        total_weight += w;
        for (std::size_t i = 0; i < out.size(); ++i) {
            out[i] += w * u.update[i];
        }
    }
    for (double& x : out) {
        x /= total_weight;
    }
    return ParamVector(std::move(out));
}

// Krum's selection: each client is scored by the sum of its squared distances
// to its k = n - f - 2 nearest peers; the lowest score wins, ties to the
// lowest client_id. Returns an index into the id-sorted update list.
inline std::size_t krum_select(const std::vector<ClientUpdate>& sorted_updates, int f) {
    const auto n = static_cast<long long>(sorted_updates.size());
    if (f < 0) {
        throw InvalidArgument("krum: f must be non-negative");
    }
    const long long k = n - f - 2;
    if (k < 1) {
        throw KrumPreconditionError("krum: n - f - 2 = " + std::to_string(k) +
                                    " < 1 (n=" + std::to_string(n) + ", f=" + std::to_string(f) + ")");
    }
    std::size_t best = 0;
    double best_score = std::numeric_limits<double>::infinity();
    std::vector<double> dists;
    dists.reserve(static_cast<std::size_t>(n) - 1);
    for (std::size_t i = 0; i < sorted_updates.size(); ++i) {
        dists.clear();
        for (std::size_t j = 0; j < sorted_updates.size(); ++j) {
            if (j != i) {
                dists.push_back(sq_distance(sorted_updates[i].update, sorted_updates[j].update));
            }
        }
        std::sort(dists.begin(), dists.end());
        double score = 0.0;
        for (long long t = 0; t < k; ++t) {
            score += dists[static_cast<std::size_t>(t)];
        }
        if (score < best_score) {
            best_score = score;
            best = i;
        }
    }
    return best;
}

inline ParamVector krum(const std::vector<ClientUpdate>& updates, int f) {
    const auto sorted = detail::sorted_by_id(updates, "krum");
    return sorted[krum_select(sorted, f)].update;
}

// Coordinate-wise median of the raw update vectors, unweighted.
inline ParamVector median_agg(const std::vector<ClientUpdate>& updates) {
    const auto sorted = detail::sorted_by_id(updates, "median_agg");
    return coordinate_median(detail::vectors_of(sorted));
}

// Coordinate-wise trimmed mean of the raw update vectors, unweighted.
inline ParamVector trimmed_mean_agg(const std::vector<ClientUpdate>& updates, double beta) {
    const auto sorted = detail::sorted_by_id(updates, "trimmed_mean_agg");
    return coordinate_trimmed_mean(detail::vectors_of(sorted), beta);
}

struct EnsembleResult {
    ParamVector update;
    AggregatorKind chosen = AggregatorKind::FedAvg;
    double validation_accuracy = 0.0;
    std::vector<AggregatorKind> skipped; // candidates whose precondition failed
};

// Runs all four base aggregators, applies each candidate to the global model,
// and keeps the one with the best validation accuracy. Ties break in the
// fixed precedence order; infeasible candidates (for example Krum with too
// few clients for f) are skipped and recorded.
inline EnsembleResult ensemble_agg(const std::vector<ClientUpdate>& updates,
                                   const MlpModel& global, const Dataset& validation,
                                   int krum_f, double trim_beta,
                                   const std::array<AggregatorKind, 4>& order = {
                                       AggregatorKind::FedAvg, AggregatorKind::Median,
                                       AggregatorKind::TrimmedMean, AggregatorKind::Krum}) {
    if (validation.empty()) {
        throw InvalidArgument("ensemble_agg: validation set is empty");
    }
    EnsembleResult result;
    bool have_best = false;
    for (const AggregatorKind kind : order) {
        ParamVector candidate;
        try {
            switch (kind) {
            case AggregatorKind::FedAvg: candidate = fed_avg(updates); break;
            case AggregatorKind::Krum: candidate = krum(updates, krum_f); break;
            case AggregatorKind::Median: candidate = median_agg(updates); break;
            case AggregatorKind::TrimmedMean: candidate = trimmed_mean_agg(updates, trim_beta); break;
            default:
                throw InvalidArgument("ensemble_agg: ensemble cannot nest itself");
            }
        } catch (const KrumPreconditionError&) {
            result.skipped.push_back(kind);
            continue;
        } catch (const InvalidArgument&) {
            result.skipped.push_back(kind);
            continue;
        }
        const double acc = evaluate(apply_update(global, candidate), validation);
        if (!have_best || acc > result.validation_accuracy) {
            have_best = true;
            result.update = std::move(candidate);
            result.chosen = kind;
            result.validation_accuracy = acc;
        }
    }
    if (!have_best) {
        throw InvalidArgument("ensemble_agg: every candidate aggregator was infeasible");
    }
    return result;
}

} // namespace fedsim

#endif
