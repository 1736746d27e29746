#ifndef FEDSIM_THREAT_HPP
#define FEDSIM_THREAT_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fedsim/data.hpp"
#include "fedsim/error.hpp"
#include "fedsim/params.hpp"
#include "fedsim/random.hpp"

namespace fedsim {

enum class ThreatKind {
    None,
    LabelFlip,
    RandomUpdate,
    SignFlip,
    Backdoor,
    NoiseMut,
    DeleteMut,
    UnbalanceMut,
    OverlapMut,
};

inline bool is_data_threat(ThreatKind k) {
    switch (k) {
    case ThreatKind::LabelFlip:
    case ThreatKind::Backdoor:
    case ThreatKind::NoiseMut:
    case ThreatKind::DeleteMut:
    case ThreatKind::UnbalanceMut:
    case ThreatKind::OverlapMut:
        return true;
    default:
        return false;
    }
}

// Pixel-pattern trigger: `value` written at the given feature positions.
struct BackdoorPattern {
    std::vector<std::size_t> indices = {0, 1, 2, 3};
    double value = 1.0;
};

// Which attack or mutator runs, how strong, and on what fraction of clients.
struct ThreatSpec {
    ThreatKind kind = ThreatKind::None;
    double proportion = 0.0;   // fraction of all clients compromised
    double std_dev = 2.0;      // RandomUpdate: Gaussian std
    double multiplier = 10.0;  // SignFlip / Backdoor update scaling
    double portion = 0.5;      // Delete / Unbalance / Overlap strength
    double noise_pct = 1.0;    // NoiseMut: fraction of per-image variance
    int target_label = 0;      // Backdoor target class
    BackdoorPattern pattern;
    double poison_fraction = 0.5; // Backdoor: fraction of shard poisoned

    void validate() const {
        if (!(proportion >= 0.0 && proportion <= 1.0)) {
            throw InvalidArgument("threat.proportion must be in [0, 1]");
        }
        switch (kind) {
        case ThreatKind::RandomUpdate:
            if (std_dev < 0.0) {
                throw InvalidArgument("threat.std_dev must be non-negative");
            }
            break;
        case ThreatKind::SignFlip:
            if (!(multiplier > 0.0)) {
                throw InvalidArgument("threat.multiplier must be positive");
            }
            break;
        case ThreatKind::Backdoor:
            if (!(multiplier > 0.0)) {
                throw InvalidArgument("threat.multiplier must be positive");
            }
            if (!(poison_fraction > 0.0 && poison_fraction < 1.0)) {
                throw InvalidArgument("threat.poison_fraction must be in (0, 1)");
            }
            if (pattern.indices.empty()) {
                throw InvalidArgument("threat.pattern_indices must be non-empty");
            }
            if (!(pattern.value >= 0.0 && pattern.value <= 1.0)) {
                throw InvalidArgument("threat.pattern_value must be in [0, 1]");
            }
            if (target_label < 0) {
                throw InvalidArgument("threat.target_label must be non-negative");
            }
            break;
        case ThreatKind::NoiseMut:
            if (!(noise_pct >= 0.0 && noise_pct <= 1.0)) {
                throw InvalidArgument("threat.noise_pct must be in [0, 1]");
            }
            break;
        case ThreatKind::DeleteMut:
        case ThreatKind::UnbalanceMut:
        case ThreatKind::OverlapMut:
            if (!(portion >= 0.0 && portion < 1.0)) {
                throw InvalidArgument("threat.portion must be in [0, 1)");
            }
            break;
        default:
            break;
        }
    }
};

// The compromised client ids, fixed for an entire run.
struct ByzantineAssignment {
    std::vector<std::size_t> affected; // sorted

    bool contains(std::size_t id) const {
        return std::binary_search(affected.begin(), affected.end(), id);
    }
};

// Uniformly random round(p * n)-subset of clients.
inline ByzantineAssignment select_byzantine(std::size_t n, double p, std::uint64_t seed) {
    if (!(p >= 0.0 && p <= 1.0)) {
        throw InvalidArgument("select_byzantine: p must be in [0, 1]");
    }
    const auto count = static_cast<std::size_t>(std::llround(p * static_cast<double>(n)));
    Rng rng(seed);
    auto ids = rng.permutation(n);
    ids.resize(count);
    std::sort(ids.begin(), ids.end());
    return ByzantineAssignment{std::move(ids)};
}

// Every label is replaced by a uniform draw over the other C-1 labels, so a
// flipped shard never keeps an original label.
inline ClientShard label_flip(const ClientShard& shard, int num_classes, std::uint64_t seed) {
    if (num_classes < 2) {
        throw InvalidArgument("label_flip: need at least 2 classes");
    }
    Rng rng(seed);
    ClientShard out = shard;
    for (LabeledExample& ex : out.examples) {
        auto pick = static_cast<int>(rng.below(static_cast<std::uint64_t>(num_classes - 1)));
        if (pick >= ex.label) {
            ++pick;
        }
        ex.label = pick;
    }
    return out;
}

// Gaussian vector sent instead of a trained update.
inline ParamVector random_update(std::size_t dim, double std_dev, std::uint64_t seed) {
    if (dim == 0) {
        throw InvalidArgument("random_update: dim must be positive");
    }
    if (std_dev < 0.0) {
        throw InvalidArgument("random_update: std_dev must be non-negative");
    }
    Rng rng(seed);
    std::vector<double> v(dim);
    for (double& x : v) {
        x = std_dev * rng.normal();
    }
    return ParamVector(std::move(v));
}

// The client trains honestly first; the update is then reversed and scaled.
inline ParamVector sign_flip(const ParamVector& honest_update, double multiplier) {
    if (!(multiplier > 0.0)) {
        throw InvalidArgument("sign_flip: multiplier must be positive");
    }
    return scale(honest_update, -multiplier);
}

// Stamps the trigger pattern onto a seeded fraction of the shard and relabels
// those examples as the target class. The rest of the shard is untouched.
inline ClientShard backdoor_poison(const ClientShard& shard, const BackdoorPattern& pattern,
                                   int target, int num_classes, double poison_fraction,
                                   std::uint64_t seed) {
    if (!(poison_fraction > 0.0 && poison_fraction < 1.0)) {
        throw InvalidArgument("backdoor_poison: poison_fraction must be in (0, 1)");
    }
    if (target < 0 || target >= num_classes) {
        throw InvalidArgument("backdoor_poison: target label out of range");
    }
    Rng rng(seed);
    const auto count = static_cast<std::size_t>(
        std::llround(poison_fraction * static_cast<double>(shard.examples.size())));
    auto order = rng.permutation(shard.examples.size());
    order.resize(count);
    ClientShard out = shard;
    for (const std::size_t i : order) {
        LabeledExample& ex = out.examples[i];
        for (const std::size_t d : pattern.indices) {
            if (d >= ex.features.size()) {
                throw InvalidArgument("backdoor_poison: pattern index outside feature_dim");
            }
            ex.features[d] = pattern.value;
        }
        ex.label = target;
    }
    return out;
}

inline ParamVector backdoor_scale(const ParamVector& update, double multiplier) {
    if (!std::isfinite(multiplier)) {
        throw InvalidArgument("backdoor_scale: multiplier must be finite");
    }
    return scale(update, multiplier);
}

// Adds zero-mean Gaussian noise with variance noise_pct * var(features),
// computed per example, then clips back into [0, 1].
inline ClientShard noise_mutator(const ClientShard& shard, double noise_pct, std::uint64_t seed) {
    if (!(noise_pct >= 0.0 && noise_pct <= 1.0)) {
        throw InvalidArgument("noise_mutator: noise_pct must be in [0, 1]");
    }
    Rng rng(seed);
    ClientShard out = shard;
    if (noise_pct == 0.0) {
        return out;
    }
    for (LabeledExample& ex : out.examples) {
        double mean = 0.0;
        for (const double f : ex.features) {
            mean += f;
        }
        mean /= static_cast<double>(ex.features.size());
        double var = 0.0;
        for (const double f : ex.features) {
            var += (f - mean) * (f - mean);
        }
        var /= static_cast<double>(ex.features.size());
        if (var == 0.0) {
            continue;
        }
        const double sd = std::sqrt(noise_pct * var);
        for (double& f : ex.features) {
            f = std::clamp(f + sd * rng.normal(), 0.0, 1.0);
        }
    }
    return out;
}

// Seeded uniform removal of round(portion * |shard|) examples; survivors keep
// their original order.
inline ClientShard delete_mutator(const ClientShard& shard, double portion, std::uint64_t seed) {
    if (!(portion >= 0.0 && portion < 1.0)) {
        throw InvalidArgument("delete_mutator: portion must be in [0, 1)");
    }
    Rng rng(seed);
    const auto remove = static_cast<std::size_t>(
        std::llround(portion * static_cast<double>(shard.examples.size())));
    auto order = rng.permutation(shard.examples.size());
    std::vector<bool> dropped(shard.examples.size(), false);
    for (std::size_t k = 0; k < remove; ++k) {
        dropped[order[k]] = true;
    }
    ClientShard out;
    out.client_id = shard.client_id;
    for (std::size_t i = 0; i < shard.examples.size(); ++i) {
        if (!dropped[i]) {
            out.examples.push_back(shard.examples[i]);
        }
    }
    if (out.examples.empty()) {
        throw InvalidArgument("delete_mutator: no examples left");
    }
    return out;
}

// Classes occurring less often than the mean class count lose a portion of
// their examples; everything else is untouched.
inline ClientShard unbalance_mutator(const ClientShard& shard, double portion, std::uint64_t seed) {
    if (!(portion >= 0.0 && portion < 1.0)) {
        throw InvalidArgument("unbalance_mutator: portion must be in [0, 1)");
    }
    std::map<int, std::size_t> counts;
    for (const LabeledExample& ex : shard.examples) {
        ++counts[ex.label];
    }
    if (counts.empty()) {
        return shard;
    }
    const double mean_count = static_cast<double>(shard.examples.size()) /
                              static_cast<double>(counts.size());
    Rng rng(seed);
    std::vector<bool> dropped(shard.examples.size(), false);
    for (const auto& [label, count] : counts) {
        if (static_cast<double>(count) >= mean_count) {
            continue;
        }
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < shard.examples.size(); ++i) {
            if (shard.examples[i].label == label) {
                members.push_back(i);
            }
        }
        rng.shuffle(members);
        const auto remove = static_cast<std::size_t>(
            std::llround(portion * static_cast<double>(count)));
        for (std::size_t k = 0; k < remove; ++k) {
            dropped[members[k]] = true;
        }
    }
    ClientShard out;
    out.client_id = shard.client_id;
    for (std::size_t i = 0; i < shard.examples.size(); ++i) {
        if (!dropped[i]) {
            out.examples.push_back(shard.examples[i]);
        }
    }
    return out;
}

// Copies a portion of the most frequent class's examples, relabels the copies
// as the second most frequent class, and appends them. Frequency ties go to
// the lower label index.
inline ClientShard overlap_mutator(const ClientShard& shard, double portion, std::uint64_t seed) {
    if (!(portion >= 0.0 && portion < 1.0)) {
        throw InvalidArgument("overlap_mutator: portion must be in [0, 1)");
    }
    std::map<int, std::size_t> counts;
    for (const LabeledExample& ex : shard.examples) {
        ++counts[ex.label];
    }
    if (counts.size() < 2) {
        throw InvalidArgument("overlap_mutator: shard needs at least 2 distinct labels");
    }
    // std::map iterates labels ascending, so > keeps the lower label on ties.
    int label_a = -1, label_b = -1;
    std::size_t count_a = 0, count_b = 0;
    for (const auto& [label, count] : counts) {
        if (count > count_a) {
            label_b = label_a;
            count_b = count_a;
            label_a = label;
            count_a = count;
        } else if (count > count_b) {
            label_b = label;
            count_b = count;
        }
    }
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < shard.examples.size(); ++i) {
        if (shard.examples[i].label == label_a) {
            members.push_back(i);
        }
    }
    Rng rng(seed);
    rng.shuffle(members);
    const auto copies = static_cast<std::size_t>(
        std::llround(portion * static_cast<double>(count_a)));
    ClientShard out = shard;
    for (std::size_t k = 0; k < copies; ++k) {
        LabeledExample dup = shard.examples[members[k]];
        dup.label = label_b;
        out.examples.push_back(std::move(dup));
    }
    return out;
}

} // namespace fedsim

#endif
