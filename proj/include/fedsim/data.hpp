#ifndef FEDSIM_DATA_HPP
#define FEDSIM_DATA_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "fedsim/error.hpp"
#include "fedsim/random.hpp"

namespace fedsim {

// One labeled sample. Features are normalized intensities in [0, 1].
struct LabeledExample {
    std::vector<double> features;
    int label = 0;

    bool operator==(const LabeledExample&) const = default;
};

struct Dataset {
    std::vector<LabeledExample> examples;
    int num_classes = 0;
    std::size_t feature_dim = 0;

    std::size_t size() const { return examples.size(); }
    bool empty() const { return examples.empty(); }
};

// Controls the chunk-based non-iid partitioner. non_iid_degree 0 gives every
// client samples from all classes; higher degrees concentrate each client on
// fewer classes.
struct PartitionSpec {
    std::size_t num_clients = 1;
    double non_iid_degree = 0.0;
    std::uint64_t seed = 0;
};

// One client's private slice of the training data.
struct ClientShard {
    std::size_t client_id = 0;
    std::vector<LabeledExample> examples;
};

// Balanced Gaussian blobs: one seeded centroid per class inside [0.2, 0.8]^d,
// points clipped to [0, 1]. A desk-scale stand-in for an image dataset.
inline Dataset generate_synthetic(int num_classes, std::size_t feature_dim,
                                  std::size_t per_class, double spread,
                                  std::uint64_t seed) {
    if (num_classes < 2) {
        throw InvalidArgument("generate_synthetic: need at least 2 classes");
    }
    if (feature_dim == 0) {
        throw InvalidArgument("generate_synthetic: feature_dim must be positive");
    }
    if (spread < 0.0) {
        throw InvalidArgument("generate_synthetic: spread must be non-negative");
    }
    Rng rng(seed);
    std::vector<std::vector<double>> centroids(static_cast<std::size_t>(num_classes));
    for (auto& c : centroids) {
        c.resize(feature_dim);
        for (auto& x : c) {
            x = rng.uniform(0.2, 0.8);
        }
    }
    Dataset ds;
    ds.num_classes = num_classes;
    ds.feature_dim = feature_dim;
    ds.examples.reserve(static_cast<std::size_t>(num_classes) * per_class);
    for (int c = 0; c < num_classes; ++c) {
        for (std::size_t i = 0; i < per_class; ++i) {
            LabeledExample ex;
            ex.label = c;
            ex.features.resize(feature_dim);
            for (std::size_t d = 0; d < feature_dim; ++d) {
                const double x = centroids[static_cast<std::size_t>(c)][d] + spread * rng.normal();
                ex.features[d] = std::clamp(x, 0.0, 1.0);
            }
            ds.examples.push_back(std::move(ex));
        }
    }
    return ds;
}

// Loads `label,f1,...,fd` rows below a header line. Class count is inferred
// as max label + 1.
inline Dataset load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw CsvError(CsvError::Kind::MissingFile, "cannot open " + path);
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw CsvError(CsvError::Kind::Empty, path + ": no header line");
    }
    const std::size_t header_fields = static_cast<std::size_t>(
        std::count(line.begin(), line.end(), ',') + 1);
    if (header_fields < 2) {
        throw CsvError(CsvError::Kind::RaggedRow, path + ": header needs a label and at least one feature column");
    }
    const std::size_t feature_dim = header_fields - 1;

    Dataset ds;
    ds.feature_dim = feature_dim;
    int max_label = -1;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) {
            continue;
        }
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            cells.push_back(cell);
        }
        if (!line.empty() && line.back() == ',') {
            cells.push_back("");
        }
        if (cells.size() != header_fields) {
            throw CsvError(CsvError::Kind::RaggedRow,
                           path + ":" + std::to_string(row) + ": expected " +
                               std::to_string(header_fields) + " fields, got " +
                               std::to_string(cells.size()));
        }
        const auto parse = [&](const std::string& s) {
            std::size_t used = 0;
            double value = 0.0;
            try {
                value = std::stod(s, &used);
            } catch (const std::exception&) {
                throw CsvError(CsvError::Kind::NonNumeric,
                               path + ":" + std::to_string(row) + ": non-numeric cell '" + s + "'");
            }
            if (used != s.size()) {
                throw CsvError(CsvError::Kind::NonNumeric,
                               path + ":" + std::to_string(row) + ": non-numeric cell '" + s + "'");
            }
            return value;
        };
        const double label_value = parse(cells[0]);
        if (!(label_value >= 0.0 && label_value < 1e6 &&
              label_value == std::floor(label_value))) {
            throw CsvError(CsvError::Kind::LabelOutOfRange,
                           path + ":" + std::to_string(row) + ": label must be an integer in [0, 1e6)");
        }
        LabeledExample ex;
        ex.label = static_cast<int>(label_value);
        max_label = std::max(max_label, ex.label);
        ex.features.resize(feature_dim);
        for (std::size_t d = 0; d < feature_dim; ++d) {
            const double f = parse(cells[d + 1]);
            // negated form so NaN cells fail the range check too
            if (!(f >= 0.0 && f <= 1.0)) {
                throw CsvError(CsvError::Kind::FeatureOutOfRange,
                               path + ":" + std::to_string(row) + ": feature outside [0, 1]");
            }
            ex.features[d] = f;
        }
        ds.examples.push_back(std::move(ex));
    }
    if (ds.examples.empty()) {
        throw CsvError(CsvError::Kind::Empty, path + ": no data rows");
    }
    ds.num_classes = max_label + 1;
    return ds;
}

namespace detail {

// Groups-per-client for a given non-iid degree: a linear map from degree to
// class coverage, never below one class.
inline std::size_t groups_per_client(double non_iid_degree, int num_classes) {
    const double raw = (1.0 - non_iid_degree) * static_cast<double>(num_classes);
    const auto g = static_cast<std::size_t>(std::llround(raw));
    return std::clamp<std::size_t>(g, 1, static_cast<std::size_t>(num_classes));
}

} // namespace detail

/*
 * Chunk-based non-iid partitioner.
 *
 * Samples are grouped by class, shuffled, and cut into equal chunks of
 * floor(shard_size / g) examples, where shard_size = floor(|ds| / n) and
 * g = groups_per_client(q, C). Every client then draws one unassigned chunk
 * from each of g randomly chosen distinct classes. Chunks grow as g shrinks,
 * so all shards end up with exactly g * chunk_size examples regardless of the
 * non-iid degree. Divisibility remainders are left unassigned.
 *
 * The random class choice can strand chunks when g < C; in that case the
 * whole assignment is retried with a reseeded permutation.
 */
inline std::vector<ClientShard> partition(const Dataset& ds, const PartitionSpec& spec) {
    const std::size_t n = spec.num_clients;
    if (n == 0) {
        throw InvalidArgument("partition: need at least one client");
    }
    if (n > ds.size()) {
        throw InvalidArgument("partition: more clients than examples");
    }
    if (!(spec.non_iid_degree >= 0.0 && spec.non_iid_degree < 1.0)) {
        throw InvalidArgument("partition: non_iid_degree must be in [0, 1)");
    }
    const auto C = static_cast<std::size_t>(ds.num_classes);
    const std::size_t g = detail::groups_per_client(spec.non_iid_degree, ds.num_classes);
    const std::size_t shard_size = ds.size() / n;
    const std::size_t chunk_size = shard_size / g;
    if (chunk_size == 0) {
        throw InvalidArgument("partition: dataset too small for this client count");
    }

    // Seeded shuffle within each class, then cut into chunks of example
    // indices. Leftovers past the last full chunk are dropped.
    std::vector<std::vector<std::size_t>> by_class(C);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        by_class[static_cast<std::size_t>(ds.examples[i].label)].push_back(i);
    }
    std::vector<std::vector<std::vector<std::size_t>>> chunks(C);
    for (std::size_t c = 0; c < C; ++c) {
        Rng rng(derive_seed(spec.seed, "partition-class", c));
        rng.shuffle(by_class[c]);
        const std::size_t count = by_class[c].size() / chunk_size;
        for (std::size_t k = 0; k < count; ++k) {
            chunks[c].emplace_back(by_class[c].begin() + static_cast<std::ptrdiff_t>(k * chunk_size),
                                   by_class[c].begin() + static_cast<std::ptrdiff_t>((k + 1) * chunk_size));
        }
    }

    constexpr int kMaxAttempts = 1000;
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
        Rng rng(derive_seed(spec.seed, "partition-assign", static_cast<std::uint64_t>(attempt)));
        std::vector<std::size_t> remaining(C);
        for (std::size_t c = 0; c < C; ++c) {
            remaining[c] = chunks[c].size();
        }
        std::vector<std::vector<std::pair<std::size_t, std::size_t>>> picks(n);
        bool dead_end = false;
        for (std::size_t client = 0; client < n && !dead_end; ++client) {
            std::vector<std::size_t> available;
            for (std::size_t c = 0; c < C; ++c) {
                if (remaining[c] > 0) {
                    available.push_back(c);
                }
            }
            if (available.size() < g) {
                dead_end = true;
                break;
            }
            rng.shuffle(available);
            for (std::size_t k = 0; k < g; ++k) {
                const std::size_t c = available[k];
                // Chosen chunks are the highest unused indices; the chunk
                // order within a class is already random.
                --remaining[c];
                picks[client].emplace_back(c, remaining[c]);
            }
        }
        if (dead_end) {
            continue;
        }
        std::vector<ClientShard> shards(n);
        for (std::size_t client = 0; client < n; ++client) {
            shards[client].client_id = client;
            shards[client].examples.reserve(g * chunk_size);
            for (const auto& [c, k] : picks[client]) {
                for (const std::size_t idx : chunks[c][k]) {
                    shards[client].examples.push_back(ds.examples[idx]);
                }
            }
        }
        return shards;
    }
    throw InvalidArgument("partition: could not satisfy chunk assignment after 1000 attempts");
}

// Stratified split: within every class, a seeded shuffle sends round(count *
// second_fraction) examples to the second part. Keeps class balance so the
// partitioner's equal-chunk constraint stays satisfiable.
inline std::pair<Dataset, Dataset> split_dataset(const Dataset& ds, double second_fraction,
                                                 std::uint64_t seed) {
    if (!(second_fraction >= 0.0 && second_fraction <= 1.0)) {
        throw InvalidArgument("split_dataset: fraction must be in [0, 1]");
    }
    Dataset first, second;
    first.num_classes = second.num_classes = ds.num_classes;
    first.feature_dim = second.feature_dim = ds.feature_dim;
    const auto C = static_cast<std::size_t>(ds.num_classes);
    std::vector<std::vector<std::size_t>> by_class(C);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        by_class[static_cast<std::size_t>(ds.examples[i].label)].push_back(i);
    }
    for (std::size_t c = 0; c < C; ++c) {
        Rng rng(derive_seed(seed, "split-class", c));
        rng.shuffle(by_class[c]);
        const auto take = static_cast<std::size_t>(
            std::llround(second_fraction * static_cast<double>(by_class[c].size())));
        for (std::size_t k = 0; k < by_class[c].size(); ++k) {
            (k < take ? second : first).examples.push_back(ds.examples[by_class[c][k]]);
        }
    }
    return {std::move(first), std::move(second)};
}

} // namespace fedsim

#endif
