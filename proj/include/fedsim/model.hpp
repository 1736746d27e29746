#ifndef FEDSIM_MODEL_HPP
#define FEDSIM_MODEL_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fedsim/data.hpp"
#include "fedsim/error.hpp"
#include "fedsim/params.hpp"
#include "fedsim/random.hpp"

namespace fedsim {

struct TrainingConfig {
    double learning_rate = 0.1;
    std::size_t batch_size = 10;
    std::size_t local_epochs = 5;
    std::uint64_t shuffle_seed = 0;
};

// Multilayer perceptron with rectified-linear hidden layers and a softmax
// output. Weights live in one flat ParamVector so aggregators and attacks can
// treat the model as a plain vector.
//
// Flattening order, fixed for all consumers: for each layer l the weight
// matrix W_l comes first, row-major as [input][output], followed by the bias
// vector b_l.
class MlpModel {
public:
    MlpModel(std::vector<std::size_t> layer_dims, ParamVector weights)
        : layer_dims_(std::move(layer_dims)), weights_(std::move(weights)) {
        if (layer_dims_.size() < 2) {
            throw InvalidArgument("MlpModel: need at least input and output layers");
        }
        for (const std::size_t d : layer_dims_) {
            if (d == 0) {
                throw InvalidArgument("MlpModel: zero-width layer");
            }
        }
        if (weights_.dim() != weight_count(layer_dims_)) {
            throw DimensionError("MlpModel: weights have dim " + std::to_string(weights_.dim()) +
                                 ", layout needs " + std::to_string(weight_count(layer_dims_)));
        }
    }

    static std::size_t weight_count(const std::vector<std::size_t>& dims) {
        std::size_t total = 0;
        for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
            total += dims[l] * dims[l + 1] + dims[l + 1];
        }
        return total;
    }

    // Uniform init in [-1/sqrt(fan_in), +1/sqrt(fan_in)], biases included.
    static MlpModel init(std::vector<std::size_t> layer_dims, std::uint64_t seed) {
        std::vector<double> w(weight_count(layer_dims));
        Rng rng(seed);
        std::size_t pos = 0;
        for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l) {
            const double bound = 1.0 / std::sqrt(static_cast<double>(layer_dims[l]));
            const std::size_t count = layer_dims[l] * layer_dims[l + 1] + layer_dims[l + 1];
            for (std::size_t i = 0; i < count; ++i) {
                w[pos++] = rng.uniform(-bound, bound);
            }
        }
        return MlpModel(std::move(layer_dims), ParamVector(std::move(w)));
    }

    const std::vector<std::size_t>& layer_dims() const { return layer_dims_; }
    const ParamVector& weights() const { return weights_; }

    std::size_t input_dim() const { return layer_dims_.front(); }
    std::size_t num_classes() const { return layer_dims_.back(); }

    MlpModel with_weights(ParamVector w) const { return MlpModel(layer_dims_, std::move(w)); }

private:
    std::vector<std::size_t> layer_dims_;
    ParamVector weights_;
};

namespace detail {

inline void softmax_inplace(std::vector<double>& z) {
    const double zmax = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double& x : z) {
        x = std::exp(x - zmax);
        sum += x;
    }
    for (double& x : z) {
        x /= sum;
    }
}

// Forward pass keeping each layer's activations; layer 0 is the input.
inline std::vector<std::vector<double>> forward_activations(const MlpModel& m,
                                                            const std::vector<double>& features) {
    const auto& dims = m.layer_dims();
    const auto& w = m.weights().values();
    std::vector<std::vector<double>> acts;
    acts.reserve(dims.size());
    acts.push_back(features);
    std::size_t pos = 0;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        const std::size_t in = dims[l];
        const std::size_t out = dims[l + 1];
        const std::vector<double>& a = acts.back();
        std::vector<double> z(w.begin() + static_cast<std::ptrdiff_t>(pos + in * out),
                              w.begin() + static_cast<std::ptrdiff_t>(pos + in * out + out));
        for (std::size_t i = 0; i < in; ++i) {
            const double ai = a[i];
            if (ai != 0.0) {
                const double* row = w.data() + pos + i * out;
                for (std::size_t j = 0; j < out; ++j) {
                    z[j] += ai * row[j];
                }
            }
        }
        if (l + 2 < dims.size()) {
            for (double& x : z) {
                x = std::max(x, 0.0);
            }
        } else {
            softmax_inplace(z);
        }
        acts.push_back(std::move(z));
        pos += in * out + out;
    }
    return acts;
}

} // namespace detail

// Class-probability vector for one input; entries sum to 1.
inline std::vector<double> forward(const MlpModel& m, const std::vector<double>& features) {
    if (features.size() != m.input_dim()) {
        throw DimensionError("forward: feature length " + std::to_string(features.size()) +
                             " does not match input dim " + std::to_string(m.input_dim()));
    }
    return detail::forward_activations(m, features).back();
}

// Mean cross-entropy over the batch and its gradient with respect to every
// weight, via backpropagation. The gradient has the model's flattening order.
inline std::pair<double, ParamVector> loss_and_gradient(const MlpModel& m,
                                                        std::span<const LabeledExample> batch) {
    if (batch.empty()) {
        throw InvalidArgument("loss_and_gradient: empty batch");
    }
    const auto& dims = m.layer_dims();
    const auto& w = m.weights().values();
    std::vector<double> grad(w.size(), 0.0);
    double loss = 0.0;
    const double inv_batch = 1.0 / static_cast<double>(batch.size());

    for (const LabeledExample& ex : batch) {
        if (ex.features.size() != m.input_dim()) {
            throw DimensionError("loss_and_gradient: feature length mismatch");
        }
        if (ex.label < 0 || static_cast<std::size_t>(ex.label) >= m.num_classes()) {
            throw InvalidArgument("loss_and_gradient: label out of range");
        }
        const auto acts = detail::forward_activations(m, ex.features);
        const std::vector<double>& probs = acts.back();
        loss -= std::log(std::max(probs[static_cast<std::size_t>(ex.label)], 1e-300)) * inv_batch;

        // dL/dz at the output; softmax and cross-entropy combine to p - y.
        std::vector<double> dz = probs;
        dz[static_cast<std::size_t>(ex.label)] -= 1.0;
        for (double& x : dz) {
            x *= inv_batch;
        }

        std::size_t pos = w.size();
        for (std::size_t l = dims.size() - 1; l-- > 0;) {
            const std::size_t in = dims[l];
            const std::size_t out = dims[l + 1];
            pos -= in * out + out;
            const std::vector<double>& a = acts[l];
            for (std::size_t j = 0; j < out; ++j) {
                grad[pos + in * out + j] += dz[j];
            }
            std::vector<double> da(in, 0.0);
            for (std::size_t i = 0; i < in; ++i) {
                const double ai = a[i];
                const double* wrow = w.data() + pos + i * out;
                double* grow = grad.data() + pos + i * out;
                double acc = 0.0;
                for (std::size_t j = 0; j < out; ++j) {
                    grow[j] += ai * dz[j];
                    acc += wrow[j] * dz[j];
                }
                da[i] = acc;
            }
            if (l > 0) {
                // ReLU derivative gates the signal through hidden layers.
                for (std::size_t i = 0; i < in; ++i) {
                    if (a[i] <= 0.0) {
                        da[i] = 0.0;
                    }
                }
                dz = std::move(da);
            }
        }
    }
    return {loss, ParamVector(std::move(grad))};
}

// Mini-batch SGD over a seed-determined shuffle; cfg.local_epochs passes. The
// input model is left untouched.
inline MlpModel local_train(const MlpModel& model, const ClientShard& shard,
                            const TrainingConfig& cfg) {
    if (shard.examples.empty()) {
        throw InvalidArgument("local_train: empty shard");
    }
    if (cfg.batch_size == 0 || cfg.local_epochs == 0) {
        throw InvalidArgument("local_train: batch_size and local_epochs must be positive");
    }
    if (!(cfg.learning_rate >= 0.0) || !std::isfinite(cfg.learning_rate)) {
        throw InvalidArgument("local_train: learning_rate must be finite and non-negative");
    }
    Rng rng(cfg.shuffle_seed);
    std::vector<double> w = model.weights().values();
    std::vector<LabeledExample> order = shard.examples;
    for (std::size_t epoch = 0; epoch < cfg.local_epochs; ++epoch) {
        rng.shuffle(order);
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t len = std::min(cfg.batch_size, order.size() - start);
            const MlpModel current(model.layer_dims(), ParamVector(w));
            const auto [loss, grad] =
                loss_and_gradient(current, std::span<const LabeledExample>(order.data() + start, len));
            (void)loss;
            for (std::size_t i = 0; i < w.size(); ++i) {
                w[i] -= cfg.learning_rate * grad[i];
            }
        }
    }
    return model.with_weights(ParamVector(std::move(w)));
}

// The update a client reports: new weights minus the broadcast weights.
inline ParamVector compute_update(const MlpModel& new_model, const MlpModel& old_model) {
    if (new_model.layer_dims() != old_model.layer_dims()) {
        throw DimensionError("compute_update: models have different shapes");
    }
    std::vector<double> out(new_model.weights().dim());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = new_model.weights()[i] - old_model.weights()[i];
    }
    return ParamVector(std::move(out));
}

inline MlpModel apply_update(const MlpModel& model, const ParamVector& update) {
    return model.with_weights(add(model.weights(), update));
}

// Fraction of examples whose argmax probability matches the label. Argmax
// ties break toward the lowest class index.
inline double evaluate(const MlpModel& m, const Dataset& data) {
    if (data.empty()) {
        throw InvalidArgument("evaluate: empty dataset");
    }
    std::size_t correct = 0;
    for (const LabeledExample& ex : data.examples) {
        const auto probs = forward(m, ex.features);
        std::size_t best = 0;
        for (std::size_t c = 1; c < probs.size(); ++c) {
            if (probs[c] > probs[best]) {
                best = c;
            }
        }
        if (static_cast<int>(best) == ex.label) {
            ++correct;
        }
    }
    return static_cast<double>(correct) / static_cast<double>(data.size());
}

} // namespace fedsim

#endif
