#ifndef FEDSIM_PARAMS_HPP
#define FEDSIM_PARAMS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "fedsim/error.hpp"

namespace fedsim {

// Flat vector of real-valued model parameters. The same type carries global
// weights, client updates, and aggregates. Entries must stay finite; every
// operation below validates its result.
class ParamVector {
public:
    ParamVector() = default;

    explicit ParamVector(std::vector<double> values) : v_(std::move(values)) {
        check_finite();
    }

    static ParamVector zeros(std::size_t dim) {
        return ParamVector(std::vector<double>(dim, 0.0));
    }

    std::size_t dim() const { return v_.size(); }

    double operator[](std::size_t i) const { return v_[i]; }
    double& operator[](std::size_t i) { return v_[i]; }

    const std::vector<double>& values() const { return v_; }
    std::vector<double>& values() { return v_; }

    bool operator==(const ParamVector&) const = default;

    void check_finite() const {
        for (const double x : v_) {
            if (!std::isfinite(x)) {
                throw InvalidArgument("ParamVector holds a non-finite entry");
            }
        }
    }

private:
    std::vector<double> v_;
};

namespace detail {

inline void require_same_dim(const ParamVector& a, const ParamVector& b, const char* op) {
    if (a.dim() != b.dim()) {
        throw DimensionError(std::string(op) + ": dimension mismatch (" +
                             std::to_string(a.dim()) + " vs " + std::to_string(b.dim()) + ")");
    }
}

inline void require_same_dims(const std::vector<ParamVector>& vs, const char* op) {
    if (vs.empty()) {
        throw InvalidArgument(std::string(op) + ": empty input list");
    }
    for (const auto& v : vs) {
        require_same_dim(vs.front(), v, op);
    }
}

} // namespace detail

inline ParamVector add(const ParamVector& a, const ParamVector& b) {
    detail::require_same_dim(a, b, "add");
    std::vector<double> out(a.dim());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = a[i] + b[i];
    }
    return ParamVector(std::move(out));
}

inline ParamVector scale(const ParamVector& a, double c) {
    if (!std::isfinite(c)) {
        throw InvalidArgument("scale: factor must be finite");
    }
    std::vector<double> out(a.dim());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = a[i] * c;
    }
    return ParamVector(std::move(out));
}

// Squared Euclidean distance. Krum scores are built from this; the squared
// form leaves Krum's argmin unchanged and avoids the sqrt.
inline double sq_distance(const ParamVector& a, const ParamVector& b) {
    detail::require_same_dim(a, b, "sq_distance");
    double sum = 0.0;
    for (std::size_t i = 0; i < a.dim(); ++i) {
        const double d = a[i] - b[i];
        sum += d * d;
    }
    if (!std::isfinite(sum)) {
        throw InvalidArgument("sq_distance: non-finite result");
    }
    return sum;
}

// Per-coordinate statistical median. Even counts take the mean of the two
// middle order statistics.
inline ParamVector coordinate_median(const std::vector<ParamVector>& vs) {
    detail::require_same_dims(vs, "coordinate_median");
    const std::size_t n = vs.size();
    const std::size_t dim = vs.front().dim();
    std::vector<double> out(dim);
    std::vector<double> column(n);
    for (std::size_t d = 0; d < dim; ++d) {
        for (std::size_t i = 0; i < n; ++i) {
            column[i] = vs[i][d];
        }
        std::sort(column.begin(), column.end());
        out[d] = (n % 2 == 1) ? column[n / 2]
                              : 0.5 * (column[n / 2 - 1] + column[n / 2]);
    }
    return ParamVector(std::move(out));
}

// Per coordinate: drop the t = floor(beta * n) smallest and t largest values,
// then average what remains. Summation runs in ascending sorted order so the
// result is bit-reproducible.
inline ParamVector coordinate_trimmed_mean(const std::vector<ParamVector>& vs, double beta) {
    detail::require_same_dims(vs, "coordinate_trimmed_mean");
    if (!(beta >= 0.0 && beta < 0.5)) {
        throw InvalidArgument("coordinate_trimmed_mean: beta must be in [0, 0.5)");
    }
    const std::size_t n = vs.size();
    const std::size_t t = static_cast<std::size_t>(beta * static_cast<double>(n));
    if (n < 2 * t + 1) {
        throw InvalidArgument("coordinate_trimmed_mean: trimming leaves no values (n=" +
                              std::to_string(n) + ", t=" + std::to_string(t) + ")");
    }
    const std::size_t dim = vs.front().dim();
    std::vector<double> out(dim);
    std::vector<double> column(n);
    for (std::size_t d = 0; d < dim; ++d) {
        for (std::size_t i = 0; i < n; ++i) {
            column[i] = vs[i][d];
        }
        std::sort(column.begin(), column.end());
        if (column[t] == column[n - 1 - t]) {
            // Constant kept slice; returning the value directly keeps
            // identical inputs bit-exact through the mean.
            out[d] = column[t];
            continue;
        }
        double sum = 0.0;
        for (std::size_t i = t; i < n - t; ++i) {
            sum += column[i];
        }
        out[d] = sum / static_cast<double>(n - 2 * t);
    }
    return ParamVector(std::move(out));
}

} // namespace fedsim

#endif
