#ifndef FEDSIM_STATS_HPP
#define FEDSIM_STATS_HPP

#include <algorithm>
#include <cmath>
#include <vector>

#include "fedsim/data.hpp"
#include "fedsim/error.hpp"
#include "fedsim/model.hpp"
#include "fedsim/threat.hpp"

namespace fedsim {

// Backdoor-task accuracy: over test examples whose true label differs from
// the target, stamp the trigger onto a copy and report the fraction the model
// classifies as the target.
inline double backdoor_accuracy(const MlpModel& model, const Dataset& test,
                                const BackdoorPattern& pattern, int target) {
    if (test.empty()) {
        throw InvalidArgument("backdoor_accuracy: empty test set");
    }
    std::size_t qualifying = 0;
    std::size_t fooled = 0;
    std::vector<double> stamped;
    for (const LabeledExample& ex : test.examples) {
        if (ex.label == target) {
            continue;
        }
        ++qualifying;
        stamped = ex.features;
        for (const std::size_t d : pattern.indices) {
            if (d >= stamped.size()) {
                throw InvalidArgument("backdoor_accuracy: pattern index outside feature_dim");
            }
            stamped[d] = pattern.value;
        }
        const auto probs = forward(model, stamped);
        std::size_t best = 0;
        for (std::size_t c = 1; c < probs.size(); ++c) {
            if (probs[c] > probs[best]) {
                best = c;
            }
        }
        if (static_cast<int>(best) == target) {
            ++fooled;
        }
    }
    if (qualifying == 0) {
        throw InvalidArgument("backdoor_accuracy: no examples with a non-target label");
    }
    return static_cast<double>(fooled) / static_cast<double>(qualifying);
}

struct MannWhitneyResult {
    double u = 0.0;       // U statistic of the first sample, ties counted 1/2
    double p_value = 1.0; // two-sided, normal approximation
};

/*
 * Two-sided Mann-Whitney U test. Ranks use midranks for ties; the p-value
 * comes from the normal approximation with tie-corrected variance and a
 * continuity correction of 1/2. When every value across both samples is
 * identical the variance vanishes and p is 1 by convention.
 */
inline MannWhitneyResult mann_whitney_u(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() < 3 || b.size() < 3) {
        throw InvalidArgument("mann_whitney_u: both samples need at least 3 values");
    }
    const std::size_t na = a.size();
    const std::size_t nb = b.size();
    const std::size_t total = na + nb;

    struct Entry {
        double value;
        bool from_a;
    };
    std::vector<Entry> pooled;
    pooled.reserve(total);
    for (const double x : a) {
        pooled.push_back({x, true});
    }
    for (const double x : b) {
        pooled.push_back({x, false});
    }
    std::sort(pooled.begin(), pooled.end(),
              [](const Entry& x, const Entry& y) { return x.value < y.value; });

    double rank_sum_a = 0.0;
    double tie_term = 0.0; // sum of t^3 - t over tie groups
    std::size_t i = 0;
    while (i < total) {
        std::size_t j = i;
        while (j < total && pooled[j].value == pooled[i].value) {
            ++j;
        }
        const double midrank = 0.5 * static_cast<double>(i + 1 + j); // average of ranks i+1..j
        const auto t = static_cast<double>(j - i);
        tie_term += t * t * t - t;
        for (std::size_t k = i; k < j; ++k) {
            if (pooled[k].from_a) {
                rank_sum_a += midrank;
            }
        }
        i = j;
    }

    MannWhitneyResult result;
    result.u = rank_sum_a - static_cast<double>(na) * static_cast<double>(na + 1) / 2.0;

    const double n1 = static_cast<double>(na);
    const double n2 = static_cast<double>(nb);
    const double nt = static_cast<double>(total);
    const double mean_u = n1 * n2 / 2.0;
    const double variance =
        n1 * n2 / 12.0 * ((nt + 1.0) - tie_term / (nt * (nt - 1.0)));
    if (variance <= 0.0) {
        result.p_value = 1.0;
        return result;
    }
    const double z = std::max(std::abs(result.u - mean_u) - 0.5, 0.0) / std::sqrt(variance);
    result.p_value = std::min(std::erfc(z / std::sqrt(2.0)), 1.0);
    return result;
}

// Median with the even-count convention (mean of the two middle values).
inline double median_of(std::vector<double> values) {
    if (values.empty()) {
        throw InvalidArgument("median_of: empty input");
    }
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return (n % 2 == 1) ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

} // namespace fedsim

#endif
