#ifndef FEDSIM_RANDOM_HPP
#define FEDSIM_RANDOM_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

#include "fedsim/error.hpp"

namespace fedsim {

// Every random decision in the simulator flows through this wrapper. The
// standard <random> distributions are implementation-defined, so we generate
// uniforms and normals ourselves from the (standardized) mt19937_64 stream;
// the same seed then yields the same bits on every platform and thread count.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // Uniform in [0, 1), 53-bit resolution.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    // Uniform integer in [0, n). Rejection-sampled so every value is equally
    // likely.
    std::uint64_t below(std::uint64_t n) {
        if (n == 0) {
            throw InvalidArgument("Rng::below: n must be positive");
        }
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x = next_u64();
        while (x >= limit) {
            x = next_u64();
        }
        return x % n;
    }

    // Standard normal via Box-Muller; the spare half of each pair is cached.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = next_double();
        while (u1 <= 0.0) {
            u1 = next_double();
        }
        const double u2 = next_double();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    std::vector<std::size_t> permutation(std::size_t n) {
        std::vector<std::size_t> idx(n);
        for (std::size_t i = 0; i < n; ++i) {
            idx[i] = i;
        }
        shuffle(idx);
        return idx;
    }

private:
    std::mt19937_64 gen_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

namespace detail {

inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

} // namespace detail

// Derives an independent stream seed from a base seed, a purpose tag, and up
// to two indices (typically round and client id). Deterministic by design.
inline std::uint64_t derive_seed(std::uint64_t base, std::string_view tag,
                                 std::uint64_t a = 0, std::uint64_t b = 0) {
    std::uint64_t h = 0xcbf29ce484222325ull; // FNV-1a over the tag
    for (const char c : tag) {
        h = (h ^ static_cast<unsigned char>(c)) * 0x100000001b3ull;
    }
    h = detail::mix64(h ^ base);
    h = detail::mix64(h ^ a);
    h = detail::mix64(h ^ b);
    return h;
}

} // namespace fedsim

#endif
