#include <doctest.h>

#include <cmath>

#include "fedsim/params.hpp"
#include "fedsim/random.hpp"
#include "oracles.hpp"

using namespace fedsim;

namespace {

ParamVector random_vector(Rng& rng, std::size_t dim, double scale = 1.0) {
    std::vector<double> v(dim);
    for (double& x : v) {
        x = scale * rng.uniform(-1.0, 1.0);
    }
    return ParamVector(std::move(v));
}

} // namespace

TEST_CASE("add: identities and elementwise oracle") {
    CHECK(add(ParamVector({0, 0}), ParamVector({1, 2})) == ParamVector({1, 2}));
    CHECK(add(ParamVector({1, -1}), ParamVector({-1, 1})) == ParamVector({0, 0}));

    Rng rng(101);
    const auto a = random_vector(rng, 17);
    const auto b = random_vector(rng, 17);
    const auto expected = oracles::elementwise_add(a.values(), b.values());
    CHECK(add(a, b).values() == expected);

    CHECK_THROWS_AS(add(ParamVector({1.0}), ParamVector({1.0, 2.0})), DimensionError);
}

TEST_CASE("scale: identity, sign-flip shape, annihilator") {
    CHECK(scale(ParamVector({1, 2}), 1.0) == ParamVector({1, 2}));
    CHECK(scale(ParamVector({1, -2}), -10.0) == ParamVector({-10, 20}));

    Rng rng(5);
    const auto v = random_vector(rng, 9);
    CHECK(scale(v, 0.0) == ParamVector::zeros(9));

    CHECK_THROWS_AS(scale(v, std::nan("")), InvalidArgument);
}

TEST_CASE("sq_distance: identity, 3-4-5, loop oracle") {
    Rng rng(7);
    const auto v = random_vector(rng, 12);
    CHECK(sq_distance(v, v) == 0.0);
    CHECK(sq_distance(ParamVector({0, 0}), ParamVector({3, 4})) == doctest::Approx(25.0));

    const auto a = random_vector(rng, 33);
    const auto b = random_vector(rng, 33);
    const double expected = oracles::sq_distance_loop(a.values(), b.values());
    CHECK(sq_distance(a, b) == doctest::Approx(expected).epsilon(1e-12));

    CHECK_THROWS_AS(sq_distance(a, random_vector(rng, 32)), DimensionError);
}

TEST_CASE("sq_distance is symmetric for generated pairs") {
    Rng rng(17);
    for (int i = 0; i < 30; ++i) {
        const auto a = random_vector(rng, 8, 5.0);
        const auto b = random_vector(rng, 8, 5.0);
        CHECK(sq_distance(a, b) == sq_distance(b, a));
        CHECK(sq_distance(a, a) == 0.0);
    }
}

TEST_CASE("coordinate_median: singleton, outlier, sort oracle") {
    Rng rng(23);
    const auto v = random_vector(rng, 6);
    CHECK(coordinate_median({v}) == v);

    const std::vector<ParamVector> outlier = {ParamVector({1.0}), ParamVector({2.0}),
                                              ParamVector({100.0})};
    CHECK(coordinate_median(outlier) == ParamVector({2.0}));

    std::vector<ParamVector> vs;
    for (int i = 0; i < 6; ++i) {
        vs.push_back(random_vector(rng, 8));
    }
    const auto median = coordinate_median(vs);
    for (std::size_t d = 0; d < 8; ++d) {
        std::vector<double> column;
        for (const auto& x : vs) {
            column.push_back(x[d]);
        }
        CHECK(median[d] == doctest::Approx(oracles::median_sorted(column)).epsilon(1e-15));
    }

    CHECK_THROWS_AS(coordinate_median({}), InvalidArgument);
}

TEST_CASE("coordinate_trimmed_mean: no trimming, single outlier, sort oracle") {
    const std::vector<ParamVector> pair = {ParamVector({1.0, 3.0}), ParamVector({3.0, 5.0})};
    CHECK(coordinate_trimmed_mean(pair, 0.0) == ParamVector({2.0, 4.0}));

    const std::vector<ParamVector> vs = {ParamVector({0.0}), ParamVector({1.0}), ParamVector({2.0}),
                                         ParamVector({3.0}), ParamVector({100.0})};
    CHECK(coordinate_trimmed_mean(vs, 0.2) == ParamVector({2.0}));

    Rng rng(29);
    std::vector<ParamVector> rand_vs;
    for (int i = 0; i < 9; ++i) {
        rand_vs.push_back(random_vector(rng, 5));
    }
    const double beta = 0.3; // t = floor(0.3 * 9) = 2
    const auto trimmed = coordinate_trimmed_mean(rand_vs, beta);
    for (std::size_t d = 0; d < 5; ++d) {
        std::vector<double> column;
        for (const auto& x : rand_vs) {
            column.push_back(x[d]);
        }
        CHECK(trimmed[d] == doctest::Approx(oracles::trimmed_mean_sorted(column, 2)).epsilon(1e-13));
    }

    // beta at or above 0.5 would trim everything; rejected up front. Any
    // beta below 0.5 keeps at least one value, so n - 2t >= 1 always holds.
    const std::vector<ParamVector> two = {ParamVector({1.0}), ParamVector({2.0})};
    CHECK_THROWS_AS(coordinate_trimmed_mean(two, 0.5), InvalidArgument);
    CHECK_THROWS_AS(coordinate_trimmed_mean(two, -0.1), InvalidArgument);
    CHECK(coordinate_trimmed_mean({ParamVector({1.0}), ParamVector({2.0}), ParamVector({3.0})},
                                  0.4) == ParamVector({2.0}));
}

TEST_CASE("median and trimmed mean are permutation invariant and stay in range") {
    Rng rng(31);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<ParamVector> vs;
        const std::size_t n = 3 + trial % 6;
        for (std::size_t i = 0; i < n; ++i) {
            vs.push_back(random_vector(rng, 4, 3.0));
        }
        auto shuffled = vs;
        rng.shuffle(shuffled);

        const auto median = coordinate_median(vs);
        CHECK(coordinate_median(shuffled) == median);

        const double beta = 0.2;
        if (n > 2 * static_cast<std::size_t>(beta * static_cast<double>(n))) {
            const auto trimmed = coordinate_trimmed_mean(vs, beta);
            CHECK(coordinate_trimmed_mean(shuffled, beta) == trimmed);
            for (std::size_t d = 0; d < 4; ++d) {
                double lo = vs[0][d], hi = vs[0][d];
                for (const auto& v : vs) {
                    lo = std::min(lo, v[d]);
                    hi = std::max(hi, v[d]);
                }
                CHECK(median[d] >= lo);
                CHECK(median[d] <= hi);
                CHECK(trimmed[d] >= lo);
                CHECK(trimmed[d] <= hi);
            }
        }
    }
}

TEST_CASE("identical inputs collapse to that vector exactly") {
    Rng rng(37);
    const auto v = random_vector(rng, 7);
    const std::vector<ParamVector> vs(5, v);
    CHECK(coordinate_median(vs) == v);
    CHECK(coordinate_trimmed_mean(vs, 0.2) == v);
    CHECK(coordinate_trimmed_mean(vs, 0.0) == v);
}

TEST_CASE("ParamVector rejects non-finite entries") {
    CHECK_THROWS_AS(ParamVector({1.0, std::nan("")}), InvalidArgument);
    CHECK_THROWS_AS(ParamVector({std::numeric_limits<double>::infinity()}), InvalidArgument);
}
