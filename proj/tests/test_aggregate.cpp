#include <doctest.h>

#include <cmath>

#include "fedsim/aggregate.hpp"
#include "fedsim/random.hpp"
#include "oracles.hpp"

using namespace fedsim;

namespace {

ClientUpdate make_update(std::size_t id, std::vector<double> values, std::size_t samples = 1) {
    return {id, ParamVector(std::move(values)), samples};
}

std::vector<ClientUpdate> random_updates(Rng& rng, std::size_t n, std::size_t dim,
                                         double scale = 1.0) {
    std::vector<ClientUpdate> updates;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> v(dim);
        for (double& x : v) {
            x = scale * rng.uniform(-1.0, 1.0);
        }
        updates.push_back(make_update(i, std::move(v), 1 + rng.below(5)));
    }
    return updates;
}

} // namespace

TEST_CASE("fed_avg: plain mean, weighted mean, singleton") {
    CHECK(fed_avg({make_update(0, {2.0}), make_update(1, {4.0})}) == ParamVector({3.0}));
    CHECK(fed_avg({make_update(0, {0.0}, 1), make_update(1, {4.0}, 3)}) == ParamVector({3.0}));
    CHECK(fed_avg({make_update(7, {1.5, -2.0}, 9)}) == ParamVector({1.5, -2.0}));
    CHECK_THROWS_AS(fed_avg({}), InvalidArgument);
}

TEST_CASE("krum: identical updates, outlier exclusion, precondition") {
    const std::vector<ClientUpdate> same = {make_update(2, {1.0, 1.0}), make_update(0, {1.0, 1.0}),
                                            make_update(1, {1.0, 1.0}), make_update(3, {1.0, 1.0})};
    CHECK(krum(same, 1) == ParamVector({1.0, 1.0}));

    // Four clustered clients and one far outlier; f=1 gives k=2.
    const std::vector<ClientUpdate> clustered = {
        make_update(0, {0.1}), make_update(1, {-0.1}), make_update(2, {0.05}),
        make_update(3, {-0.05}), make_update(4, {100.0})};
    const auto chosen = krum(clustered, 1);
    CHECK(std::abs(chosen[0]) <= 0.1);
    CHECK(oracles::krum_bruteforce(clustered, 1) != 4);

    CHECK_THROWS_AS(krum({make_update(0, {1.0}), make_update(1, {2.0}), make_update(2, {3.0}),
                          make_update(3, {4.0})},
                         2),
                    KrumPreconditionError);
}

TEST_CASE("krum agrees with the brute-force score table on random instances") {
    Rng rng(61);
    for (int trial = 0; trial < 60; ++trial) {
        const std::size_t n = 5 + rng.below(8);
        int f = static_cast<int>(1 + rng.below(3));
        while (static_cast<long long>(n) - f - 2 < 1) {
            --f;
        }
        auto updates = random_updates(rng, n, 3 + rng.below(6), 2.0);
        // Occasionally push one client far away.
        if (rng.next_double() < 0.5) {
            const std::size_t victim = rng.below(n);
            for (std::size_t d = 0; d < updates[victim].update.dim(); ++d) {
                updates[victim].update[d] += 50.0;
            }
        }
        const auto expected_id = oracles::krum_bruteforce(updates, f);
        const auto sorted = detail::sorted_by_id(updates, "test");
        const auto chosen_idx = krum_select(sorted, f);
        CHECK(sorted[chosen_idx].client_id == expected_id);
        CHECK(krum(updates, f) == sorted[chosen_idx].update);
    }
}

TEST_CASE("krum output is always one of the inputs") {
    Rng rng(67);
    for (int trial = 0; trial < 20; ++trial) {
        const auto updates = random_updates(rng, 6, 4);
        const auto chosen = krum(updates, 1);
        bool found = false;
        for (const auto& u : updates) {
            found |= (u.update == chosen);
        }
        CHECK(found);
    }
}

TEST_CASE("median_agg and trimmed_mean_agg wrap the coordinate statistics") {
    const std::vector<ClientUpdate> updates = {
        make_update(0, {1.0, 5.0}), make_update(1, {2.0, -1.0}), make_update(2, {100.0, 3.0})};
    CHECK(median_agg(updates) == ParamVector({2.0, 3.0}));
    // beta=0 equals the unweighted mean even with uneven sample counts.
    const std::vector<ClientUpdate> weighted = {make_update(0, {0.0}, 1),
                                                make_update(1, {4.0}, 100)};
    CHECK(trimmed_mean_agg(weighted, 0.0) == ParamVector({2.0}));
}

TEST_CASE("aggregators are permutation invariant") {
    Rng rng(71);
    auto updates = random_updates(rng, 7, 5, 3.0);
    auto shuffled = updates;
    rng.shuffle(shuffled);

    CHECK(fed_avg(shuffled) == fed_avg(updates));
    CHECK(krum(shuffled, 2) == krum(updates, 2));
    CHECK(median_agg(shuffled) == median_agg(updates));
    CHECK(trimmed_mean_agg(shuffled, 0.2) == trimmed_mean_agg(updates, 0.2));
}

TEST_CASE("median_agg stays within the benign coordinate envelope") {
    // 7 clients, 3 adversarial (= floor((n-1)/2)); median must stay inside
    // the benign min/max per coordinate.
    Rng rng(73);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<ClientUpdate> updates;
        std::vector<double> lo(4, 1e18), hi(4, -1e18);
        for (std::size_t i = 0; i < 4; ++i) { // benign
            std::vector<double> v(4);
            for (std::size_t d = 0; d < 4; ++d) {
                v[d] = rng.uniform(-1.0, 1.0);
                lo[d] = std::min(lo[d], v[d]);
                hi[d] = std::max(hi[d], v[d]);
            }
            updates.push_back(make_update(i, std::move(v)));
        }
        for (std::size_t i = 4; i < 7; ++i) { // adversarial
            std::vector<double> v(4);
            for (double& x : v) {
                x = rng.uniform(-1000.0, 1000.0);
            }
            updates.push_back(make_update(i, std::move(v)));
        }
        const auto median = median_agg(updates);
        for (std::size_t d = 0; d < 4; ++d) {
            CHECK(median[d] >= lo[d]);
            CHECK(median[d] <= hi[d]);
        }
    }
}

namespace {

// A 2-2 linear model and a validation set it classifies by sign structure.
struct EnsembleFixture {
    MlpModel global;
    Dataset validation;

    EnsembleFixture()
        : global({2, 2}, ParamVector::zeros(MlpModel::weight_count({2, 2}))) {
        validation.num_classes = 2;
        validation.feature_dim = 2;
        validation.examples = {{{1.0, 0.0}, 0}, {{0.9, 0.1}, 0}, {{0.0, 1.0}, 1},
                               {{0.1, 0.9}, 1}};
    }
};

} // namespace

TEST_CASE("ensemble_agg: identical benign updates tie and FedAvg wins by precedence") {
    const EnsembleFixture fix;
    const std::vector<ClientUpdate> updates = {
        make_update(0, {4.0, -4.0, -4.0, 4.0, 0.0, 0.0}),
        make_update(1, {4.0, -4.0, -4.0, 4.0, 0.0, 0.0}),
        make_update(2, {4.0, -4.0, -4.0, 4.0, 0.0, 0.0}),
        make_update(3, {4.0, -4.0, -4.0, 4.0, 0.0, 0.0})};
    const auto result = ensemble_agg(updates, fix.global, fix.validation, 1, 0.2);
    CHECK(result.chosen == AggregatorKind::FedAvg);
    CHECK(result.validation_accuracy == 1.0);
    CHECK(result.update == updates[0].update);
    CHECK(result.skipped.empty());
}

TEST_CASE("ensemble_agg: picks the only candidate that preserves a separable model") {
    const EnsembleFixture fix;
    // Two honest clients hold a tight cluster on the separating update; three
    // attackers sit far apart from each other in the opposite direction. The
    // byzantine majority drags the mean and the per-coordinate statistics the
    // wrong way, but Krum's nearest-neighbour score still favours the tight
    // honest pair.
    std::vector<ClientUpdate> updates;
    updates.push_back(make_update(0, {6.0, -6.0, -6.0, 6.0, 0.0, 0.0}));
    updates.push_back(make_update(1, {6.1, -6.0, -6.0, 6.0, 0.0, 0.0}));
    updates.push_back(make_update(2, {-30.0, 30.0, 30.0, -30.0, 0.0, 0.0}));
    updates.push_back(make_update(3, {-40.0, 40.0, 40.0, -40.0, 0.0, 0.0}));
    updates.push_back(make_update(4, {-50.0, 50.0, 50.0, -50.0, 0.0, 0.0}));

    // Evaluate all four candidates by hand via evaluate().
    const auto by_hand = [&](const ParamVector& candidate) {
        return evaluate(apply_update(fix.global, candidate), fix.validation);
    };
    const double acc_fedavg = by_hand(fed_avg(updates));
    const double acc_krum = by_hand(krum(updates, 2));
    const double acc_median = by_hand(median_agg(updates));
    const double acc_trimmed = by_hand(trimmed_mean_agg(updates, 0.2));
    REQUIRE(acc_krum == 1.0);
    REQUIRE(acc_fedavg < 1.0);
    REQUIRE(acc_median < 1.0);
    REQUIRE(acc_trimmed < 1.0);

    const auto result = ensemble_agg(updates, fix.global, fix.validation, 2, 0.2);
    CHECK(result.chosen == AggregatorKind::Krum);
    CHECK(result.validation_accuracy ==
          std::max({acc_fedavg, acc_krum, acc_median, acc_trimmed}));
}

TEST_CASE("ensemble_agg: infeasible Krum candidate is skipped and recorded") {
    const EnsembleFixture fix;
    const std::vector<ClientUpdate> updates = {
        make_update(0, {1.0, 0.0, 0.0, 1.0, 0.0, 0.0}),
        make_update(1, {1.0, 0.0, 0.0, 1.0, 0.0, 0.0}),
        make_update(2, {1.0, 0.0, 0.0, 1.0, 0.0, 0.0})};
    // f=3 makes k = 3 - 3 - 2 < 1.
    const auto result = ensemble_agg(updates, fix.global, fix.validation, 3, 0.2);
    CHECK(result.skipped == std::vector<AggregatorKind>{AggregatorKind::Krum});
    CHECK(result.chosen == AggregatorKind::FedAvg);
}

TEST_CASE("ensemble_agg: chosen accuracy dominates every candidate") {
    const EnsembleFixture fix;
    Rng rng(79);
    for (int trial = 0; trial < 10; ++trial) {
        const auto updates = random_updates(rng, 5, 6, 4.0);
        const auto result = ensemble_agg(updates, fix.global, fix.validation, 1, 0.2);
        for (const auto& candidate :
             {fed_avg(updates), krum(updates, 1), median_agg(updates),
              trimmed_mean_agg(updates, 0.2)}) {
            CHECK(result.validation_accuracy >=
                  evaluate(apply_update(fix.global, candidate), fix.validation));
        }
    }
}
