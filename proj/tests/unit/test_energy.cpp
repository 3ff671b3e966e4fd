#include <doctest.h>

#include <cmath>

#include "pmsm/energy.hpp"
#include "pmsm/error.hpp"

using namespace pmsm;

namespace {

RunReport one_layer_report(std::vector<std::vector<SpikeCounts>> spikes)
{
    RunReport rep;
    rep.timesteps = static_cast<int>(spikes.front().size());
    for (std::size_t l = 0; l < spikes.size(); ++l) {
        rep.labels.push_back("L" + std::to_string(2 * l) + "-linear");
        rep.thresholds.push_back(1.0f);
        rep.shapes.push_back({spikes[l].front().size()});
    }
    rep.spikes = std::move(spikes);
    return rep;
}

} // namespace

TEST_CASE("spike counting uses magnitudes")
{
    const auto tally = count_spikes(one_layer_report({{{3, -2, 0}}}));
    CHECK(tally.total == 5);
    CHECK(tally.per_layer == std::vector<std::uint64_t>{5});
    CHECK(count_spikes(one_layer_report({{{0, 0}, {0, 0}}})).total == 0);
}

TEST_CASE("average power")
{
    CHECK(power(0.61e8, 1) == doctest::Approx(0.0549).epsilon(1e-9));
    CHECK(power(3.08e8, 1) == doctest::Approx(0.2772).epsilon(1e-9));
    CHECK(power(0.0, 4) == 0.0);
    CHECK(power(2e8, 2, 2e-3, 1e-12) == doctest::Approx(0.05));
    CHECK_THROWS_AS(power(1.0, 0), ValidationError);
    CHECK_THROWS_AS(power(1.0, 1, 0.0), ValidationError);
    CHECK_THROWS_AS(power(-1.0, 1), ValidationError);
}

TEST_CASE("energy report divides by samples and timesteps")
{
    SpikeTally tally{{"a", "b"}, {600, 400}, 1000};
    const auto rep = make_energy_report(tally, 5, 4);
    CHECK(rep.spike_events == 1000.0);
    CHECK(rep.watts == doctest::Approx(1000.0 / (4 * 5 * 1e-3) * 0.9e-12));
    CHECK(rep.per_layer_counts == tally.per_layer);
    CHECK_THROWS_AS(make_energy_report(tally, 5, 0), ValidationError);
}

TEST_CASE("layerwise report")
{
    const auto rep = one_layer_report({{{1, -1}, {2, 0}}, {{0}, {-3}}});
    const auto rows = layerwise_spike_report(rep);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].label == "L0-linear");
    CHECK(rows[0].count == 4);
    CHECK(rows[1].count == 3);
    CHECK(layerwise_spike_csv(rows) == "layer_label,spike_count\nL0-linear,4\nL2-linear,3\n");
}
