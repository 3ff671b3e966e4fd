#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pmsm/runtime.hpp"

namespace pmsm {

inline constexpr double kDefaultTimestepSeconds = 1e-3;
inline constexpr double kDefaultJoulesPerSpike = 0.9e-12;

struct SpikeTally {
    std::vector<std::string> labels;
    std::vector<std::uint64_t> per_layer;
    std::uint64_t total = 0;
};

/// A neuron output of +-n counts as n spike events.
SpikeTally count_spikes(const RunReport& report);

/// Average power P = N / (T * eta) * xi in watts.
double power(double spike_events, int timesteps, double eta = kDefaultTimestepSeconds,
             double xi = kDefaultJoulesPerSpike);

struct EnergyReport {
    double spike_events = 0.0; ///< N
    int timesteps = 0;         ///< T per sample
    std::uint64_t samples = 1;
    double eta = kDefaultTimestepSeconds;
    double xi = kDefaultJoulesPerSpike;
    double watts = 0.0;        ///< P
    std::vector<std::string> labels;
    std::vector<std::uint64_t> per_layer_counts;
};

/// Average power over `samples` sequential inferences of `timesteps` steps:
/// P = N / (samples * T * eta) * xi.
EnergyReport make_energy_report(const SpikeTally& tally, int timesteps, std::uint64_t samples = 1,
                                double eta = kDefaultTimestepSeconds,
                                double xi = kDefaultJoulesPerSpike);

struct LayerSpikeRow {
    std::string label;
    std::uint64_t count = 0;
};

std::vector<LayerSpikeRow> layerwise_spike_report(const RunReport& report);
/// CSV with header "layer_label,spike_count".
std::string layerwise_spike_csv(const std::vector<LayerSpikeRow>& rows);

} // namespace pmsm
