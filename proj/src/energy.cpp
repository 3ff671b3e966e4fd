#include "pmsm/energy.hpp"

#include <cmath>
#include <cstdlib>
#include <sstream>

#include "pmsm/error.hpp"

namespace pmsm {

SpikeTally count_spikes(const RunReport& report)
{
    SpikeTally tally;
    tally.labels = report.labels;
    for (const auto& record : report.spikes) {
        std::uint64_t count = 0;
        for (const auto& step : record) {
            for (auto s : step) {
                count += static_cast<std::uint64_t>(std::llabs(s));
            }
        }
        tally.per_layer.push_back(count);
        tally.total += count;
    }
    return tally;
}

double power(double spike_events, int timesteps, double eta, double xi)
{
    if (timesteps < 1) {
        throw ValidationError("timesteps must be >= 1 (got " + std::to_string(timesteps) + ")");
    }
    if (!(eta > 0.0) || !std::isfinite(eta)) {
        throw ValidationError("timestep duration eta must be positive");
    }
    if (!(spike_events >= 0.0) || !(xi >= 0.0)) {
        throw ValidationError("spike count and energy per spike must be non-negative");
    }
    return spike_events / (timesteps * eta) * xi;
}

EnergyReport make_energy_report(const SpikeTally& tally, int timesteps, std::uint64_t samples,
                                double eta, double xi)
{
    if (samples < 1) {
        throw ValidationError("energy report needs at least one sample");
    }
    EnergyReport rep;
    rep.spike_events = static_cast<double>(tally.total);
    rep.timesteps = timesteps;
    rep.samples = samples;
    rep.eta = eta;
    rep.xi = xi;
    rep.watts = power(rep.spike_events / static_cast<double>(samples), timesteps, eta, xi);
    rep.labels = tally.labels;
    rep.per_layer_counts = tally.per_layer;
    return rep;
}

std::vector<LayerSpikeRow> layerwise_spike_report(const RunReport& report)
{
    const SpikeTally tally = count_spikes(report);
    std::vector<LayerSpikeRow> rows;
    for (std::size_t i = 0; i < tally.per_layer.size(); ++i) {
        rows.push_back({tally.labels[i], tally.per_layer[i]});
    }
    return rows;
}

std::string layerwise_spike_csv(const std::vector<LayerSpikeRow>& rows)
{
    std::ostringstream out;
    out << "layer_label,spike_count\n";
    for (const auto& row : rows) {
        out << row.label << ',' << row.count << '\n';
    }
    return out.str();
}

} // namespace pmsm
