#include "pmsm/runtime.hpp"

#include <cmath>
#include <cstdlib>
#include <optional>

#include "pmsm/error.hpp"

namespace pmsm {

namespace {

Tensor weight_forward(const SnnLayer& layer, const Tensor& x)
{
    if (layer.kind == SnnLayerKind::linear) {
        return linear_forward(layer.weight, layer.bias, x);
    }
    return conv2d_forward(Conv2d{layer.weight, layer.bias, layer.stride, layer.padding}, x);
}

Tensor spikes_to_tensor(const SpikeCounts& s, const Shape& shape)
{
    std::vector<float> data(s.begin(), s.end());
    return Tensor(shape, std::move(data));
}

float psp_value(float theta, std::int64_t sum, int timesteps)
{
    return static_cast<float>(static_cast<double>(theta) * static_cast<double>(sum) / timesteps);
}

} // namespace

RunReport run_snn(const SnnModel& model, const Tensor& input, int timesteps,
                  const RunOptions& options)
{
    if (timesteps < 1) {
        throw ValidationError("timesteps must be >= 1 (got " + std::to_string(timesteps) + ")");
    }
    if (model.layers.empty()) {
        throw StructureError("SNN has no layers");
    }
    if (!model.input_shape.empty() && input.shape() != model.input_shape) {
        throw DimensionError("SNN expects input " + shape_to_string(model.input_shape) + ", got " +
                             shape_to_string(input.shape()));
    }
    if (!input.all_finite()) {
        throw NumericError("non-finite SNN input");
    }

    const std::size_t n_layers = model.layers.size();
    std::vector<std::optional<AifState>> states(n_layers);
    std::vector<Tensor> held_current(n_layers);
    std::vector<std::vector<std::int64_t>> spike_sums(n_layers);
    std::vector<double> head_acc;

    RunReport report;
    report.timesteps = timesteps;
    std::vector<std::size_t> slot(n_layers, 0);
    for (std::size_t i = 0; i < n_layers; ++i) {
        const auto& layer = model.layers[i];
        if (layer.aif) {
            slot[i] = report.labels.size();
            report.labels.push_back("L" + std::to_string(i) + "-" + to_string(layer.kind));
            report.thresholds.push_back(layer.aif->theta_snn);
            report.shapes.emplace_back();
            report.spikes.emplace_back();
        }
    }

    const bool forced = options.drive == DriveMode::teacher_forced;
    for (int t = 0; t < timesteps; ++t) {
        Tensor x = input;
        for (std::size_t i = 0; i < n_layers; ++i) {
            const auto& layer = model.layers[i];
            switch (layer.kind) {
            case SnnLayerKind::avgpool2d:
                if (!forced || t == 0) {
                    x = avgpool2d_forward(AvgPool2d{layer.window, layer.stride}, x);
                }
                continue;
            case SnnLayerKind::flatten:
                if (!forced || t == 0) {
                    x = flatten(x);
                }
                continue;
            default:
                break;
            }

            if (!forced || t == 0) {
                held_current[i] = weight_forward(layer, x);
            }
            const Tensor& current = held_current[i];

            if (!layer.aif) {
                if (!current.all_finite()) {
                    throw NumericError("non-finite head potential at timestep " +
                                       std::to_string(t + 1));
                }
                if (head_acc.empty()) {
                    head_acc.assign(current.size(), 0.0);
                    report.head_output = Tensor(current.shape());
                }
                for (std::size_t k = 0; k < current.size(); ++k) {
                    head_acc[k] += current[k];
                }
                continue;
            }

            if (!states[i]) {
                states[i] = aif_init(*layer.aif, current.shape());
                spike_sums[i].assign(current.size(), 0);
                report.shapes[slot[i]] = current.shape();
            }
            SpikeCounts s = aif_step(*layer.aif, *states[i], current);
            for (std::size_t k = 0; k < s.size(); ++k) {
                spike_sums[i][k] += s[k];
                report.total_spike_events += static_cast<std::uint64_t>(std::llabs(s[k]));
            }
            if (!forced || t == 0) {
                x = spikes_to_tensor(s, current.shape());
            }
            report.spikes[slot[i]].push_back(std::move(s));
        }
    }

    for (std::size_t i = 0; i < n_layers; ++i) {
        if (!model.layers[i].aif) {
            continue;
        }
        const float theta = model.layers[i].aif->theta_snn;
        Tensor psp(report.shapes[slot[i]]);
        for (std::size_t k = 0; k < psp.size(); ++k) {
            psp[k] = psp_value(theta, spike_sums[i][k], timesteps);
        }
        report.psp.push_back(std::move(psp));
    }
    for (std::size_t k = 0; k < head_acc.size(); ++k) {
        report.head_output[k] = static_cast<float>(head_acc[k] / timesteps);
    }
    return report;
}

Tensor recompute_psp(const RunReport& report, std::size_t layer)
{
    const auto& record = report.spikes.at(layer);
    Tensor psp(report.shapes.at(layer));
    for (std::size_t k = 0; k < psp.size(); ++k) {
        std::int64_t sum = 0;
        for (const auto& step : record) {
            sum += step[k];
        }
        psp[k] = psp_value(report.thresholds.at(layer), sum, report.timesteps);
    }
    return psp;
}

std::size_t decode_prediction(const RunReport& report)
{
    if (report.head_output.empty()) {
        throw DimensionError("run report has no head output");
    }
    return argmax(report.head_output.data());
}

LayerErrorReport layer_error(const AnnModel& ann, const SnnModel& snn, const Tensor& input,
                             int timesteps)
{
    const AnnTrace trace = ann_forward_trace(ann, input);
    LayerErrorReport out;
    out.run = run_snn(snn, input, timesteps, RunOptions{DriveMode::teacher_forced});
    if (trace.activations.size() != out.run.psp.size()) {
        throw StructureError("ANN has " + std::to_string(trace.activations.size()) +
                             " PQA layers, SNN has " + std::to_string(out.run.psp.size()) +
                             " spiking layers");
    }
    for (std::size_t l = 0; l < out.run.psp.size(); ++l) {
        const Tensor& phi = out.run.psp[l];
        const Tensor& y = trace.activations[l].output;
        if (phi.size() != y.size()) {
            throw StructureError("layer " + std::to_string(l) + " sizes differ between ANN and SNN");
        }
        Tensor err(phi.shape());
        double abs_sum = 0.0;
        for (std::size_t k = 0; k < phi.size(); ++k) {
            err[k] = phi[k] - y[k];
            abs_sum += std::abs(err[k]);
        }
        out.mean_abs_err.push_back(abs_sum / static_cast<double>(phi.size()));
        out.err.push_back(std::move(err));
    }
    return out;
}

void DeltaHistogram::add(int delta) noexcept
{
    switch (delta) {
    case -1: ++minus_one; break;
    case 0: ++zero; break;
    case 1: ++plus_one; break;
    default: ++other; break;
    }
}

DeltaHistogram& DeltaHistogram::operator+=(const DeltaHistogram& rhs) noexcept
{
    minus_one += rhs.minus_one;
    zero += rhs.zero;
    plus_one += rhs.plus_one;
    other += rhs.other;
    return *this;
}

DeltaStats delta_statistics(const RunReport& report)
{
    DeltaStats stats;
    stats.timesteps = report.timesteps;
    double mean_acc = 0.0;
    std::size_t total_neurons = 0;
    for (const auto& record : report.spikes) {
        LayerDeltaStats layer;
        if (record.empty()) {
            stats.layers.push_back(std::move(layer));
            continue;
        }
        const std::size_t neurons = record.front().size();
        layer.deltas.assign(neurons, std::vector<int>(record.size(), 0));
        double layer_acc = 0.0;
        for (std::size_t n = 0; n < neurons; ++n) {
            long long sum = 0;
            for (std::size_t i = 0; i < record.size(); ++i) {
                const int d = record[i][n] - record[0][n];
                layer.deltas[n][i] = d;
                layer.histogram.add(d);
                sum += d;
            }
            layer_acc += static_cast<double>(sum) / static_cast<double>(record.size());
        }
        layer.mean_delta = layer_acc / static_cast<double>(neurons);
        mean_acc += layer_acc;
        total_neurons += neurons;
        stats.histogram += layer.histogram;
        stats.layers.push_back(std::move(layer));
    }
    stats.mean_delta = total_neurons ? mean_acc / static_cast<double>(total_neurons) : 0.0;
    return stats;
}

DeltaStats delta_statistics(const SnnModel& model, const Tensor& input, int timesteps)
{
    if (timesteps < 2) {
        throw ValidationError("delta statistics need T >= 2 (got " + std::to_string(timesteps) +
                              ")");
    }
    return delta_statistics(run_snn(model, input, timesteps, RunOptions{DriveMode::teacher_forced}));
}

} // namespace pmsm
