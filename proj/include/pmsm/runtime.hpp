#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pmsm/model.hpp"

namespace pmsm {

/// How spiking layers are driven after the first timestep.
enum class DriveMode {
    /// Layer l consumes layer l-1's spikes from the same timestep.
    propagated,
    /// Every layer keeps receiving the weighted input it saw at t = 1, i.e.
    /// the ANN's own pre-activation. This is the shared-input setting under
    /// which the layerwise error is analysed.
    teacher_forced,
};

struct RunOptions {
    DriveMode drive = DriveMode::propagated;
};

/// Record of one T-step simulation. Only spiking (AIF) layers appear in
/// `spikes`, `psp`, `labels` and `thresholds`.
struct RunReport {
    int timesteps = 0;
    std::vector<std::string> labels;
    std::vector<float> thresholds;
    std::vector<Shape> shapes;
    /// spikes[layer][t][neuron]
    std::vector<std::vector<SpikeCounts>> spikes;
    /// phi^l(T) = theta_snn * sum_t s(t) / T
    std::vector<Tensor> psp;
    /// head potential averaged over T
    Tensor head_output;
    std::uint64_t total_spike_events = 0;
};

RunReport run_snn(const SnnModel& model, const Tensor& input, int timesteps,
                  const RunOptions& options = {});

/// Recomputes phi for one layer of a report from its spike record.
Tensor recompute_psp(const RunReport& report, std::size_t layer);

/// Argmax of the head potential, ties toward the lowest index.
std::size_t decode_prediction(const RunReport& report);

struct LayerErrorReport {
    /// Err^l = phi^l(T) - y^l, one tensor per spiking layer
    std::vector<Tensor> err;
    std::vector<double> mean_abs_err;
    RunReport run;
};

/// Conversion error of every spiking layer against the ANN's PQA outputs,
/// with the SNN teacher-forced by the ANN's weighted inputs.
LayerErrorReport layer_error(const AnnModel& ann, const SnnModel& snn, const Tensor& input,
                             int timesteps);

struct DeltaHistogram {
    std::uint64_t minus_one = 0;
    std::uint64_t zero = 0;
    std::uint64_t plus_one = 0;
    std::uint64_t other = 0;

    std::uint64_t total() const noexcept { return minus_one + zero + plus_one + other; }
    void add(int delta) noexcept;
    DeltaHistogram& operator+=(const DeltaHistogram& rhs) noexcept;
};

struct LayerDeltaStats {
    /// deltas[neuron][i] = s(i) - s(1), so deltas[n][0] == 0
    std::vector<std::vector<int>> deltas;
    DeltaHistogram histogram;
    /// (1/T) sum_i Delta_i averaged over neurons
    double mean_delta = 0.0;
};

struct DeltaStats {
    int timesteps = 0;
    std::vector<LayerDeltaStats> layers;
    DeltaHistogram histogram;
    double mean_delta = 0.0;
};

/// Spike-count deviations from the first timestep, read off a recorded run.
DeltaStats delta_statistics(const RunReport& report);
/// Teacher-forced run followed by delta_statistics; requires T >= 2.
DeltaStats delta_statistics(const SnnModel& model, const Tensor& input, int timesteps);

} // namespace pmsm
