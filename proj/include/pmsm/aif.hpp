#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "pmsm/tensor.hpp"

namespace pmsm {

/// Augmented integrate-and-fire parameters. One neuron emits a signed spike
/// count in [c_neg, c_pos] per timestep.
struct AifParams {
    float theta_snn = 1.0f;
    int c_neg = 0;
    int c_pos = 1;
    float v_init = 0.5f;

    friend bool operator==(const AifParams&, const AifParams&) = default;
};

void validate_aif_params(const AifParams& params);

/// Membrane potentials v(t) of one layer, owned by a single run.
struct AifState {
    Tensor v;
};

using SpikeCounts = std::vector<std::int32_t>;

AifState aif_init(const AifParams& params, std::size_t neurons);
AifState aif_init(const AifParams& params, const Shape& shape);

/// One timestep of the neuron:
///   m  = v + o
///   s  = clip(floor(m / theta_snn), c_neg, c_pos)
///   v' = m - theta_snn * s
/// Updates `state` in place and returns s. Throws NumericError on a
/// non-finite current and DimensionError on a length mismatch.
SpikeCounts aif_step(const AifParams& params, AifState& state, std::span<const float> current);
SpikeCounts aif_step(const AifParams& params, AifState& state, const Tensor& current);

void aif_reset(const AifParams& params, AifState& state);

} // namespace pmsm
