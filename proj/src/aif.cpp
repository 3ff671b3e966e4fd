#include "pmsm/aif.hpp"

#include <algorithm>
#include <cmath>

#include "pmsm/error.hpp"
#include "pmsm/quant.hpp"

namespace pmsm {

void validate_aif_params(const AifParams& params)
{
    if (!(params.theta_snn > 0.0f) || !std::isfinite(params.theta_snn)) {
        throw ValidationError("AIF threshold must be positive");
    }
    if (!(params.c_neg <= 0 && params.c_pos > 0)) {
        throw ValidationError("AIF clip bounds must satisfy c_neg <= 0 < c_pos (got " +
                              std::to_string(params.c_neg) + ", " + std::to_string(params.c_pos) +
                              ")");
    }
    if (!std::isfinite(params.v_init)) {
        throw ValidationError("AIF initial potential must be finite");
    }
}

AifState aif_init(const AifParams& params, std::size_t neurons)
{
    if (neurons == 0) {
        throw DimensionError("AIF layer needs at least one neuron");
    }
    return aif_init(params, Shape{neurons});
}

AifState aif_init(const AifParams& params, const Shape& shape)
{
    validate_aif_params(params);
    if (shape.empty() || shape_size(shape) == 0) {
        throw DimensionError("AIF layer needs at least one neuron");
    }
    return AifState{Tensor(shape, params.v_init)};
}

SpikeCounts aif_step(const AifParams& params, AifState& state, std::span<const float> current)
{
    if (current.size() != state.v.size()) {
        throw DimensionError("AIF input has " + std::to_string(current.size()) +
                             " elements, state has " + std::to_string(state.v.size()));
    }
    SpikeCounts spikes(current.size());
    auto v = state.v.data();
    const float theta = params.theta_snn;
    for (std::size_t i = 0; i < current.size(); ++i) {
        if (!std::isfinite(current[i])) {
            throw NumericError("non-finite input current at neuron " + std::to_string(i));
        }
        const float m = v[i] + current[i];
        const long long k = std::clamp<long long>(floor_quotient(m, theta), params.c_neg,
                                                  params.c_pos);
        const auto s = static_cast<std::int32_t>(k);
        v[i] = m - theta * static_cast<float>(s);
        if (!std::isfinite(v[i])) {
            throw NumericError("membrane potential overflow at neuron " + std::to_string(i));
        }
        spikes[i] = s;
    }
    return spikes;
}

SpikeCounts aif_step(const AifParams& params, AifState& state, const Tensor& current)
{
    return aif_step(params, state, current.data());
}

void aif_reset(const AifParams& params, AifState& state)
{
    for (float& v : state.v.data()) {
        v = params.v_init;
    }
}

} // namespace pmsm
