#pragma once

#include <optional>
#include <string>
#include <utility>

#include "pmsm/tensor.hpp"

namespace pmsm {

/// Hyperparameters of the polarity quantized activation.
///   levels  L      positive lattice steps per threshold
///   theta          quantization threshold (learnable during training)
///   alpha, beta    signed clip bounds, -1 < alpha <= 0 < beta <= 1,
///                  with alpha*L and beta*L integers
struct QuantParams {
    int levels = 8;
    double theta = 8.0;
    double alpha = -0.25;
    double beta = 1.0;

    friend bool operator==(const QuantParams&, const QuantParams&) = default;
};

inline constexpr double kIntegralTolerance = 1e-9;

/// The activation itself requires -1 < alpha. The entropy analysis sweeps the
/// closed interval and also admits alpha == -1.
enum class AlphaRange { open, closed };

/// Name of the first violated constraint, or nullopt when `q` is valid.
std::optional<std::string> quant_params_violation(const QuantParams& q,
                                                  AlphaRange range = AlphaRange::open);
bool is_valid(const QuantParams& q, AlphaRange range = AlphaRange::open) noexcept;
/// Throws ValidationError naming the failed constraint.
void validate_quant_params(const QuantParams& q, AlphaRange range = AlphaRange::open);

/// Lattice spacing theta / L in the precision used by the forward pass.
/// The AIF threshold of a converted layer is this exact value.
float lattice_step(const QuantParams& q) noexcept;
int clip_neg(const QuantParams& q) noexcept; // alpha * L
int clip_pos(const QuantParams& q) noexcept; // beta * L

/// floor(numerator / denominator) of the two floats taken as exact reals.
/// Shared by the quantizer and the AIF neuron so both round identically.
long long floor_quotient(float numerator, float denominator) noexcept;

/// Lattice index of one input: clip(round_half_up(x / step), alpha L, beta L).
/// round_half_up(u) is evaluated as floor((x + step/2) / step).
int pqa_index(const QuantParams& q, float x) noexcept;
/// Lattice index times step.
float pqa_value(const QuantParams& q, float x) noexcept;

/// Elementwise polarity quantized activation.
Tensor pqa_forward(const QuantParams& q, const Tensor& x);
std::vector<int> pqa_indices(const QuantParams& q, const Tensor& x);

/// Traditional non-polarity quantizer: theta * clip(floor(x L / theta) / L, 0, 1).
/// alpha and beta of `q` are ignored.
Tensor qa_forward(const QuantParams& q, const Tensor& x);

struct PqaGradients {
    Tensor grad_x;
    double grad_theta = 0.0;
};

/// Straight-through estimator: rounding passes gradients through, the clip
/// gates them. Outside the clip range the output is alpha*theta or
/// beta*theta, so the threshold receives upstream * alpha (resp. beta).
PqaGradients pqa_backward_ste(const QuantParams& q, const Tensor& x, const Tensor& upstream);

} // namespace pmsm
