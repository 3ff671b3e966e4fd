#pragma once

#include <cstdint>
#include <span>

#include "pmsm/model.hpp"
#include "pmsm/rng.hpp"

namespace pmsm {

/// Random quantizer settings with alpha L and beta L integral.
/// theta == L when `theta_equals_levels`, otherwise theta in [0.5 L, 2 L].
QuantParams random_quant_params(Rng& rng, int max_levels, bool theta_equals_levels);

/// He-uniform MLP: per hidden layer linear [+ BN] + PQA, then a linear head.
/// With `batchnorm` the BN affine parameters and running statistics are
/// random as well.
AnnModel random_mlp(std::size_t inputs, std::span<const std::size_t> hidden, std::size_t outputs,
                    std::span<const QuantParams> quant, bool batchnorm, Rng& rng);

/// conv3x3 + BN + PQA, avgpool, conv3x3 + BN + PQA, flatten, linear head,
/// on [channels, size, size] inputs.
AnnModel random_convnet(std::size_t channels, std::size_t size, std::size_t outputs,
                        const QuantParams& q1, const QuantParams& q2, Rng& rng);

Tensor random_normal_tensor(const Shape& shape, Rng& rng, double stddev = 1.0);

} // namespace pmsm
