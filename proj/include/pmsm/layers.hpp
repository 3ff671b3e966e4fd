#pragma once

#include <cstddef>
#include <string>
#include <variant>

#include "pmsm/quant.hpp"
#include "pmsm/tensor.hpp"

namespace pmsm {

/// Fully connected layer, weight [out, in], bias [out].
struct Linear {
    Tensor weight;
    Tensor bias;

    std::size_t in_features() const { return weight.dim(1); }
    std::size_t out_features() const { return weight.dim(0); }
    friend bool operator==(const Linear&, const Linear&) = default;
};

/// 2-D cross-correlation, weight [out, in, kh, kw], bias [out].
struct Conv2d {
    Tensor weight;
    Tensor bias;
    std::size_t stride = 1;
    std::size_t padding = 0;

    std::size_t out_channels() const { return weight.dim(0); }
    friend bool operator==(const Conv2d&, const Conv2d&) = default;
};

/// Inference-mode batch normalization over the leading (channel) axis.
struct BatchNorm {
    Tensor gamma;
    Tensor beta;
    Tensor running_mean;
    Tensor running_var;
    float eps = 1e-5f;

    std::size_t channels() const { return gamma.size(); }
    friend bool operator==(const BatchNorm&, const BatchNorm&) = default;
};

struct Pqa {
    QuantParams quant;
    friend bool operator==(const Pqa&, const Pqa&) = default;
};

/// Non-overlapping by default (stride == window).
struct AvgPool2d {
    std::size_t window = 2;
    std::size_t stride = 2;
    friend bool operator==(const AvgPool2d&, const AvgPool2d&) = default;
};

struct Flatten {
    friend bool operator==(const Flatten&, const Flatten&) = default;
};

using LayerSpec = std::variant<Linear, Conv2d, BatchNorm, Pqa, AvgPool2d, Flatten>;

std::string layer_kind(const LayerSpec& layer);
bool is_weight_layer(const LayerSpec& layer) noexcept;

/// Throws ValidationError / DimensionError for inconsistent parameter shapes.
void validate_layer(const LayerSpec& layer);

Tensor linear_forward(const Tensor& weight, const Tensor& bias, const Tensor& x);
Tensor conv2d_forward(const Conv2d& conv, const Tensor& x);
Tensor batchnorm_forward(const BatchNorm& bn, const Tensor& x);
Tensor avgpool2d_forward(const AvgPool2d& pool, const Tensor& x);
Tensor flatten(const Tensor& x);

/// Dispatches to the forward pass of any layer kind (PQA included).
Tensor layer_forward(const LayerSpec& layer, const Tensor& x);

} // namespace pmsm
