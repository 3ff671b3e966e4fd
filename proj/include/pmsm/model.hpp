#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pmsm/aif.hpp"
#include "pmsm/layers.hpp"

namespace pmsm {

/// Quantization-aware ANN: weight layers, BN, PQA, pooling, flatten.
/// The last layer is a linear classifier head with no trailing PQA.
struct AnnModel {
    Shape input_shape;
    std::vector<LayerSpec> layers;

    friend bool operator==(const AnnModel&, const AnnModel&) = default;
};

enum class SnnLayerKind { linear, conv2d, avgpool2d, flatten };

/// Weight layers carry AIF parameters unless they are the classifier head.
/// Pooling and flatten stages pass spike tensors through unchanged in kind.
struct SnnLayer {
    SnnLayerKind kind = SnnLayerKind::linear;
    Tensor weight;
    Tensor bias;
    std::size_t stride = 1;
    std::size_t padding = 0;
    std::size_t window = 2;
    std::optional<AifParams> aif;

    bool is_weight_layer() const noexcept {
        return kind == SnnLayerKind::linear || kind == SnnLayerKind::conv2d;
    }
    friend bool operator==(const SnnLayer&, const SnnLayer&) = default;
};

struct SnnModel {
    Shape input_shape;
    std::vector<SnnLayer> layers;

    /// Indices into `layers` of the spiking (AIF) layers, in network order.
    std::vector<std::size_t> spiking_layers() const;
    friend bool operator==(const SnnModel&, const SnnModel&) = default;
};

std::string to_string(SnnLayerKind kind);
SnnLayerKind snn_layer_kind_from_string(const std::string& name);

/// Checks layer parameters and the head/PQA structure.
void validate_ann(const AnnModel& model);
void validate_snn(const SnnModel& model);

/// Per-PQA record of one ANN forward pass.
struct PqaTrace {
    std::size_t layer_index = 0; ///< index of the PQA layer in the model
    QuantParams quant;
    Tensor pre_activation;       ///< weighted input z (after BN when present)
    std::vector<int> indices;    ///< lattice indices
    Tensor output;               ///< y = step * index
};

struct AnnTrace {
    std::vector<PqaTrace> activations;
    Tensor head_output;
};

Tensor ann_forward(const AnnModel& model, const Tensor& input);
AnnTrace ann_forward_trace(const AnnModel& model, const Tensor& input);

} // namespace pmsm
