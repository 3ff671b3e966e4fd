#include "pmsm/model.hpp"

#include "pmsm/error.hpp"

namespace pmsm {

std::vector<std::size_t> SnnModel::spiking_layers() const
{
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        if (layers[i].aif) {
            idx.push_back(i);
        }
    }
    return idx;
}

std::string to_string(SnnLayerKind kind)
{
    switch (kind) {
    case SnnLayerKind::linear: return "linear";
    case SnnLayerKind::conv2d: return "conv2d";
    case SnnLayerKind::avgpool2d: return "avgpool2d";
    case SnnLayerKind::flatten: return "flatten";
    }
    return "unknown";
}

SnnLayerKind snn_layer_kind_from_string(const std::string& name)
{
    if (name == "linear") return SnnLayerKind::linear;
    if (name == "conv2d") return SnnLayerKind::conv2d;
    if (name == "avgpool2d") return SnnLayerKind::avgpool2d;
    if (name == "flatten") return SnnLayerKind::flatten;
    throw ValidationError("unknown SNN layer kind '" + name + "'");
}

void validate_ann(const AnnModel& model)
{
    if (model.layers.empty()) {
        throw StructureError("ANN has no layers");
    }
    if (!std::holds_alternative<Linear>(model.layers.back())) {
        throw StructureError("the final ANN layer must be a linear classifier head, got " +
                             layer_kind(model.layers.back()));
    }
    constexpr std::size_t none = static_cast<std::size_t>(-1);
    std::size_t awaiting_pqa = none;
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
        const auto& layer = model.layers[i];
        validate_layer(layer);
        const std::string where = "layer " + std::to_string(i) + " (" + layer_kind(layer) + ")";
        if (is_weight_layer(layer)) {
            if (awaiting_pqa != none) {
                throw StructureError("weight layer " + std::to_string(awaiting_pqa) +
                                     " is not followed by a PQA activation");
            }
            if (i + 1 < model.layers.size()) {
                awaiting_pqa = i;
            }
        }
        else if (std::holds_alternative<BatchNorm>(layer)) {
            if (i == 0 || !is_weight_layer(model.layers[i - 1]) || awaiting_pqa == none) {
                throw StructureError(where + " is not preceded by a linear or conv2d layer");
            }
        }
        else if (std::holds_alternative<Pqa>(layer)) {
            if (awaiting_pqa == none) {
                throw StructureError(where + " has no preceding weight layer");
            }
            awaiting_pqa = none;
        }
        else if (awaiting_pqa != none) {
            throw StructureError(where + " sits between a weight layer and its PQA");
        }
    }
    if (!model.input_shape.empty()) {
        ann_forward(model, Tensor(model.input_shape));
    }
}

void validate_snn(const SnnModel& model)
{
    if (model.layers.empty()) {
        throw StructureError("SNN has no layers");
    }
    const auto& head = model.layers.back();
    if (head.kind != SnnLayerKind::linear || head.aif) {
        throw StructureError("the final SNN layer must be a non-spiking linear head");
    }
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
        const auto& layer = model.layers[i];
        if (layer.is_weight_layer()) {
            if (i + 1 < model.layers.size() && !layer.aif) {
                throw StructureError("SNN weight layer " + std::to_string(i) +
                                     " has no AIF parameters");
            }
            if (layer.aif) {
                validate_aif_params(*layer.aif);
            }
        }
        else if (layer.aif) {
            throw StructureError("SNN layer " + std::to_string(i) + " (" + to_string(layer.kind) +
                                 ") cannot carry AIF parameters");
        }
    }
}

namespace {

template <typename OnPqa>
Tensor forward_impl(const AnnModel& model, const Tensor& input, OnPqa&& on_pqa)
{
    if (!model.input_shape.empty() && input.shape() != model.input_shape) {
        throw DimensionError("ANN expects input " + shape_to_string(model.input_shape) + ", got " +
                             shape_to_string(input.shape()));
    }
    Tensor x = input;
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
        const auto& layer = model.layers[i];
        if (const auto* pqa = std::get_if<Pqa>(&layer)) {
            Tensor y = pqa_forward(pqa->quant, x);
            on_pqa(i, pqa->quant, x, y);
            x = std::move(y);
        }
        else {
            x = layer_forward(layer, x);
        }
    }
    return x;
}

} // namespace

Tensor ann_forward(const AnnModel& model, const Tensor& input)
{
    return forward_impl(model, input, [](auto&&...) {});
}

AnnTrace ann_forward_trace(const AnnModel& model, const Tensor& input)
{
    AnnTrace trace;
    trace.head_output = forward_impl(
        model, input,
        [&](std::size_t i, const QuantParams& q, const Tensor& z, const Tensor& y) {
            trace.activations.push_back(PqaTrace{i, q, z, pqa_indices(q, z), y});
        });
    return trace;
}

} // namespace pmsm
