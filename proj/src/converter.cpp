#include "pmsm/converter.hpp"

#include <cmath>

#include "pmsm/error.hpp"
#include "pmsm/runtime.hpp"

namespace pmsm {

namespace {

void fold_into(Tensor& weight, Tensor& bias, const BatchNorm& bn)
{
    const std::size_t channels = weight.dim(0);
    if (bn.channels() != channels) {
        throw DimensionError("batchnorm has " + std::to_string(bn.channels()) +
                             " channels, preceding layer has " + std::to_string(channels));
    }
    const std::size_t per_row = weight.size() / channels;
    for (std::size_t c = 0; c < channels; ++c) {
        const double denom = static_cast<double>(bn.running_var[c]) + bn.eps;
        if (!(denom > 0.0)) {
            throw NumericError("batchnorm var + eps must be positive (channel " +
                               std::to_string(c) + ")");
        }
        const double scale = bn.gamma[c] / std::sqrt(denom);
        for (std::size_t k = 0; k < per_row; ++k) {
            auto& w = weight[c * per_row + k];
            w = static_cast<float>(scale * w);
        }
        bias[c] = static_cast<float>(scale * (static_cast<double>(bias[c]) - bn.running_mean[c]) +
                                     bn.beta[c]);
    }
}

} // namespace

AnnModel fold_batchnorm(const AnnModel& model)
{
    AnnModel folded;
    folded.input_shape = model.input_shape;
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
        const auto* bn = std::get_if<BatchNorm>(&model.layers[i]);
        if (!bn) {
            folded.layers.push_back(model.layers[i]);
            continue;
        }
        if (i == 0 || folded.layers.empty() || !is_weight_layer(folded.layers.back()) ||
            !is_weight_layer(model.layers[i - 1])) {
            throw StructureError("batchnorm at layer " + std::to_string(i) +
                                 " is not preceded by a linear or conv2d layer");
        }
        auto& prev = folded.layers.back();
        if (auto* lin = std::get_if<Linear>(&prev)) {
            fold_into(lin->weight, lin->bias, *bn);
        }
        else {
            auto& conv = std::get<Conv2d>(prev);
            fold_into(conv.weight, conv.bias, *bn);
        }
    }
    return folded;
}

AifParams transfer_pqa_to_aif(const QuantParams& q)
{
    validate_quant_params(q);
    AifParams p;
    p.theta_snn = lattice_step(q);
    p.c_neg = clip_neg(q);
    p.c_pos = clip_pos(q);
    p.v_init = 0.5f * p.theta_snn;
    return p;
}

SnnModel convert_model(const AnnModel& model)
{
    validate_ann(model);
    const AnnModel folded = fold_batchnorm(model);

    SnnModel snn;
    snn.input_shape = folded.input_shape;
    std::optional<float> upstream_threshold;
    auto scaled = [&](const Tensor& w) {
        Tensor out = w;
        if (upstream_threshold) {
            for (float& v : out.data()) {
                v *= *upstream_threshold;
            }
        }
        return out;
    };

    for (const auto& layer : folded.layers) {
        if (const auto* lin = std::get_if<Linear>(&layer)) {
            SnnLayer l;
            l.kind = SnnLayerKind::linear;
            l.weight = scaled(lin->weight);
            l.bias = lin->bias;
            snn.layers.push_back(std::move(l));
        }
        else if (const auto* conv = std::get_if<Conv2d>(&layer)) {
            SnnLayer l;
            l.kind = SnnLayerKind::conv2d;
            l.weight = scaled(conv->weight);
            l.bias = conv->bias;
            l.stride = conv->stride;
            l.padding = conv->padding;
            snn.layers.push_back(std::move(l));
        }
        else if (const auto* pqa = std::get_if<Pqa>(&layer)) {
            if (snn.layers.empty() || !snn.layers.back().is_weight_layer()) {
                throw StructureError("PQA without a preceding weight layer");
            }
            const AifParams aif = transfer_pqa_to_aif(pqa->quant);
            snn.layers.back().aif = aif;
            upstream_threshold = aif.theta_snn;
        }
        else if (const auto* pool = std::get_if<AvgPool2d>(&layer)) {
            SnnLayer l;
            l.kind = SnnLayerKind::avgpool2d;
            l.window = pool->window;
            l.stride = pool->stride;
            snn.layers.push_back(std::move(l));
        }
        else if (std::holds_alternative<Flatten>(layer)) {
            SnnLayer l;
            l.kind = SnnLayerKind::flatten;
            snn.layers.push_back(std::move(l));
        }
        else {
            throw StructureError("unexpected " + layer_kind(layer) + " after folding");
        }
    }
    validate_snn(snn);
    return snn;
}

EquivalenceReport verify_equivalence(const AnnModel& ann, const SnnModel& snn,
                                     std::span<const Tensor> inputs)
{
    EquivalenceReport rep;
    std::size_t agree = 0;
    for (const Tensor& x : inputs) {
        const AnnTrace trace = ann_forward_trace(ann, x);
        const RunReport run = run_snn(snn, x, 1);
        if (trace.activations.size() != run.spikes.size()) {
            throw StructureError("ANN has " + std::to_string(trace.activations.size()) +
                                 " PQA layers, SNN has " + std::to_string(run.spikes.size()) +
                                 " spiking layers");
        }
        if (trace.head_output.size() != run.head_output.size()) {
            throw DimensionError("ANN and SNN head sizes differ");
        }
        for (std::size_t i = 0; i < trace.head_output.size(); ++i) {
            rep.max_abs_diff = std::max(
                rep.max_abs_diff, std::abs(static_cast<double>(trace.head_output[i]) -
                                           run.head_output[i]));
        }
        for (std::size_t l = 0; l < run.spikes.size(); ++l) {
            const auto& idx = trace.activations[l].indices;
            const auto& s = run.spikes[l][0];
            if (idx.size() != s.size()) {
                throw DimensionError("layer " + std::to_string(l) + " neuron counts differ");
            }
            for (std::size_t n = 0; n < s.size(); ++n) {
                rep.index_mismatches += (idx[n] != s[n]) ? 1 : 0;
            }
            rep.neurons_checked += s.size();
        }
        agree += argmax(trace.head_output.data()) == decode_prediction(run) ? 1 : 0;
        ++rep.samples;
    }
    rep.argmax_agreement = rep.samples ? static_cast<double>(agree) / rep.samples : 1.0;
    return rep;
}

} // namespace pmsm
