#include "pmsm/layers.hpp"

#include <cmath>

#include "pmsm/error.hpp"

namespace pmsm {

std::string layer_kind(const LayerSpec& layer)
{
    struct Visitor {
        std::string operator()(const Linear&) const { return "linear"; }
        std::string operator()(const Conv2d&) const { return "conv2d"; }
        std::string operator()(const BatchNorm&) const { return "batchnorm"; }
        std::string operator()(const Pqa&) const { return "pqa"; }
        std::string operator()(const AvgPool2d&) const { return "avgpool2d"; }
        std::string operator()(const Flatten&) const { return "flatten"; }
    };
    return std::visit(Visitor{}, layer);
}

bool is_weight_layer(const LayerSpec& layer) noexcept
{
    return std::holds_alternative<Linear>(layer) || std::holds_alternative<Conv2d>(layer);
}

namespace {

void require_rank(const Tensor& t, std::size_t rank, const char* what)
{
    if (t.rank() != rank) {
        throw DimensionError(std::string(what) + " must have rank " + std::to_string(rank) +
                             ", got shape " + shape_to_string(t.shape()));
    }
}

void require_length(const Tensor& t, std::size_t n, const char* what)
{
    if (t.rank() != 1 || t.size() != n) {
        throw DimensionError(std::string(what) + " must have shape [" + std::to_string(n) +
                             "], got " + shape_to_string(t.shape()));
    }
}

} // namespace

void validate_layer(const LayerSpec& layer)
{
    if (const auto* lin = std::get_if<Linear>(&layer)) {
        require_rank(lin->weight, 2, "linear weight");
        require_length(lin->bias, lin->out_features(), "linear bias");
    }
    else if (const auto* conv = std::get_if<Conv2d>(&layer)) {
        require_rank(conv->weight, 4, "conv2d weight");
        require_length(conv->bias, conv->out_channels(), "conv2d bias");
        if (conv->stride < 1) {
            throw ValidationError("conv2d stride must be >= 1");
        }
    }
    else if (const auto* bn = std::get_if<BatchNorm>(&layer)) {
        const std::size_t c = bn->gamma.size();
        require_length(bn->gamma, c, "batchnorm gamma");
        require_length(bn->beta, c, "batchnorm beta");
        require_length(bn->running_mean, c, "batchnorm running_mean");
        require_length(bn->running_var, c, "batchnorm running_var");
        if (!(bn->eps >= 0.0f)) {
            throw ValidationError("batchnorm eps must be non-negative");
        }
        for (float v : bn->running_var.data()) {
            if (!(v >= 0.0f)) {
                throw ValidationError("batchnorm running_var must be non-negative");
            }
        }
    }
    else if (const auto* pqa = std::get_if<Pqa>(&layer)) {
        validate_quant_params(pqa->quant);
    }
    else if (const auto* pool = std::get_if<AvgPool2d>(&layer)) {
        if (pool->window < 1 || pool->stride < 1) {
            throw DimensionError("avgpool2d window and stride must be >= 1");
        }
    }
}

Tensor linear_forward(const Tensor& weight, const Tensor& bias, const Tensor& x)
{
    require_rank(weight, 2, "linear weight");
    const std::size_t out = weight.dim(0);
    const std::size_t in = weight.dim(1);
    require_length(bias, out, "linear bias");
    if (x.rank() != 1 || x.size() != in) {
        throw DimensionError("linear expects input [" + std::to_string(in) + "], got " +
                             shape_to_string(x.shape()));
    }
    Tensor y({out});
    const auto w = weight.data();
    const auto xs = x.data();
    for (std::size_t o = 0; o < out; ++o) {
        double acc = bias[o];
        const float* row = w.data() + o * in;
        for (std::size_t i = 0; i < in; ++i) {
            acc += static_cast<double>(row[i]) * xs[i];
        }
        y[o] = static_cast<float>(acc);
    }
    return y;
}

Tensor conv2d_forward(const Conv2d& conv, const Tensor& x)
{
    require_rank(conv.weight, 4, "conv2d weight");
    const std::size_t cout = conv.weight.dim(0);
    const std::size_t cin = conv.weight.dim(1);
    const std::size_t kh = conv.weight.dim(2);
    const std::size_t kw = conv.weight.dim(3);
    require_length(conv.bias, cout, "conv2d bias");
    require_rank(x, 3, "conv2d input");
    if (x.dim(0) != cin) {
        throw DimensionError("conv2d expects " + std::to_string(cin) + " input channels, got " +
                             shape_to_string(x.shape()));
    }
    if (conv.stride < 1) {
        throw DimensionError("conv2d stride must be >= 1");
    }
    const std::size_t h = x.dim(1);
    const std::size_t w = x.dim(2);
    const std::size_t pad = conv.padding;
    if (kh > h + 2 * pad || kw > w + 2 * pad) {
        throw DimensionError("conv2d kernel larger than padded input");
    }
    const std::size_t oh = (h + 2 * pad - kh) / conv.stride + 1;
    const std::size_t ow = (w + 2 * pad - kw) / conv.stride + 1;

    Tensor y({cout, oh, ow});
    const auto wd = conv.weight.data();
    const auto xd = x.data();
    for (std::size_t co = 0; co < cout; ++co) {
        for (std::size_t oy = 0; oy < oh; ++oy) {
            for (std::size_t ox = 0; ox < ow; ++ox) {
                double acc = conv.bias[co];
                for (std::size_t ci = 0; ci < cin; ++ci) {
                    for (std::size_t ky = 0; ky < kh; ++ky) {
                        const auto iy = static_cast<std::ptrdiff_t>(oy * conv.stride + ky) -
                                        static_cast<std::ptrdiff_t>(pad);
                        if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) {
                            continue;
                        }
                        for (std::size_t kx = 0; kx < kw; ++kx) {
                            const auto ix = static_cast<std::ptrdiff_t>(ox * conv.stride + kx) -
                                            static_cast<std::ptrdiff_t>(pad);
                            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w)) {
                                continue;
                            }
                            const float wv = wd[((co * cin + ci) * kh + ky) * kw + kx];
                            const float xv = xd[(ci * h + static_cast<std::size_t>(iy)) * w +
                                                static_cast<std::size_t>(ix)];
                            acc += static_cast<double>(wv) * xv;
                        }
                    }
                }
                y[(co * oh + oy) * ow + ox] = static_cast<float>(acc);
            }
        }
    }
    return y;
}

Tensor batchnorm_forward(const BatchNorm& bn, const Tensor& x)
{
    const std::size_t c = bn.channels();
    if (x.rank() == 0 || x.dim(0) != c) {
        throw DimensionError("batchnorm expects " + std::to_string(c) + " channels, got " +
                             shape_to_string(x.shape()));
    }
    const std::size_t per_channel = x.size() / c;
    Tensor y(x.shape());
    for (std::size_t ch = 0; ch < c; ++ch) {
        const double denom = static_cast<double>(bn.running_var[ch]) + bn.eps;
        if (!(denom > 0.0)) {
            throw NumericError("batchnorm var + eps must be positive (channel " +
                               std::to_string(ch) + ")");
        }
        const double scale = bn.gamma[ch] / std::sqrt(denom);
        for (std::size_t i = 0; i < per_channel; ++i) {
            const std::size_t k = ch * per_channel + i;
            y[k] = static_cast<float>(scale * (x[k] - static_cast<double>(bn.running_mean[ch])) +
                                      bn.beta[ch]);
        }
    }
    return y;
}

Tensor avgpool2d_forward(const AvgPool2d& pool, const Tensor& x)
{
    require_rank(x, 3, "avgpool2d input");
    if (pool.window < 1 || pool.stride < 1) {
        throw DimensionError("avgpool2d window is empty");
    }
    const std::size_t c = x.dim(0);
    const std::size_t h = x.dim(1);
    const std::size_t w = x.dim(2);
    if (pool.window > h || pool.window > w || (h - pool.window) % pool.stride != 0 ||
        (w - pool.window) % pool.stride != 0) {
        throw DimensionError("avgpool2d window " + std::to_string(pool.window) + "/stride " +
                             std::to_string(pool.stride) + " does not tile input " +
                             shape_to_string(x.shape()));
    }
    const std::size_t oh = (h - pool.window) / pool.stride + 1;
    const std::size_t ow = (w - pool.window) / pool.stride + 1;
    const double inv = 1.0 / static_cast<double>(pool.window * pool.window);
    Tensor y({c, oh, ow});
    for (std::size_t ch = 0; ch < c; ++ch) {
        for (std::size_t oy = 0; oy < oh; ++oy) {
            for (std::size_t ox = 0; ox < ow; ++ox) {
                double acc = 0.0;
                for (std::size_t ky = 0; ky < pool.window; ++ky) {
                    for (std::size_t kx = 0; kx < pool.window; ++kx) {
                        acc += x[(ch * h + oy * pool.stride + ky) * w + ox * pool.stride + kx];
                    }
                }
                y[(ch * oh + oy) * ow + ox] = static_cast<float>(acc * inv);
            }
        }
    }
    return y;
}

Tensor flatten(const Tensor& x)
{
    return x.reshaped({x.size()});
}

Tensor layer_forward(const LayerSpec& layer, const Tensor& x)
{
    struct Visitor {
        const Tensor& x;
        Tensor operator()(const Linear& l) const { return linear_forward(l.weight, l.bias, x); }
        Tensor operator()(const Conv2d& c) const { return conv2d_forward(c, x); }
        Tensor operator()(const BatchNorm& b) const { return batchnorm_forward(b, x); }
        Tensor operator()(const Pqa& p) const { return pqa_forward(p.quant, x); }
        Tensor operator()(const AvgPool2d& p) const { return avgpool2d_forward(p, x); }
        Tensor operator()(const Flatten&) const { return flatten(x); }
    };
    return std::visit(Visitor{x}, layer);
}

} // namespace pmsm
