#include "pmsm/random_models.hpp"

#include <cmath>

#include "pmsm/error.hpp"

namespace pmsm {

QuantParams random_quant_params(Rng& rng, int max_levels, bool theta_equals_levels)
{
    QuantParams q;
    q.levels = rng.integer(1, max_levels);
    const int kneg = rng.integer(-(q.levels - 1), 0);
    const int kpos = rng.integer(1, q.levels);
    q.alpha = static_cast<double>(kneg) / q.levels;
    q.beta = static_cast<double>(kpos) / q.levels;
    q.theta = theta_equals_levels ? static_cast<double>(q.levels)
                                  : rng.uniform(0.5 * q.levels, 2.0 * q.levels);
    return q;
}

namespace {

Tensor uniform_tensor(const Shape& shape, Rng& rng, double bound)
{
    Tensor t(shape);
    for (float& v : t.data()) {
        v = static_cast<float>(rng.uniform(-bound, bound));
    }
    return t;
}

BatchNorm random_batchnorm(std::size_t channels, Rng& rng)
{
    BatchNorm bn{Tensor({channels}), Tensor({channels}), Tensor({channels}), Tensor({channels}),
                 1e-5f};
    for (std::size_t c = 0; c < channels; ++c) {
        bn.gamma[c] = static_cast<float>(rng.uniform(0.5, 2.0));
        bn.beta[c] = static_cast<float>(rng.uniform(-0.5, 0.5));
        bn.running_mean[c] = static_cast<float>(rng.uniform(-0.5, 0.5));
        bn.running_var[c] = static_cast<float>(rng.uniform(0.5, 2.0));
    }
    return bn;
}

} // namespace

AnnModel random_mlp(std::size_t inputs, std::span<const std::size_t> hidden, std::size_t outputs,
                    std::span<const QuantParams> quant, bool batchnorm, Rng& rng)
{
    if (quant.size() != hidden.size()) {
        throw ValidationError("random_mlp needs one QuantParams per hidden layer");
    }
    AnnModel model;
    model.input_shape = {inputs};
    std::size_t fan_in = inputs;
    for (std::size_t l = 0; l < hidden.size(); ++l) {
        const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
        model.layers.emplace_back(Linear{uniform_tensor({hidden[l], fan_in}, rng, bound),
                                         uniform_tensor({hidden[l]}, rng, 0.1)});
        if (batchnorm) {
            model.layers.emplace_back(random_batchnorm(hidden[l], rng));
        }
        model.layers.emplace_back(Pqa{quant[l]});
        fan_in = hidden[l];
    }
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    model.layers.emplace_back(
        Linear{uniform_tensor({outputs, fan_in}, rng, bound), uniform_tensor({outputs}, rng, 0.1)});
    return model;
}

AnnModel random_convnet(std::size_t channels, std::size_t size, std::size_t outputs,
                        const QuantParams& q1, const QuantParams& q2, Rng& rng)
{
    if (size < 2 || size % 2 != 0) {
        throw ValidationError("random_convnet needs an even spatial size");
    }
    constexpr std::size_t kFeatures = 4;
    AnnModel model;
    model.input_shape = {channels, size, size};
    const double b1 = std::sqrt(6.0 / static_cast<double>(channels * 9));
    model.layers.emplace_back(Conv2d{uniform_tensor({kFeatures, channels, 3, 3}, rng, b1),
                                     uniform_tensor({kFeatures}, rng, 0.1), 1, 1});
    model.layers.emplace_back(random_batchnorm(kFeatures, rng));
    model.layers.emplace_back(Pqa{q1});
    model.layers.emplace_back(AvgPool2d{2, 2});
    const double b2 = std::sqrt(6.0 / static_cast<double>(kFeatures * 9));
    model.layers.emplace_back(Conv2d{uniform_tensor({kFeatures, kFeatures, 3, 3}, rng, b2),
                                     uniform_tensor({kFeatures}, rng, 0.1), 1, 1});
    model.layers.emplace_back(random_batchnorm(kFeatures, rng));
    model.layers.emplace_back(Pqa{q2});
    model.layers.emplace_back(Flatten{});
    const std::size_t flat = kFeatures * (size / 2) * (size / 2);
    const double b3 = std::sqrt(6.0 / static_cast<double>(flat));
    model.layers.emplace_back(
        Linear{uniform_tensor({outputs, flat}, rng, b3), uniform_tensor({outputs}, rng, 0.1)});
    return model;
}

Tensor random_normal_tensor(const Shape& shape, Rng& rng, double stddev)
{
    Tensor t(shape);
    for (float& v : t.data()) {
        v = static_cast<float>(rng.normal(0.0, stddev));
    }
    return t;
}

} // namespace pmsm
