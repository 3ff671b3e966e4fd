#include "pmsm/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "pmsm/error.hpp"
#include "pmsm/rng.hpp"
#include "pmsm/runtime.hpp"

namespace pmsm {

std::string to_string(DatasetKind kind)
{
    return kind == DatasetKind::gaussians ? "gaussians" : "spiral";
}

DatasetKind dataset_kind_from_string(const std::string& name)
{
    if (name == "gaussians") return DatasetKind::gaussians;
    if (name == "spiral") return DatasetKind::spiral;
    throw ValidationError("unknown dataset kind '" + name + "' (expected gaussians|spiral)");
}

Tensor SyntheticDataset::sample(std::size_t i) const
{
    const std::size_t d = points.dim(1);
    std::vector<float> row(points.data().begin() + static_cast<std::ptrdiff_t>(i * d),
                           points.data().begin() + static_cast<std::ptrdiff_t>((i + 1) * d));
    return Tensor({d}, std::move(row));
}

SyntheticDataset gen_synthetic_dataset(DatasetKind kind, std::size_t n, std::uint64_t seed)
{
    SyntheticDataset data;
    data.kind = kind;
    data.seed = seed;
    data.num_classes = 2;
    if (n < static_cast<std::size_t>(2 * data.num_classes)) {
        throw ValidationError("dataset needs at least " + std::to_string(2 * data.num_classes) +
                              " samples");
    }
    Rng rng(seed);
    std::vector<float> pts(2 * n);
    data.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const int label = static_cast<int>(i % 2);
        data.labels[i] = label;
        double x = 0.0;
        double y = 0.0;
        if (kind == DatasetKind::gaussians) {
            x = (label == 0 ? -2.0 : 2.0) + rng.normal();
            y = rng.normal();
        }
        else {
            const double t = rng.uniform(0.05, 1.0);
            const double angle = 3.0 * std::numbers::pi * t + label * std::numbers::pi;
            const double r = 2.0 * t;
            x = r * std::cos(angle) + rng.normal(0.0, 0.05);
            y = r * std::sin(angle) + rng.normal(0.0, 0.05);
        }
        pts[2 * i] = static_cast<float>(x);
        pts[2 * i + 1] = static_cast<float>(y);
    }
    data.points = Tensor({n, 2}, std::move(pts));
    return data;
}

namespace {

std::vector<std::size_t> permutation(std::size_t n, Rng& rng)
{
    std::vector<std::size_t> p(n);
    std::iota(p.begin(), p.end(), std::size_t{0});
    for (std::size_t i = n; i > 1; --i) {
        std::swap(p[i - 1], p[rng.below(i)]);
    }
    return p;
}

SyntheticDataset subset(const SyntheticDataset& data, std::span<const std::size_t> idx)
{
    SyntheticDataset out;
    out.kind = data.kind;
    out.seed = data.seed;
    out.num_classes = data.num_classes;
    const std::size_t d = data.points.dim(1);
    std::vector<float> pts;
    pts.reserve(idx.size() * d);
    for (auto i : idx) {
        for (std::size_t k = 0; k < d; ++k) {
            pts.push_back(data.points[i * d + k]);
        }
        out.labels.push_back(data.labels[i]);
    }
    out.points = Tensor({idx.size(), d}, std::move(pts));
    return out;
}

} // namespace

std::pair<SyntheticDataset, SyntheticDataset> train_test_split(const SyntheticDataset& data,
                                                               double train_fraction,
                                                               std::uint64_t seed)
{
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw ValidationError("train fraction must lie in (0, 1)");
    }
    Rng rng(seed);
    const auto perm = permutation(data.size(), rng);
    const auto n_train = static_cast<std::size_t>(std::lround(train_fraction * data.size()));
    if (n_train == 0 || n_train == data.size()) {
        throw ValidationError("split leaves an empty part");
    }
    const std::span<const std::size_t> all(perm);
    return {subset(data, all.first(n_train)), subset(data, all.subspan(n_train))};
}

void validate_train_config(const TrainConfig& cfg)
{
    if (cfg.epochs < 1) {
        throw ValidationError("epochs must be >= 1");
    }
    if (!(cfg.learning_rate > 0.0)) {
        throw ValidationError("learning rate must be positive");
    }
    if (!(cfg.momentum >= 0.0 && cfg.momentum < 1.0)) {
        throw ValidationError("momentum must lie in [0, 1)");
    }
    if (cfg.batch_size < 2) {
        throw ValidationError("batch size must be >= 2");
    }
    if (cfg.hidden.empty()) {
        throw ValidationError("at least one hidden layer is required");
    }
    for (auto h : cfg.hidden) {
        if (h == 0) {
            throw ValidationError("hidden widths must be positive");
        }
    }
    validate_quant_params(cfg.quant);
}

namespace {

using Matrix = std::vector<double>; // row-major, dimensions tracked by the caller

/// Parameters and optimizer state of one trainable tensor.
struct Param {
    std::vector<double> value;
    std::vector<double> grad;
    std::vector<double> velocity;

    explicit Param(std::size_t n = 0) : value(n, 0.0), grad(n, 0.0), velocity(n, 0.0) {}
};

struct HiddenLayer {
    std::size_t in = 0;
    std::size_t out = 0;
    Param weight;
    Param bias;
    Param gamma;
    Param beta;
    std::vector<double> running_mean;
    std::vector<double> running_var;
    QuantParams quant;
    double theta_grad = 0.0;
    double theta_velocity = 0.0;

    // forward caches
    Matrix input;
    Matrix xhat;
    std::vector<double> inv_std;
    Matrix z;
};

struct Network {
    std::vector<HiddenLayer> hidden;
    std::size_t head_in = 0;
    std::size_t classes = 0;
    Param head_weight;
    Param head_bias;
    Matrix head_input;
};

void step(Param& p, double lr, double momentum)
{
    for (std::size_t i = 0; i < p.value.size(); ++i) {
        p.velocity[i] = momentum * p.velocity[i] + p.grad[i];
        p.value[i] -= lr * p.velocity[i];
        p.grad[i] = 0.0;
    }
}

Param he_uniform(std::size_t out, std::size_t in, Rng& rng)
{
    Param p(out * in);
    const double bound = std::sqrt(6.0 / static_cast<double>(in));
    for (auto& v : p.value) {
        v = rng.uniform(-bound, bound);
    }
    return p;
}

Matrix affine(const Matrix& x, std::size_t rows, std::size_t in, const Param& w, const Param& b,
              std::size_t out)
{
    Matrix y(rows * out);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t o = 0; o < out; ++o) {
            double acc = b.value[o];
            for (std::size_t i = 0; i < in; ++i) {
                acc += w.value[o * in + i] * x[r * in + i];
            }
            y[r * out + o] = acc;
        }
    }
    return y;
}

} // namespace

TrainResult train_ann(const TrainConfig& cfg, const SyntheticDataset& data)
{
    validate_train_config(cfg);
    if (data.size() < cfg.batch_size) {
        throw ValidationError("dataset smaller than one batch");
    }
    Rng rng(cfg.seed);
    const std::size_t dims = data.points.dim(1);

    Network net;
    std::size_t fan_in = dims;
    for (auto width : cfg.hidden) {
        HiddenLayer h;
        h.in = fan_in;
        h.out = width;
        h.weight = he_uniform(width, fan_in, rng);
        h.bias = Param(width);
        h.gamma = Param(width);
        std::fill(h.gamma.value.begin(), h.gamma.value.end(), 1.0);
        h.beta = Param(width);
        h.running_mean.assign(width, 0.0);
        h.running_var.assign(width, 1.0);
        h.quant = cfg.quant;
        net.hidden.push_back(std::move(h));
        fan_in = width;
    }
    net.head_in = fan_in;
    net.classes = static_cast<std::size_t>(data.num_classes);
    net.head_weight = he_uniform(net.classes, fan_in, rng);
    net.head_bias = Param(net.classes);

    TrainResult result;
    const double eps = cfg.bn_eps;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const auto order = permutation(data.size(), rng);
        double epoch_loss = 0.0;
        std::size_t seen = 0;
        for (std::size_t start = 0; start + 1 < order.size(); start += cfg.batch_size) {
            const std::size_t rows = std::min(cfg.batch_size, order.size() - start);
            if (rows < 2) {
                break;
            }
            Matrix a(rows * dims);
            for (std::size_t r = 0; r < rows; ++r) {
                for (std::size_t k = 0; k < dims; ++k) {
                    a[r * dims + k] = data.points[order[start + r] * dims + k];
                }
            }

            for (auto& h : net.hidden) {
                h.input = a;
                Matrix u = affine(a, rows, h.in, h.weight, h.bias, h.out);
                h.z.assign(rows * h.out, 0.0);
                h.xhat.assign(rows * h.out, 0.0);
                h.inv_std.assign(h.out, 1.0);
                for (std::size_t c = 0; c < h.out; ++c) {
                    if (!cfg.batchnorm) {
                        for (std::size_t r = 0; r < rows; ++r) {
                            h.z[r * h.out + c] = u[r * h.out + c];
                        }
                        continue;
                    }
                    double mean = 0.0;
                    for (std::size_t r = 0; r < rows; ++r) {
                        mean += u[r * h.out + c];
                    }
                    mean /= static_cast<double>(rows);
                    double var = 0.0;
                    for (std::size_t r = 0; r < rows; ++r) {
                        const double d = u[r * h.out + c] - mean;
                        var += d * d;
                    }
                    var /= static_cast<double>(rows);
                    h.inv_std[c] = 1.0 / std::sqrt(var + eps);
                    for (std::size_t r = 0; r < rows; ++r) {
                        const double xh = (u[r * h.out + c] - mean) * h.inv_std[c];
                        h.xhat[r * h.out + c] = xh;
                        h.z[r * h.out + c] = h.gamma.value[c] * xh + h.beta.value[c];
                    }
                    const double unbiased = var * static_cast<double>(rows) / (rows - 1.0);
                    h.running_mean[c] =
                        (1.0 - cfg.bn_momentum) * h.running_mean[c] + cfg.bn_momentum * mean;
                    h.running_var[c] =
                        (1.0 - cfg.bn_momentum) * h.running_var[c] + cfg.bn_momentum * unbiased;
                }
                a.assign(rows * h.out, 0.0);
                for (std::size_t k = 0; k < a.size(); ++k) {
                    a[k] = pqa_value(h.quant, static_cast<float>(h.z[k]));
                }
            }

            net.head_input = a;
            Matrix logits = affine(a, rows, net.head_in, net.head_weight, net.head_bias, net.classes);
            Matrix grad(rows * net.classes);
            for (std::size_t r = 0; r < rows; ++r) {
                const double* lr = &logits[r * net.classes];
                const double mx = *std::max_element(lr, lr + net.classes);
                double denom = 0.0;
                for (std::size_t c = 0; c < net.classes; ++c) {
                    denom += std::exp(lr[c] - mx);
                }
                const int label = data.labels[order[start + r]];
                epoch_loss += -(lr[label] - mx - std::log(denom));
                for (std::size_t c = 0; c < net.classes; ++c) {
                    const double p = std::exp(lr[c] - mx) / denom;
                    grad[r * net.classes + c] =
                        (p - (static_cast<int>(c) == label ? 1.0 : 0.0)) / static_cast<double>(rows);
                }
            }
            seen += rows;
            if (!std::isfinite(epoch_loss)) {
                throw TrainingError("loss diverged at epoch " + std::to_string(epoch + 1));
            }

            // head
            Matrix upstream(rows * net.head_in, 0.0);
            for (std::size_t r = 0; r < rows; ++r) {
                for (std::size_t c = 0; c < net.classes; ++c) {
                    const double g = grad[r * net.classes + c];
                    net.head_bias.grad[c] += g;
                    for (std::size_t i = 0; i < net.head_in; ++i) {
                        net.head_weight.grad[c * net.head_in + i] += g * net.head_input[r * net.head_in + i];
                        upstream[r * net.head_in + i] += g * net.head_weight.value[c * net.head_in + i];
                    }
                }
            }

            for (auto it = net.hidden.rbegin(); it != net.hidden.rend(); ++it) {
                auto& h = *it;
                const double lo = h.quant.alpha * h.quant.theta;
                const double hi = h.quant.beta * h.quant.theta;
                Matrix dz(rows * h.out, 0.0);
                for (std::size_t k = 0; k < dz.size(); ++k) {
                    const double z = h.z[k];
                    if (z < lo) {
                        h.theta_grad += upstream[k] * h.quant.alpha;
                    }
                    else if (z > hi) {
                        h.theta_grad += upstream[k] * h.quant.beta;
                    }
                    else {
                        dz[k] = upstream[k];
                    }
                }
                Matrix du(rows * h.out, 0.0);
                for (std::size_t c = 0; c < h.out; ++c) {
                    if (!cfg.batchnorm) {
                        for (std::size_t r = 0; r < rows; ++r) {
                            du[r * h.out + c] = dz[r * h.out + c];
                        }
                        continue;
                    }
                    double sum_dz = 0.0;
                    double sum_dz_xhat = 0.0;
                    for (std::size_t r = 0; r < rows; ++r) {
                        sum_dz += dz[r * h.out + c];
                        sum_dz_xhat += dz[r * h.out + c] * h.xhat[r * h.out + c];
                    }
                    h.gamma.grad[c] += sum_dz_xhat;
                    h.beta.grad[c] += sum_dz;
                    const double scale = h.gamma.value[c] * h.inv_std[c] / static_cast<double>(rows);
                    for (std::size_t r = 0; r < rows; ++r) {
                        du[r * h.out + c] =
                            scale * (static_cast<double>(rows) * dz[r * h.out + c] - sum_dz -
                                     h.xhat[r * h.out + c] * sum_dz_xhat);
                    }
                }
                Matrix next(rows * h.in, 0.0);
                for (std::size_t r = 0; r < rows; ++r) {
                    for (std::size_t o = 0; o < h.out; ++o) {
                        const double g = du[r * h.out + o];
                        h.bias.grad[o] += g;
                        for (std::size_t i = 0; i < h.in; ++i) {
                            h.weight.grad[o * h.in + i] += g * h.input[r * h.in + i];
                            next[r * h.in + i] += g * h.weight.value[o * h.in + i];
                        }
                    }
                }
                upstream = std::move(next);
            }

            for (auto& h : net.hidden) {
                step(h.weight, cfg.learning_rate, cfg.momentum);
                step(h.bias, cfg.learning_rate, cfg.momentum);
                if (cfg.batchnorm) {
                    step(h.gamma, cfg.learning_rate, cfg.momentum);
                    step(h.beta, cfg.learning_rate, cfg.momentum);
                }
                h.theta_velocity = cfg.momentum * h.theta_velocity + h.theta_grad;
                h.quant.theta = std::max(1e-3, h.quant.theta - cfg.learning_rate * h.theta_velocity);
                h.theta_grad = 0.0;
            }
            step(net.head_weight, cfg.learning_rate, cfg.momentum);
            step(net.head_bias, cfg.learning_rate, cfg.momentum);
        }
        result.epoch_loss.push_back(epoch_loss / static_cast<double>(std::max<std::size_t>(seen, 1)));
    }

    auto to_tensor = [](const std::vector<double>& v, Shape shape) {
        std::vector<float> f(v.begin(), v.end());
        return Tensor(std::move(shape), std::move(f));
    };
    AnnModel& model = result.model;
    model.input_shape = {dims};
    for (const auto& h : net.hidden) {
        model.layers.emplace_back(
            Linear{to_tensor(h.weight.value, {h.out, h.in}), to_tensor(h.bias.value, {h.out})});
        if (cfg.batchnorm) {
            model.layers.emplace_back(BatchNorm{to_tensor(h.gamma.value, {h.out}),
                                                to_tensor(h.beta.value, {h.out}),
                                                to_tensor(h.running_mean, {h.out}),
                                                to_tensor(h.running_var, {h.out}), cfg.bn_eps});
        }
        model.layers.emplace_back(Pqa{h.quant});
    }
    model.layers.emplace_back(Linear{to_tensor(net.head_weight.value, {net.classes, net.head_in}),
                                     to_tensor(net.head_bias.value, {net.classes})});
    validate_ann(model);
    result.train_accuracy = eval_accuracy(model, data);
    return result;
}

std::vector<std::size_t> predict(const AnnModel& model, const SyntheticDataset& data)
{
    std::vector<std::size_t> out;
    out.reserve(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        out.push_back(argmax(ann_forward(model, data.sample(i)).data()));
    }
    return out;
}

std::vector<std::size_t> predict(const SnnModel& model, const SyntheticDataset& data,
                                 int timesteps)
{
    std::vector<std::size_t> out;
    out.reserve(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        out.push_back(decode_prediction(run_snn(model, data.sample(i), timesteps)));
    }
    return out;
}

namespace {

double accuracy(const std::vector<std::size_t>& pred, const SyntheticDataset& data)
{
    if (data.size() == 0) {
        return 0.0;
    }
    std::size_t correct = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        correct += pred[i] == static_cast<std::size_t>(data.labels[i]) ? 1 : 0;
    }
    return static_cast<double>(correct) / static_cast<double>(data.size());
}

} // namespace

double eval_accuracy(const AnnModel& model, const SyntheticDataset& data)
{
    return accuracy(predict(model, data), data);
}

double eval_accuracy(const SnnModel& model, const SyntheticDataset& data, int timesteps)
{
    return accuracy(predict(model, data, timesteps), data);
}

} // namespace pmsm
