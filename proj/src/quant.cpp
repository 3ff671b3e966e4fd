#include "pmsm/quant.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "pmsm/error.hpp"

namespace pmsm {

namespace {

bool near_integer(double v)
{
    return std::abs(v - std::round(v)) <= kIntegralTolerance;
}

std::string fmt(double v)
{
    std::ostringstream out;
    out.precision(10);
    out << v;
    return out.str();
}

} // namespace

std::optional<std::string> quant_params_violation(const QuantParams& q, AlphaRange range)
{
    if (q.levels < 1) {
        return "L must be >= 1 (got " + std::to_string(q.levels) + ")";
    }
    if (!std::isfinite(q.theta) || q.theta <= 0.0) {
        return "theta must be positive (got " + fmt(q.theta) + ")";
    }
    const bool alpha_low_ok = range == AlphaRange::open ? q.alpha > -1.0 : q.alpha >= -1.0;
    if (!std::isfinite(q.alpha) || !alpha_low_ok || q.alpha > 0.0) {
        return std::string("alpha must lie in ") + (range == AlphaRange::open ? "(" : "[") +
               "-1, 0] (got " + fmt(q.alpha) + ")";
    }
    if (!std::isfinite(q.beta) || q.beta <= 0.0 || q.beta > 1.0) {
        return "beta must lie in (0, 1] (got " + fmt(q.beta) + ")";
    }
    if (!near_integer(q.alpha * q.levels)) {
        return "alpha*L must be an integer (got " + fmt(q.alpha * q.levels) + ")";
    }
    if (!near_integer(q.beta * q.levels)) {
        return "beta*L must be an integer (got " + fmt(q.beta * q.levels) + ")";
    }
    return std::nullopt;
}

bool is_valid(const QuantParams& q, AlphaRange range) noexcept
{
    return !quant_params_violation(q, range).has_value();
}

void validate_quant_params(const QuantParams& q, AlphaRange range)
{
    if (auto why = quant_params_violation(q, range)) {
        throw ValidationError("invalid quantization parameters: " + *why);
    }
}

float lattice_step(const QuantParams& q) noexcept
{
    return static_cast<float>(q.theta / q.levels);
}

int clip_neg(const QuantParams& q) noexcept
{
    return static_cast<int>(std::lround(q.alpha * q.levels));
}

int clip_pos(const QuantParams& q) noexcept
{
    return static_cast<int>(std::lround(q.beta * q.levels));
}

long long floor_quotient(float numerator, float denominator) noexcept
{
    // The double quotient of two floats is close enough to the real quotient
    // that its floor is exact for |quotient| < 2^27; beyond that every caller
    // clips anyway.
    constexpr double kLimit = 4.0e18;
    const double q = std::floor(static_cast<double>(numerator) / static_cast<double>(denominator));
    if (std::isnan(q)) {
        return 0;
    }
    return static_cast<long long>(std::clamp(q, -kLimit, kLimit));
}

int pqa_index(const QuantParams& q, float x) noexcept
{
    const float step = lattice_step(q);
    const float shifted = x + 0.5f * step;
    const long long k = floor_quotient(shifted, step);
    return static_cast<int>(std::clamp<long long>(k, clip_neg(q), clip_pos(q)));
}

float pqa_value(const QuantParams& q, float x) noexcept
{
    return static_cast<float>(pqa_index(q, x)) * lattice_step(q);
}

Tensor pqa_forward(const QuantParams& q, const Tensor& x)
{
    validate_quant_params(q);
    Tensor y(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) {
        y[i] = pqa_value(q, x[i]);
    }
    return y;
}

std::vector<int> pqa_indices(const QuantParams& q, const Tensor& x)
{
    validate_quant_params(q);
    std::vector<int> k(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        k[i] = pqa_index(q, x[i]);
    }
    return k;
}

Tensor qa_forward(const QuantParams& q, const Tensor& x)
{
    if (q.levels < 1 || !(q.theta > 0.0)) {
        validate_quant_params(q);
    }
    const float step = lattice_step(q);
    Tensor y(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const long long k = std::clamp<long long>(floor_quotient(x[i], step), 0, q.levels);
        y[i] = static_cast<float>(k) * step;
    }
    return y;
}

PqaGradients pqa_backward_ste(const QuantParams& q, const Tensor& x, const Tensor& upstream)
{
    validate_quant_params(q);
    if (x.shape() != upstream.shape()) {
        throw DimensionError("pqa_backward_ste: input " + shape_to_string(x.shape()) +
                             " vs upstream " + shape_to_string(upstream.shape()));
    }
    const double lo = q.alpha * q.theta;
    const double hi = q.beta * q.theta;
    PqaGradients g{Tensor(x.shape()), 0.0};
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double xi = x[i];
        if (xi < lo) {
            g.grad_theta += upstream[i] * q.alpha;
        }
        else if (xi > hi) {
            g.grad_theta += upstream[i] * q.beta;
        }
        else {
            g.grad_x[i] = upstream[i];
        }
    }
    return g;
}

} // namespace pmsm
