#include "pmsm/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "pmsm/error.hpp"

namespace pmsm {

double std_normal_cdf(double x)
{
    return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

double std_normal_sf(double x)
{
    return 0.5 * std::erfc(x / std::numbers::sqrt2);
}

double std_normal_mass(double a, double b)
{
    if (b <= a) {
        return 0.0;
    }
    if (a >= 0.0) {
        return std_normal_sf(a) - std_normal_sf(b);
    }
    if (b <= 0.0) {
        return std_normal_cdf(b) - std_normal_cdf(a);
    }
    return 1.0 - std_normal_cdf(a) - std_normal_sf(b);
}

double entropy_term(double p)
{
    return p > 0.0 ? -p * std::log(p) : 0.0;
}

double entropy_bn()
{
    return 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e);
}

ReluEntropy entropy_relu()
{
    ReluEntropy r;
    r.atom_term = 0.5 * std::log(2.0);
    r.value = r.atom_term + 0.25 * std::log(2.0 * std::numbers::pi) + 0.25;
    r.ratio_to_bn = r.value / entropy_bn();
    r.note = "closed form evaluates to H_ReLU/H_BN = 0.744; the accompanying text states about "
             "0.69 (69%). The closed-form value is reported.";
    return r;
}

std::string to_string(EntropyFormula formula)
{
    return formula == EntropyFormula::printed ? "printed" : "merged";
}

EntropyFormula entropy_formula_from_string(const std::string& name)
{
    if (name == "printed") return EntropyFormula::printed;
    if (name == "merged") return EntropyFormula::merged;
    throw ValidationError("unknown entropy formula '" + name + "' (expected printed|merged)");
}

PqaEntropyTerms entropy_pqa_terms(const QuantParams& q)
{
    validate_quant_params(q, AlphaRange::closed);
    const double scale = q.theta / q.levels;
    const int kneg = clip_neg(q);
    const int kpos = clip_pos(q);
    PqaEntropyTerms t;
    t.h1 = entropy_term(std_normal_cdf((kneg - 0.5) * scale));
    for (int k = kneg; k <= kpos; ++k) {
        t.h2 += entropy_term(std_normal_mass((k - 0.5) * scale, (k + 0.5) * scale));
    }
    t.h3 = entropy_term(std_normal_sf((kpos - 0.5) * scale));
    return t;
}

std::vector<double> pqa_output_distribution(const QuantParams& q)
{
    validate_quant_params(q, AlphaRange::closed);
    const double scale = q.theta / q.levels;
    const int kneg = clip_neg(q);
    const int kpos = clip_pos(q);
    std::vector<double> p;
    p.reserve(static_cast<std::size_t>(kpos - kneg + 1));
    for (int k = kneg; k <= kpos; ++k) {
        const double lo = k == kneg ? -INFINITY : (k - 0.5) * scale;
        const double hi = k == kpos ? INFINITY : (k + 0.5) * scale;
        if (k == kneg) {
            p.push_back(std_normal_cdf(hi));
        }
        else if (k == kpos) {
            p.push_back(std_normal_sf(lo));
        }
        else {
            p.push_back(std_normal_mass(lo, hi));
        }
    }
    return p;
}

double entropy_pqa(const QuantParams& q, EntropyFormula formula)
{
    if (formula == EntropyFormula::printed) {
        return entropy_pqa_terms(q).total();
    }
    double h = 0.0;
    for (double p : pqa_output_distribution(q)) {
        h += entropy_term(p);
    }
    return h;
}

double EntropyGrid::max_ratio() const
{
    double m = -INFINITY;
    for (const auto& row : ratios) {
        for (double r : row) {
            m = std::max(m, r);
        }
    }
    return m;
}

double EntropyGrid::min_ratio() const
{
    double m = INFINITY;
    for (const auto& row : ratios) {
        for (double r : row) {
            m = std::min(m, r);
        }
    }
    return m;
}

EntropyGrid entropy_ratio_grid(int levels, double theta, EntropyFormula formula)
{
    if (levels < 1) {
        throw ValidationError("grid needs L >= 1");
    }
    if (!(theta > 0.0) || !std::isfinite(theta)) {
        throw ValidationError("grid needs theta > 0");
    }
    EntropyGrid grid;
    grid.levels = levels;
    grid.theta = theta;
    grid.formula = formula;
    for (int i = -levels; i <= 0; ++i) {
        grid.alphas.push_back(static_cast<double>(i) / levels);
    }
    for (int j = 1; j <= levels; ++j) {
        grid.betas.push_back(static_cast<double>(j) / levels);
    }
    const double hbn = entropy_bn();
    for (double a : grid.alphas) {
        std::vector<double> row;
        for (double b : grid.betas) {
            row.push_back(entropy_pqa(QuantParams{levels, theta, a, b}, formula) / hbn);
        }
        grid.ratios.push_back(std::move(row));
    }
    return grid;
}

std::string to_string(Regime regime)
{
    switch (regime) {
    case Regime::loss: return "loss";
    case Regime::near_lossless: return "near_lossless";
    case Regime::distortion: return "distortion";
    }
    return "unknown";
}

Regime regime_from_ratio(double ratio, double tolerance)
{
    if (ratio < 1.0 - tolerance) {
        return Regime::loss;
    }
    if (ratio > 1.0 + tolerance) {
        return Regime::distortion;
    }
    return Regime::near_lossless;
}

Regime regime_classify(const QuantParams& q, double tolerance, EntropyFormula formula)
{
    return regime_from_ratio(entropy_pqa(q, formula) / entropy_bn(), tolerance);
}

} // namespace pmsm
