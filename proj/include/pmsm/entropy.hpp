#pragma once

#include <string>
#include <vector>

#include "pmsm/quant.hpp"

namespace pmsm {

/// Standard normal CDF and survival function, absolute error below 1e-15.
double std_normal_cdf(double x);
double std_normal_sf(double x);
/// P(a < X < b) for X ~ N(0, 1) without cancellation in the tails.
double std_normal_mass(double a, double b);

/// -p ln p with 0 ln 0 = 0.
double entropy_term(double p);

/// Differential entropy of N(0, 1): ln(2 pi e) / 2 nats.
double entropy_bn();

struct ReluEntropy {
    double value = 0.0;       ///< 0.5 ln 2 + ln(2 pi) / 4 + 1/4
    double atom_term = 0.0;   ///< 0.5 ln 2, the point mass at zero
    double ratio_to_bn = 0.0; ///< value / entropy_bn()
    /// The closed form gives a ratio of about 0.744, while the accompanying
    /// text quotes roughly 0.69. The formula's value is what is returned.
    std::string note;
};

ReluEntropy entropy_relu();

enum class EntropyFormula {
    /// Two tail atoms plus every interior cell k_neg..k_pos, each counted once
    /// (boundary cells overlap the tails).
    printed,
    /// Tail mass merged into the boundary cells; one term per output value.
    merged,
};

std::string to_string(EntropyFormula formula);
EntropyFormula entropy_formula_from_string(const std::string& name);

struct PqaEntropyTerms {
    double h1 = 0.0; ///< lower tail atom
    double h2 = 0.0; ///< lattice cells
    double h3 = 0.0; ///< upper tail atom
    double total() const noexcept { return h1 + h2 + h3; }
};

/// Terms of the printed closed form for a N(0, 1) input; cell k covers
/// ((k - 1/2) theta/L, (k + 1/2) theta/L).
PqaEntropyTerms entropy_pqa_terms(const QuantParams& q);

/// Output distribution of pqa_forward for N(0, 1) input, indexed k_neg..k_pos.
std::vector<double> pqa_output_distribution(const QuantParams& q);

/// Entropy of the PQA output in nats; throws ValidationError on invalid q.
double entropy_pqa(const QuantParams& q, EntropyFormula formula = EntropyFormula::printed);

struct EntropyGrid {
    int levels = 0;
    double theta = 0.0;
    EntropyFormula formula = EntropyFormula::printed;
    std::vector<double> alphas; ///< -1, -1 + 1/L, ..., 0
    std::vector<double> betas;  ///< 1/L, ..., 1
    /// ratios[i][j] = H_PQA(alphas[i], betas[j]) / H_BN
    std::vector<std::vector<double>> ratios;

    double max_ratio() const;
    double min_ratio() const;
};

/// R = H_PQA / H_BN over every integrality-valid (alpha, beta) with step 1/L.
/// alpha = -1 lies outside the open interval accepted by validation; the
/// sweep includes it as the closed-interval endpoint.
EntropyGrid entropy_ratio_grid(int levels, double theta,
                               EntropyFormula formula = EntropyFormula::printed);

enum class Regime { loss, near_lossless, distortion };

std::string to_string(Regime regime);

inline constexpr double kDefaultRegimeTolerance = 0.02;

Regime regime_classify(const QuantParams& q, double tolerance = kDefaultRegimeTolerance,
                       EntropyFormula formula = EntropyFormula::printed);
Regime regime_from_ratio(double ratio, double tolerance = kDefaultRegimeTolerance);

} // namespace pmsm
