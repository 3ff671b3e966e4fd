#pragma once

#include <span>

#include "pmsm/model.hpp"

namespace pmsm {

/// Folds every batchnorm into the linear/conv layer right before it:
///   W' = (gamma / sqrt(var + eps)) W   (per output row / channel)
///   b' = gamma (b - mean) / sqrt(var + eps) + beta
/// Throws StructureError when a batchnorm has no foldable predecessor.
AnnModel fold_batchnorm(const AnnModel& model);

/// theta_snn = theta / L, c_neg = alpha L, c_pos = beta L, v_init = theta_snn / 2.
AifParams transfer_pqa_to_aif(const QuantParams& q);

/// BN folding followed by threshold transfer and weight scaling. A weight
/// layer fed by spikes is scaled by the threshold of the layer emitting them;
/// the first weight layer sees the analog input and is left unscaled.
/// Biases are never scaled.
SnnModel convert_model(const AnnModel& model);

struct EquivalenceReport {
    std::size_t samples = 0;
    double max_abs_diff = 0.0;        ///< head outputs, ANN vs SNN at T=1
    double argmax_agreement = 0.0;    ///< fraction of equal predictions
    std::size_t index_mismatches = 0; ///< neurons whose spike count != lattice index
    std::size_t neurons_checked = 0;
};

/// Runs the ANN and the SNN for one timestep on each input and compares
/// the head outputs and per-neuron spike counts.
EquivalenceReport verify_equivalence(const AnnModel& ann, const SnnModel& snn,
                                     std::span<const Tensor> inputs);

} // namespace pmsm
