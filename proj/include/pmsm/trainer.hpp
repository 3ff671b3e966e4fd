#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pmsm/model.hpp"

namespace pmsm {

enum class DatasetKind { gaussians, spiral };

std::string to_string(DatasetKind kind);
/// Throws ValidationError for unknown names.
DatasetKind dataset_kind_from_string(const std::string& name);

/// Two-class 2-D toy data. Samples alternate labels 0, 1, 0, ...
struct SyntheticDataset {
    DatasetKind kind = DatasetKind::gaussians;
    std::uint64_t seed = 0;
    int num_classes = 2;
    Tensor points;           ///< [n, 2]
    std::vector<int> labels; ///< [n]

    std::size_t size() const noexcept { return labels.size(); }
    Tensor sample(std::size_t i) const;
};

/// gaussians: unit-variance clusters centred at (-2, 0) and (+2, 0).
/// spiral: two interleaved arms with small radial noise.
SyntheticDataset gen_synthetic_dataset(DatasetKind kind, std::size_t n, std::uint64_t seed);

/// Deterministic shuffled split; the first part holds `train_fraction` of
/// the samples.
std::pair<SyntheticDataset, SyntheticDataset> train_test_split(const SyntheticDataset& data,
                                                               double train_fraction,
                                                               std::uint64_t seed);

struct TrainConfig {
    int epochs = 50;
    std::size_t batch_size = 32;
    double learning_rate = 0.05;
    double momentum = 0.9;
    std::uint64_t seed = 42;
    std::vector<std::size_t> hidden = {8};
    QuantParams quant = {8, 8.0, -0.25, 1.0};
    bool batchnorm = true;
    float bn_eps = 1e-5f;
    double bn_momentum = 0.1;
};

void validate_train_config(const TrainConfig& cfg);

struct TrainResult {
    AnnModel model;
    std::vector<double> epoch_loss;
    double train_accuracy = 0.0;
};

/// Mini-batch SGD with momentum on softmax cross-entropy. Gradients pass
/// through PQA by the straight-through rule and reach each threshold through
/// the clip boundaries. BN uses batch statistics while training and keeps
/// running averages that are frozen into the returned model.
TrainResult train_ann(const TrainConfig& cfg, const SyntheticDataset& data);

double eval_accuracy(const AnnModel& model, const SyntheticDataset& data);
/// SNN readout after `timesteps` steps (run_snn + decode_prediction).
double eval_accuracy(const SnnModel& model, const SyntheticDataset& data, int timesteps);

std::vector<std::size_t> predict(const AnnModel& model, const SyntheticDataset& data);
std::vector<std::size_t> predict(const SnnModel& model, const SyntheticDataset& data,
                                 int timesteps);

} // namespace pmsm
