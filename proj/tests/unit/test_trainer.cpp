#include <doctest.h>

#include <cmath>

#include "pmsm/converter.hpp"
#include "pmsm/error.hpp"
#include "pmsm/random_models.hpp"
#include "pmsm/rng.hpp"
#include "pmsm/trainer.hpp"

using namespace pmsm;

TEST_CASE("synthetic datasets")
{
    const auto a = gen_synthetic_dataset(DatasetKind::gaussians, 100, 42);
    const auto b = gen_synthetic_dataset(DatasetKind::gaussians, 100, 42);
    CHECK(a.points == b.points);
    CHECK(a.labels == b.labels);
    CHECK(a.points.shape() == Shape{100, 2});

    const auto s = gen_synthetic_dataset(DatasetKind::spiral, 300, 7);
    CHECK(s.size() == 300);
    int ones = 0;
    for (int l : s.labels) {
        CHECK((l == 0 || l == 1));
        ones += l;
    }
    CHECK(ones == 150);
    CHECK(gen_synthetic_dataset(DatasetKind::spiral, 300, 8).points != s.points);
    CHECK_THROWS_AS(gen_synthetic_dataset(DatasetKind::gaussians, 2, 1), ValidationError);
    CHECK(dataset_kind_from_string("spiral") == DatasetKind::spiral);
    CHECK_THROWS_AS(dataset_kind_from_string("moons"), ValidationError);
}

TEST_CASE("train/test split is a deterministic partition")
{
    const auto d = gen_synthetic_dataset(DatasetKind::gaussians, 101, 3);
    const auto [tr, te] = train_test_split(d, 0.8, 5);
    CHECK(tr.size() + te.size() == 101);
    CHECK(tr.size() == 81);
    const auto [tr2, te2] = train_test_split(d, 0.8, 5);
    CHECK(tr.points == tr2.points);
    CHECK(te.labels == te2.labels);
}

TEST_CASE("config validation")
{
    TrainConfig cfg;
    CHECK_NOTHROW(validate_train_config(cfg));
    cfg.epochs = 0;
    CHECK_THROWS_AS(validate_train_config(cfg), ValidationError);
    cfg = {};
    cfg.batch_size = 0;
    CHECK_THROWS_AS(validate_train_config(cfg), ValidationError);
    cfg = {};
    cfg.quant.alpha = -0.3;
    CHECK_THROWS_AS(validate_train_config(cfg), ValidationError);
    cfg = {};
    cfg.hidden = {};
    CHECK_THROWS_AS(validate_train_config(cfg), ValidationError);
    const auto d = gen_synthetic_dataset(DatasetKind::gaussians, 10, 1);
    TrainConfig zero;
    zero.epochs = 0;
    CHECK_THROWS_AS(train_ann(zero, d), ValidationError);
}

TEST_CASE("training on gaussians")
{
    const auto data = gen_synthetic_dataset(DatasetKind::gaussians, 1000, 42);
    const auto [train, test] = train_test_split(data, 0.8, 42);
    TrainConfig cfg;
    const auto r1 = train_ann(cfg, train);
    CHECK(r1.train_accuracy >= 0.95);
    CHECK(r1.epoch_loss.size() == 50);
    CHECK(eval_accuracy(r1.model, test) >= 0.95);

    const auto r2 = train_ann(cfg, train);
    CHECK(r1.model.layers == r2.model.layers);

    const auto snn = convert_model(r1.model);
    CHECK(eval_accuracy(snn, test, 1) == eval_accuracy(r1.model, test));
    CHECK(predict(snn, test, 1) == predict(r1.model, test));
}

TEST_CASE("accuracy of a hand-built perfect model")
{
    SyntheticDataset d;
    d.points = Tensor({4, 2}, {-2, 0, 2, 0, -1, 5, 3, -5});
    d.labels = {0, 1, 0, 1};
    const QuantParams q{8, 8.0, -0.875, 1.0};
    const AnnModel m{{2},
                     {Linear{Tensor::matrix({{1, 0}}), Tensor::vector({0})}, Pqa{q},
                      Linear{Tensor::matrix({{-1}, {1}}), Tensor::vector({0, 0})}}};
    CHECK(eval_accuracy(m, d) == 1.0);
    CHECK(eval_accuracy(convert_model(m), d, 4) == 1.0);
}

TEST_CASE("random models sit at chance")
{
    const auto data = gen_synthetic_dataset(DatasetKind::gaussians, 400, 9);
    Rng rng(77);
    const std::vector<std::size_t> hidden{8};
    const std::vector<QuantParams> qs{{8, 8.0, -0.25, 1.0}};
    double sum = 0.0;
    const int models = 200;
    for (int i = 0; i < models; ++i) {
        sum += eval_accuracy(random_mlp(2, hidden, 2, qs, false, rng), data);
    }
    CHECK(std::abs(sum / models - 0.5) <= 0.1);
}
