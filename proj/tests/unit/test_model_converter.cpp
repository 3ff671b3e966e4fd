#include <doctest.h>

#include <cmath>

#include "pmsm/converter.hpp"
#include "pmsm/error.hpp"
#include "pmsm/random_models.hpp"
#include "pmsm/rng.hpp"
#include "pmsm/runtime.hpp"

using namespace pmsm;

namespace {

BatchNorm bn1(float gamma, float beta, float mean, float var, float eps = 0.0f)
{
    return BatchNorm{Tensor::vector({gamma}), Tensor::vector({beta}), Tensor::vector({mean}),
                     Tensor::vector({var}), eps};
}

Linear lin(std::initializer_list<std::initializer_list<float>> w, std::initializer_list<float> b)
{
    return Linear{Tensor::matrix(w), Tensor::vector(b)};
}

AnnModel scalar_net(const QuantParams& q)
{
    return AnnModel{{1}, {lin({{1}}, {0}), Pqa{q}, lin({{1}}, {0})}};
}

std::vector<Tensor> normal_inputs(const Shape& shape, std::size_t n, std::uint64_t seed)
{
    Rng rng(seed);
    std::vector<Tensor> xs;
    for (std::size_t i = 0; i < n; ++i) {
        xs.push_back(random_normal_tensor(shape, rng));
    }
    return xs;
}

} // namespace

TEST_CASE("ANN structure validation")
{
    const QuantParams q{8, 8.0, -0.25, 1.0};
    CHECK_NOTHROW(validate_ann(scalar_net(q)));
    CHECK_THROWS_AS(validate_ann(AnnModel{{1}, {}}), StructureError);
    CHECK_THROWS_AS(validate_ann(AnnModel{{1}, {lin({{1}}, {0}), Pqa{q}}}), StructureError);
    // dangling BN after the activation
    CHECK_THROWS_AS(
        validate_ann(AnnModel{{1}, {lin({{1}}, {0}), Pqa{q}, bn1(1, 0, 0, 1), lin({{1}}, {0})}}),
        StructureError);
    // weight layer without its activation
    CHECK_THROWS_AS(validate_ann(AnnModel{{1}, {lin({{1}}, {0}), lin({{1}}, {0})}}), StructureError);
    // shape mismatch caught by the dry run
    CHECK_THROWS_AS(validate_ann(AnnModel{{2}, {lin({{1}}, {0}), Pqa{q}, lin({{1}}, {0})}}),
                    DimensionError);
}

TEST_CASE("BN folding")
{
    const QuantParams q{8, 8.0, -0.25, 1.0};
    const AnnModel m{{1}, {lin({{1}}, {0}), bn1(2, 3, 1, 4), Pqa{q}, lin({{1}}, {0})}};
    const AnnModel f = fold_batchnorm(m);
    REQUIRE(f.layers.size() == 3);
    const auto& l0 = std::get<Linear>(f.layers[0]);
    CHECK(l0.weight[0] == doctest::Approx(1.0));
    CHECK(l0.bias[0] == doctest::Approx(2.0));
    for (float x : {-3.0f, 0.2f, 1.7f, 5.0f}) {
        const Tensor in = Tensor::vector({x});
        CHECK(ann_forward(f, in)[0] == ann_forward(m, in)[0]);
    }

    const AnnModel identity{{1}, {lin({{0.7f}}, {0.1f}), bn1(1, 0, 0, 1), Pqa{q}, lin({{1}}, {0})}};
    const auto fi = fold_batchnorm(identity);
    CHECK(std::get<Linear>(fi.layers[0]) == std::get<Linear>(identity.layers[0]));

    const auto plain = scalar_net(q);
    CHECK(fold_batchnorm(plain).layers == plain.layers);

    const AnnModel dangling{{1}, {bn1(1, 0, 0, 1), lin({{1}}, {0}), Pqa{q}, lin({{1}}, {0})}};
    CHECK_THROWS_AS(fold_batchnorm(dangling), StructureError);
}

TEST_CASE("conv BN folding matches sequential evaluation")
{
    Rng rng(21);
    const auto net = random_convnet(2, 8, 3, {8, 8.0, -0.25, 1.0}, {4, 4.0, -0.5, 1.0}, rng);
    const auto folded = fold_batchnorm(net);
    for (const auto& x : normal_inputs(net.input_shape, 50, 4)) {
        const auto a = ann_forward_trace(net, x);
        const auto b = ann_forward_trace(folded, x);
        for (std::size_t l = 0; l < a.activations.size(); ++l) {
            const auto& pa = a.activations[l].pre_activation;
            const auto& pb = b.activations[l].pre_activation;
            for (std::size_t i = 0; i < pa.size(); ++i) {
                CHECK(std::abs(pa[i] - pb[i]) <= 1e-4 * std::max(1.0f, std::abs(pa[i])));
            }
        }
    }
}

TEST_CASE("threshold transfer")
{
    CHECK(transfer_pqa_to_aif({8, 8.0, -0.25, 1.0}) == AifParams{1.0f, -2, 8, 0.5f});
    CHECK(transfer_pqa_to_aif({16, 16.0, -0.5, 0.4375}) == AifParams{1.0f, -8, 7, 0.5f});
    CHECK(transfer_pqa_to_aif({1, 2.0, 0.0, 1.0}) == AifParams{2.0f, 0, 1, 1.0f});
    CHECK_THROWS_AS(transfer_pqa_to_aif({8, 8.0, -0.3, 1.0}), ValidationError);
}

TEST_CASE("conversion with unit thresholds keeps weights")
{
    const QuantParams q{4, 4.0, -0.5, 1.0};
    const AnnModel m{{2},
                     {lin({{1, 2}, {3, 4}}, {0.5f, -0.5f}), Pqa{q}, lin({{1, -1}, {2, 0}}, {0, 1}),
                      Pqa{q}, lin({{1, 1}}, {0})}};
    const SnnModel s = convert_model(m);
    REQUIRE(s.layers.size() == 3);
    CHECK(s.layers[0].weight == std::get<Linear>(m.layers[0]).weight);
    CHECK(s.layers[1].weight == std::get<Linear>(m.layers[2]).weight);
    CHECK(s.layers[2].weight == std::get<Linear>(m.layers[4]).weight);
    CHECK(s.layers[0].aif == transfer_pqa_to_aif(q));
    CHECK(s.layers[1].aif == transfer_pqa_to_aif(q));
    CHECK_FALSE(s.layers[2].aif.has_value());
    CHECK(s.spiking_layers() == std::vector<std::size_t>{0, 1});
}

TEST_CASE("downstream weights absorb the upstream threshold")
{
    const QuantParams q{4, 2.0, -0.5, 1.0};
    const AnnModel m{{1}, {lin({{1}}, {0}), Pqa{q}, lin({{3}}, {0.25f})}};
    const SnnModel s = convert_model(m);
    CHECK(s.layers[0].weight[0] == 1.0f);
    CHECK(s.layers[1].weight[0] == 1.5f);
    CHECK(s.layers[1].bias[0] == 0.25f);
}

TEST_CASE("conversion composes with folding")
{
    Rng rng(8);
    const std::vector<std::size_t> hidden{6, 5};
    const std::vector<QuantParams> qs{{8, 8.0, -0.25, 1.0}, {4, 4.0, -0.5, 0.75}};
    const auto m = random_mlp(3, hidden, 2, qs, true, rng);
    const auto a = convert_model(m);
    const auto b = convert_model(fold_batchnorm(m));
    CHECK(a.layers == b.layers);
}

TEST_CASE("equivalence on trivial and random nets")
{
    const QuantParams q{8, 8.0, -0.25, 1.0};
    const auto trivial = scalar_net(q);
    const auto xs = normal_inputs({1}, 100, 1);
    const auto rep = verify_equivalence(trivial, convert_model(trivial), xs);
    CHECK(rep.max_abs_diff == 0.0);
    CHECK(rep.argmax_agreement == 1.0);

    Rng rng(99);
    const std::vector<std::size_t> hidden{16, 12};
    const std::vector<QuantParams> qs{{8, 8.0, -0.25, 1.0}, {16, 16.0, -0.5, 0.4375}};
    const auto mlp = random_mlp(4, hidden, 3, qs, true, rng);
    const auto inputs = normal_inputs({4}, 1000, 2);
    const auto r = verify_equivalence(mlp, convert_model(mlp), inputs);
    CHECK(r.max_abs_diff <= 1e-4);
    CHECK(r.argmax_agreement == 1.0);
    CHECK(r.index_mismatches == 0);
    CHECK(r.neurons_checked == 1000 * 28);
}

TEST_CASE("wrong initial potential breaks equivalence")
{
    const QuantParams q{8, 8.0, -0.25, 1.0};
    const AnnModel m{{1}, {lin({{1}}, {0}), Pqa{q}, lin({{1}, {-1}}, {0, 0.05f})}};
    SnnModel s = convert_model(m);
    s.layers[0].aif->v_init = 0.0f;
    std::vector<Tensor> xs;
    for (int i = 0; i < 200; ++i) {
        xs.push_back(Tensor::vector({-1.0f + 0.05f * static_cast<float>(i)}));
    }
    const auto rep = verify_equivalence(m, s, xs);
    CHECK(rep.index_mismatches > 0);
    CHECK(rep.argmax_agreement < 1.0);
}
