#include <doctest.h>

#include <cmath>
#include <numeric>

#include "pmsm/converter.hpp"
#include "pmsm/error.hpp"
#include "pmsm/random_models.hpp"
#include "pmsm/rng.hpp"
#include "pmsm/runtime.hpp"

using namespace pmsm;

namespace {

// 1 -> PQA(L=1, theta=1, alpha=0, beta=1) -> identity head; theta_snn = 1.
AnnModel scalar_net()
{
    const QuantParams q{1, 1.0, 0.0, 1.0};
    return AnnModel{{1},
                    {Linear{Tensor::matrix({{1}}), Tensor::vector({0})}, Pqa{q},
                     Linear{Tensor::matrix({{1}}), Tensor::vector({0})}}};
}

AnnModel wide_net(Rng& rng)
{
    const std::vector<std::size_t> hidden{24, 16};
    const std::vector<QuantParams> qs{{16, 16.0, -0.5, 1.0}, {16, 8.0, -0.5, 1.0}};
    return random_mlp(6, hidden, 4, qs, true, rng);
}

} // namespace

TEST_CASE("scalar hand trace z=0.6, T=3")
{
    const auto ann = scalar_net();
    const auto snn = convert_model(ann);
    const auto rep = run_snn(snn, Tensor::vector({0.6f}), 3);
    REQUIRE(rep.spikes.size() == 1);
    CHECK(rep.spikes[0][0] == SpikeCounts{1});
    CHECK(rep.spikes[0][1] == SpikeCounts{0});
    CHECK(rep.spikes[0][2] == SpikeCounts{1});
    CHECK(rep.psp[0][0] == doctest::Approx(2.0 / 3.0));
    CHECK(rep.head_output[0] == doctest::Approx(2.0 / 3.0));
    CHECK(rep.total_spike_events == 2);
    CHECK(rep.labels == std::vector<std::string>{"L0-linear"});

    const auto err = layer_error(ann, snn, Tensor::vector({0.6f}), 3);
    CHECK(err.err[0][0] == doctest::Approx(-1.0 / 3.0));

    const auto d = delta_statistics(snn, Tensor::vector({0.6f}), 3);
    CHECK(d.layers[0].deltas[0] == std::vector<int>{0, -1, 0});
    CHECK(d.layers[0].mean_delta == doctest::Approx(-1.0 / 3.0));
    CHECK(d.histogram.minus_one == 1);
    CHECK(d.histogram.zero == 2);
}

TEST_CASE("zero and on-lattice inputs")
{
    const auto ann = scalar_net();
    const auto snn = convert_model(ann);
    for (int t : {1, 5, 17}) {
        const auto rep = run_snn(snn, Tensor::vector({0.0f}), t);
        CHECK(rep.total_spike_events == 0);
        CHECK(rep.psp[0][0] == 0.0f);
    }
    const QuantParams q{4, 8.0, -0.5, 1.0};
    const AnnModel lattice{{1},
                           {Linear{Tensor::matrix({{1}}), Tensor::vector({0})}, Pqa{q},
                            Linear{Tensor::matrix({{1}}), Tensor::vector({0})}}};
    const auto d = delta_statistics(convert_model(lattice), Tensor::vector({2.0f}), 10);
    for (int v : d.layers[0].deltas[0]) {
        CHECK(v == 0);
    }
}

TEST_CASE("timestep validation")
{
    const auto snn = convert_model(scalar_net());
    CHECK_THROWS_AS(run_snn(snn, Tensor::vector({1.0f}), 0), ValidationError);
    CHECK_THROWS_AS(delta_statistics(snn, Tensor::vector({1.0f}), 1), ValidationError);
    CHECK_THROWS_AS(run_snn(snn, Tensor::vector({1.0f, 2.0f}), 1), DimensionError);
}

TEST_CASE("readout helpers")
{
    Rng rng(17);
    const auto ann = wide_net(rng);
    const auto snn = convert_model(ann);
    const auto x = random_normal_tensor({6}, rng);
    const auto rep = run_snn(snn, x, 9);
    for (std::size_t l = 0; l < rep.psp.size(); ++l) {
        CHECK(recompute_psp(rep, l) == rep.psp[l]);
    }
    RunReport fake;
    fake.head_output = Tensor::vector({0.1f, 0.9f});
    CHECK(decode_prediction(fake) == 1);
    fake.head_output = Tensor::vector({0.5f, 0.5f});
    CHECK(decode_prediction(fake) == 0);
}

TEST_CASE("T=1 error is zero in every layer")
{
    Rng rng(23);
    const auto ann = wide_net(rng);
    const auto snn = convert_model(ann);
    for (int i = 0; i < 50; ++i) {
        const auto e = layer_error(ann, snn, random_normal_tensor({6}, rng), 1);
        for (double m : e.mean_abs_err) {
            CHECK(m <= 1e-4);
        }
    }
}

TEST_CASE("teacher forcing and propagation agree at T=1")
{
    Rng rng(29);
    const auto snn = convert_model(wide_net(rng));
    const auto x = random_normal_tensor({6}, rng);
    const auto a = run_snn(snn, x, 1);
    const auto b = run_snn(snn, x, 1, RunOptions{DriveMode::teacher_forced});
    CHECK(a.spikes == b.spikes);
    CHECK(a.head_output == b.head_output);
}

TEST_CASE("spike deltas stay within one step when unclipped")
{
    Rng rng(31);
    const auto ann = wide_net(rng);
    const auto snn = convert_model(ann);
    DeltaHistogram unclipped;
    std::uint64_t all = 0;
    for (int i = 0; i < 20; ++i) {
        const auto x = random_normal_tensor({6}, rng);
        const auto trace = ann_forward_trace(ann, x);
        const auto err = layer_error(ann, snn, x, 100);
        const auto d = delta_statistics(err.run);
        for (std::size_t l = 0; l < d.layers.size(); ++l) {
            const auto& aif = *snn.layers[snn.spiking_layers()[l]].aif;
            const auto& z = trace.activations[l].pre_activation;
            all += d.layers[l].histogram.total();
            for (std::size_t n = 0; n < z.size(); ++n) {
                const double u = z[n] / aif.theta_snn;
                if (u > aif.c_neg + 1 && u < aif.c_pos - 1) {
                    for (int v : d.layers[l].deltas[n]) {
                        unclipped.add(v);
                    }
                }
                const auto& dn = d.layers[l].deltas[n];
                const double mean = std::accumulate(dn.begin(), dn.end(), 0.0) / 100.0;
                CHECK(std::abs(err.err[l][n] - aif.theta_snn * mean) <= 1e-6);
            }
        }
    }
    CHECK(all == 20ull * 100 * (24 + 16));
    CHECK(unclipped.total() > 0);
    CHECK(unclipped.other == 0);
}
