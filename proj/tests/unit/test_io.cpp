#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "pmsm/converter.hpp"
#include "pmsm/error.hpp"
#include "pmsm/io.hpp"
#include "pmsm/random_models.hpp"
#include "pmsm/rng.hpp"

using namespace pmsm;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name)
{
    const auto dir = fs::temp_directory_path() / "pmsm_io_test";
    fs::create_directories(dir);
    return dir / name;
}

AnnModel sample_ann()
{
    Rng rng(1234);
    const std::vector<std::size_t> hidden{7, 5};
    const std::vector<QuantParams> qs{{8, 8.0, -0.25, 1.0}, {16, 3.0, -0.5, 0.4375}};
    return random_mlp(3, hidden, 2, qs, true, rng);
}

} // namespace

TEST_CASE("tensors round-trip through JSON")
{
    const Tensor t({2, 2}, {0.1f, -1e-30f, 3.4028235e38f, std::nextafter(1.0f, 2.0f)});
    CHECK(io::tensor_from_json(io::tensor_to_json(t)) == t);
    CHECK(io::tensor_from_json(io::tensor_to_json(t, false)) == t);
    const auto j = io::tensor_to_json(t);
    CHECK(j.at("data")[0].get<double>() == 0.1);
    CHECK(j.at("hex")[0].get<std::string>() == "0x1.99999ap-4");
}

TEST_CASE("ANN and SNN files round-trip bitwise")
{
    const auto ann = sample_ann();
    const auto path = scratch("ann.json");
    io::save_model(path, ann);
    CHECK(io::load_ann(path).layers == ann.layers);
    io::save_model(path, ann, false);
    CHECK(io::load_ann(path).layers == ann.layers);

    Rng rng(5);
    const auto conv = random_convnet(2, 6, 3, {8, 8.0, -0.25, 1.0}, {4, 2.0, -0.5, 1.0}, rng);
    io::save_model(path, conv);
    const auto back = io::load_ann(path);
    CHECK(back.layers == conv.layers);
    CHECK(back.input_shape == conv.input_shape);

    const auto snn = convert_model(conv);
    const auto spath = scratch("snn.json");
    io::save_model(spath, snn);
    const auto sback = io::load_snn(spath);
    CHECK(sback.layers == snn.layers);
    CHECK(std::holds_alternative<SnnModel>(io::load_model(spath)));
    CHECK(std::holds_alternative<AnnModel>(io::load_model(path)));
}

TEST_CASE("model file header checks")
{
    auto j = io::ann_to_json(sample_ann());
    CHECK(j.at("format_version") == 1);
    CHECK(j.at("model_kind") == "ann");
    CHECK_THROWS_AS(io::snn_from_json(j), StructureError);
    j["format_version"] = 2;
    CHECK_THROWS_AS(io::ann_from_json(j), ValidationError);
    auto k = io::ann_to_json(sample_ann());
    k["layers"][1]["kind"] = "dropout";
    CHECK_THROWS_AS(io::ann_from_json(k), ValidationError);
    CHECK_THROWS_AS(io::load_model(scratch("does_not_exist.json")), IoError);

    const auto bad = scratch("bad.json");
    io::write_text(bad, "{ not json");
    CHECK_THROWS_AS(io::read_json(bad), IoError);
}

TEST_CASE("CSV inputs")
{
    const auto path = scratch("in.csv");
    io::write_text(path, "x,y\n1, 2.5\n-3e-2,4\n\n");
    const auto rows = io::read_csv_rows(path, true);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0] == std::vector<float>{1.0f, 2.5f});
    CHECK(rows[1] == std::vector<float>{-0.03f, 4.0f});
    CHECK_THROWS_AS(io::read_csv_rows(path, false), ValidationError);
    CHECK(io::rows_to_csv(rows) == "1,2.5\n-0.03,4\n");
}

TEST_CASE("grid outputs")
{
    const auto g = entropy_ratio_grid(8, 8.0);
    const auto csv = io::grid_to_csv(g);
    CHECK(csv.rfind("alpha,beta,R\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 73);
    CHECK(csv == io::grid_to_csv(entropy_ratio_grid(8, 8.0)));

    const auto j = io::grid_to_json(g);
    CHECK(j.at("cells").size() == 72);
    CHECK(j.at("format_version") == 1);

    const auto ppm = io::grid_to_ppm(g, 4);
    const std::string header = "P6\n32 36\n255\n";
    CHECK(ppm.rfind(header, 0) == 0);
    CHECK(ppm.size() == header.size() + 32 * 36 * 3);
}
