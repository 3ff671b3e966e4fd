// pmsm: command-line front end for training, conversion, simulation and
// analysis. Exit codes: 0 success, 1 runtime or structure error, 2 usage.

#include <cmath>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pmsm/converter.hpp"
#include "pmsm/energy.hpp"
#include "pmsm/entropy.hpp"
#include "pmsm/error.hpp"
#include "pmsm/io.hpp"
#include "pmsm/random_models.hpp"
#include "pmsm/rng.hpp"
#include "pmsm/runtime.hpp"
#include "pmsm/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

/// Flag values that parse but make no sense; reported as exit code 2.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void require(bool ok, const std::string& message)
{
    if (!ok) {
        throw UsageError(message);
    }
}

std::vector<pmsm::Tensor> csv_inputs(const fs::path& path, bool header, const pmsm::Shape& shape)
{
    std::vector<pmsm::Tensor> inputs;
    const auto rows = pmsm::io::read_csv_rows(path, header);
    const auto want = pmsm::shape_size(shape);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != want) {
            throw pmsm::DimensionError("input row " + std::to_string(r + 1) + " has " +
                                       std::to_string(rows[r].size()) + " values, model expects " +
                                       std::to_string(want));
        }
        inputs.emplace_back(shape, rows[r]);
    }
    return inputs;
}

std::vector<pmsm::Tensor> random_inputs(const pmsm::Shape& shape, std::size_t n, std::uint64_t seed)
{
    pmsm::Rng rng(seed);
    std::vector<pmsm::Tensor> inputs;
    for (std::size_t i = 0; i < n; ++i) {
        inputs.push_back(pmsm::random_normal_tensor(shape, rng));
    }
    return inputs;
}

// ---- train ------------------------------------------------------------------

struct TrainFlags {
    std::string dataset = "gaussians";
    std::uint64_t seed = 42;
    std::size_t n = 1000;
    double train_fraction = 0.8;
    std::string out;
    std::string metrics;
    std::string hidden = "8";
    pmsm::TrainConfig cfg;
    bool no_batchnorm = false;
};

std::vector<std::size_t> parse_size_list(const std::string& text, const char* flag)
{
    std::vector<std::size_t> values;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t pos = 0;
        long long v = 0;
        try {
            v = std::stoll(item, &pos);
        }
        catch (const std::exception&) {
            pos = 0;
        }
        require(pos == item.size() && !item.empty() && v > 0,
                std::string(flag) + ": expected a comma-separated list of positive integers");
        values.push_back(static_cast<std::size_t>(v));
    }
    require(!values.empty(), std::string(flag) + ": empty list");
    return values;
}

int cmd_train(const TrainFlags& f)
{
    require(f.n >= 10, "--n must be at least 10");
    require(f.train_fraction > 0.0 && f.train_fraction < 1.0, "--train-fraction must be in (0, 1)");
    pmsm::TrainConfig cfg = f.cfg;
    cfg.seed = f.seed;
    cfg.hidden = parse_size_list(f.hidden, "--hidden");
    cfg.batchnorm = !f.no_batchnorm;

    const auto kind = pmsm::dataset_kind_from_string(f.dataset);
    const auto data = pmsm::gen_synthetic_dataset(kind, f.n, f.seed);
    const auto [train, test] = pmsm::train_test_split(data, f.train_fraction, f.seed);
    const auto result = pmsm::train_ann(cfg, train);
    const double test_acc = pmsm::eval_accuracy(result.model, test);

    pmsm::io::save_model(f.out, result.model);
    json metrics{{"format_version", pmsm::io::kFormatVersion},
                 {"kind", "train_metrics"},
                 {"dataset", f.dataset},
                 {"seed", f.seed},
                 {"samples", f.n},
                 {"train_size", train.size()},
                 {"test_size", test.size()},
                 {"epochs", cfg.epochs},
                 {"train_accuracy", result.train_accuracy},
                 {"test_accuracy", test_acc},
                 {"epoch_loss", result.epoch_loss}};
    const fs::path metrics_path =
        f.metrics.empty() ? fs::path(f.out).replace_extension(".metrics.json") : fs::path(f.metrics);
    pmsm::io::write_json(metrics_path, metrics);
    std::cout << "test accuracy " << test_acc << " (" << test.size() << " samples), model -> "
              << f.out << ", metrics -> " << metrics_path.string() << "\n";
    return 0;
}

// ---- dataset ----------------------------------------------------------------

int cmd_dataset(const std::string& kind_name, std::size_t n, std::uint64_t seed,
                const std::string& out, const std::string& labels_out)
{
    require(n >= 1, "--n must be positive");
    const auto data = pmsm::gen_synthetic_dataset(pmsm::dataset_kind_from_string(kind_name), n, seed);
    std::vector<std::vector<float>> rows;
    for (std::size_t i = 0; i < data.size(); ++i) {
        rows.push_back(data.sample(i).values());
    }
    pmsm::io::write_text(out, pmsm::io::rows_to_csv(rows));
    if (!labels_out.empty()) {
        std::string text;
        for (int label : data.labels) {
            text += std::to_string(label) + "\n";
        }
        pmsm::io::write_text(labels_out, text);
    }
    return 0;
}

// ---- convert ----------------------------------------------------------------

int cmd_convert(const std::string& in, const std::string& out)
{
    const auto model = pmsm::io::load_model(in);
    if (std::holds_alternative<pmsm::SnnModel>(model)) {
        throw pmsm::StructureError("'" + in + "' is already an SNN; only ANN files can be converted");
    }
    const auto snn = pmsm::convert_model(std::get<pmsm::AnnModel>(model));
    pmsm::io::save_model(out, snn);
    std::cout << "converted " << snn.spiking_layers().size() << " spiking layers -> " << out << "\n";
    return 0;
}

// ---- run --------------------------------------------------------------------

int cmd_run(const std::string& model_path, const std::string& input_path, int timesteps,
            bool header, bool include_spikes, bool teacher_forced, const std::string& out)
{
    require(timesteps >= 1, "--timesteps must be >= 1 (got " + std::to_string(timesteps) + ")");
    const auto snn = pmsm::io::load_snn(model_path);
    const auto inputs = csv_inputs(input_path, header, snn.input_shape);
    const pmsm::RunOptions options{teacher_forced ? pmsm::DriveMode::teacher_forced
                                                  : pmsm::DriveMode::propagated};
    json samples = json::array();
    std::vector<std::uint64_t> per_layer;
    std::vector<std::string> labels;
    std::uint64_t total = 0;
    for (const auto& x : inputs) {
        const auto report = pmsm::run_snn(snn, x, timesteps, options);
        const auto tally = pmsm::count_spikes(report);
        if (per_layer.empty()) {
            per_layer.assign(tally.per_layer.size(), 0);
            labels = tally.labels;
        }
        for (std::size_t l = 0; l < per_layer.size(); ++l) {
            per_layer[l] += tally.per_layer[l];
        }
        total += tally.total;
        samples.push_back(pmsm::io::run_report_to_json(report, include_spikes));
    }
    json layers = json::array();
    for (std::size_t l = 0; l < per_layer.size(); ++l) {
        layers.push_back(json{{"label", labels[l]}, {"spike_count", per_layer[l]}});
    }
    json doc{{"format_version", pmsm::io::kFormatVersion},
             {"kind", "run_report"},
             {"timesteps", timesteps},
             {"drive", teacher_forced ? "teacher_forced" : "propagated"},
             {"num_samples", inputs.size()},
             {"total_spike_events", total},
             {"layers", std::move(layers)},
             {"samples", std::move(samples)}};
    if (out.empty()) {
        std::cout << doc.dump(2) << "\n";
    }
    else {
        pmsm::io::write_json(out, doc);
    }
    return 0;
}

// ---- verify -----------------------------------------------------------------

int cmd_verify(const std::string& ann_path, const std::string& snn_path, std::size_t n,
               std::uint64_t seed, double tolerance, const std::string& input_path, bool header,
               const std::string& out)
{
    require(tolerance >= 0.0, "--tolerance must be non-negative");
    const auto ann = pmsm::io::load_ann(ann_path);
    const auto snn = pmsm::io::load_snn(snn_path);
    const auto inputs = input_path.empty() ? random_inputs(ann.input_shape, n, seed)
                                           : csv_inputs(input_path, header, ann.input_shape);
    const auto report = pmsm::verify_equivalence(ann, snn, inputs);
    const json doc = pmsm::io::equivalence_to_json(report, tolerance);
    if (out.empty()) {
        std::cout << doc.dump(2) << "\n";
    }
    else {
        pmsm::io::write_json(out, doc);
    }
    if (report.max_abs_diff > tolerance) {
        std::cerr << "pmsm: max_abs_diff " << report.max_abs_diff << " exceeds tolerance "
                  << tolerance << "\n";
        return 1;
    }
    return 0;
}

// ---- entropy-grid -----------------------------------------------------------

int cmd_entropy_grid(int levels, double theta, const std::string& step, const std::string& formula,
                     const std::string& out, const std::string& json_out,
                     const std::string& ppm_out, int cell_pixels)
{
    require(levels >= 1, "--L must be >= 1");
    require(theta > 0.0 && std::isfinite(theta), "--theta must be positive and finite");
    require(cell_pixels >= 1, "--cell-pixels must be >= 1");
    int stride = 1;
    if (step != "auto") {
        double value = 0.0;
        try {
            value = std::stod(step);
        }
        catch (const std::exception&) {
            throw UsageError("--step must be 'auto' or a positive multiple of 1/L");
        }
        const double cells = value * levels;
        stride = static_cast<int>(std::lround(cells));
        require(stride >= 1 && std::abs(cells - stride) < 1e-9,
                "--step must be 'auto' or a positive multiple of 1/L");
    }
    auto grid = pmsm::entropy_ratio_grid(levels, theta, pmsm::entropy_formula_from_string(formula));
    if (stride > 1) {
        pmsm::EntropyGrid sub = grid;
        sub.alphas.clear();
        sub.betas.clear();
        sub.ratios.clear();
        std::vector<std::size_t> keep_b;
        for (std::size_t k = 0; k < grid.betas.size(); ++k) {
            if ((k + 1) % static_cast<std::size_t>(stride) == 0) {
                keep_b.push_back(k);
                sub.betas.push_back(grid.betas[k]);
            }
        }
        for (std::size_t i = 0; i < grid.alphas.size(); ++i) {
            if ((grid.alphas.size() - 1 - i) % static_cast<std::size_t>(stride) != 0) {
                continue;
            }
            sub.alphas.push_back(grid.alphas[i]);
            std::vector<double> row;
            for (std::size_t k : keep_b) {
                row.push_back(grid.ratios[i][k]);
            }
            sub.ratios.push_back(std::move(row));
        }
        require(!sub.betas.empty(), "--step is larger than the beta range");
        grid = std::move(sub);
    }
    pmsm::io::write_text(out, pmsm::io::grid_to_csv(grid));
    if (!json_out.empty()) {
        pmsm::io::write_json(json_out, pmsm::io::grid_to_json(grid));
    }
    if (!ppm_out.empty()) {
        pmsm::io::write_text(ppm_out, pmsm::io::grid_to_ppm(grid, cell_pixels));
    }
    std::cout << grid.alphas.size() * grid.betas.size() << " cells, max R " << grid.max_ratio()
              << ", min R " << grid.min_ratio() << "\n";
    return 0;
}

// ---- energy -----------------------------------------------------------------

int cmd_energy(const std::string& report_path, double eta, double xi, const std::string& out,
               const std::string& csv_out)
{
    require(eta > 0.0, "--eta must be positive");
    require(xi >= 0.0, "--xi must be non-negative");
    const json doc = pmsm::io::read_json(report_path);
    pmsm::SpikeTally tally;
    int timesteps = 0;
    std::uint64_t samples = 0;
    try {
        if (doc.at("format_version").get<int>() != pmsm::io::kFormatVersion ||
            doc.at("kind").get<std::string>() != "run_report") {
            throw pmsm::ValidationError("'" + report_path + "' is not a version-1 run report");
        }
        timesteps = doc.at("timesteps").get<int>();
        samples = doc.at("num_samples").get<std::uint64_t>();
        for (const auto& layer : doc.at("layers")) {
            tally.labels.push_back(layer.at("label").get<std::string>());
            tally.per_layer.push_back(layer.at("spike_count").get<std::uint64_t>());
            tally.total += tally.per_layer.back();
        }
    }
    catch (const json::exception& e) {
        throw pmsm::ValidationError("malformed run report '" + report_path + "': " + e.what());
    }
    if (samples == 0) {
        throw pmsm::ValidationError("run report has no samples");
    }
    const auto report = pmsm::make_energy_report(tally, timesteps, samples, eta, xi);
    const json energy = pmsm::io::energy_to_json(report);
    std::vector<pmsm::LayerSpikeRow> rows;
    for (std::size_t l = 0; l < tally.labels.size(); ++l) {
        rows.push_back({tally.labels[l], tally.per_layer[l]});
    }
    if (out.empty()) {
        std::cout << energy.dump(2) << "\n";
    }
    else {
        pmsm::io::write_json(out, energy);
    }
    if (!csv_out.empty()) {
        pmsm::io::write_text(csv_out, pmsm::layerwise_spike_csv(rows));
    }
    return 0;
}

// ---- error-analysis ---------------------------------------------------------

int cmd_error_analysis(const std::string& ann_path, const std::string& snn_path,
                       const std::string& timesteps_list, std::size_t n, std::uint64_t seed,
                       const std::string& input_path, bool header, const std::string& out)
{
    const auto ann = pmsm::io::load_ann(ann_path);
    const auto snn = pmsm::io::load_snn(snn_path);
    const auto steps = parse_size_list(timesteps_list, "--timesteps-list");
    const auto inputs = input_path.empty() ? random_inputs(ann.input_shape, n, seed)
                                           : csv_inputs(input_path, header, ann.input_shape);
    require(!inputs.empty(), "no input samples");

    std::string csv = "T,layer,mean_abs_err,delta_minus1,delta_0,delta_plus1,delta_other\n";
    for (std::size_t t : steps) {
        std::vector<double> err_sum;
        std::vector<pmsm::DeltaHistogram> hist;
        std::vector<std::string> labels;
        for (const auto& x : inputs) {
            const auto rep = pmsm::layer_error(ann, snn, x, static_cast<int>(t));
            const auto deltas = pmsm::delta_statistics(rep.run);
            if (err_sum.empty()) {
                err_sum.assign(rep.mean_abs_err.size(), 0.0);
                hist.assign(rep.mean_abs_err.size(), {});
                labels = rep.run.labels;
            }
            for (std::size_t l = 0; l < err_sum.size(); ++l) {
                err_sum[l] += rep.mean_abs_err[l];
                hist[l] += deltas.layers[l].histogram;
            }
        }
        for (std::size_t l = 0; l < err_sum.size(); ++l) {
            csv += std::to_string(t) + ',' + labels[l] + ',' +
                   pmsm::io::format_double(err_sum[l] / static_cast<double>(inputs.size())) + ',' +
                   std::to_string(hist[l].minus_one) + ',' + std::to_string(hist[l].zero) + ',' +
                   std::to_string(hist[l].plus_one) + ',' + std::to_string(hist[l].other) + '\n';
        }
    }
    pmsm::io::write_text(out, csv);
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"PMSM quantized ANN to spiking network conversion toolkit"};
    app.require_subcommand(1);

    TrainFlags tf;
    auto* train = app.add_subcommand("train", "train a quantization-aware MLP on a synthetic dataset");
    train->add_option("--dataset", tf.dataset, "gaussians or spiral")->capture_default_str();
    train->add_option("--seed", tf.seed, "seed for data, split, init and shuffling")->capture_default_str();
    train->add_option("--n", tf.n, "number of generated points")->capture_default_str();
    train->add_option("--train-fraction", tf.train_fraction)->capture_default_str();
    train->add_option("--out", tf.out, "ANN model file to write")->required();
    train->add_option("--metrics", tf.metrics, "metrics JSON (default: <out>.metrics.json)");
    train->add_option("--hidden", tf.hidden, "comma-separated hidden widths")->capture_default_str();
    train->add_option("--epochs", tf.cfg.epochs)->capture_default_str();
    train->add_option("--batch-size", tf.cfg.batch_size)->capture_default_str();
    train->add_option("--lr", tf.cfg.learning_rate)->capture_default_str();
    train->add_option("--momentum", tf.cfg.momentum)->capture_default_str();
    train->add_option("--L", tf.cfg.quant.levels, "quantization levels")->capture_default_str();
    train->add_option("--theta", tf.cfg.quant.theta, "initial threshold")->capture_default_str();
    train->add_option("--alpha", tf.cfg.quant.alpha)->capture_default_str();
    train->add_option("--beta", tf.cfg.quant.beta)->capture_default_str();
    train->add_flag("--no-batchnorm", tf.no_batchnorm);

    std::string ds_kind = "gaussians", ds_out, ds_labels;
    std::size_t ds_n = 1000;
    std::uint64_t ds_seed = 42;
    auto* dataset = app.add_subcommand("dataset", "write a synthetic dataset as CSV");
    dataset->add_option("--kind", ds_kind)->capture_default_str();
    dataset->add_option("--n", ds_n)->capture_default_str();
    dataset->add_option("--seed", ds_seed)->capture_default_str();
    dataset->add_option("--out", ds_out, "points CSV")->required();
    dataset->add_option("--labels", ds_labels, "labels file, one per line");

    std::string conv_in, conv_out;
    auto* convert = app.add_subcommand("convert", "fold BN and convert an ANN file to an SNN file");
    convert->add_option("--in", conv_in)->required();
    convert->add_option("--out", conv_out)->required();

    std::string run_model, run_input, run_out;
    int run_t = 1;
    bool run_header = false, run_spikes = false, run_forced = false;
    auto* run = app.add_subcommand("run", "simulate an SNN over a CSV of inputs");
    run->add_option("--model", run_model)->required();
    run->add_option("--input", run_input)->required();
    run->add_option("--timesteps", run_t)->required();
    run->add_option("--out", run_out, "report path (default: stdout)");
    run->add_flag("--header", run_header, "skip the first CSV line");
    run->add_flag("--spikes", run_spikes, "include per-timestep spike counts");
    run->add_flag("--teacher-forced", run_forced, "hold each layer's t=1 input current");

    std::string ver_ann, ver_snn, ver_input, ver_out;
    std::size_t ver_n = 1000;
    std::uint64_t ver_seed = 0;
    double ver_tol = 1e-4;
    bool ver_header = false;
    auto* verify = app.add_subcommand("verify", "check T=1 equivalence of an ANN/SNN pair");
    verify->add_option("--ann", ver_ann)->required();
    verify->add_option("--snn", ver_snn)->required();
    verify->add_option("--n-samples", ver_n, "random N(0,1) inputs")->capture_default_str();
    verify->add_option("--seed", ver_seed)->capture_default_str();
    verify->add_option("--tolerance", ver_tol)->capture_default_str();
    verify->add_option("--input", ver_input, "CSV inputs instead of random ones");
    verify->add_flag("--header", ver_header);
    verify->add_option("--out", ver_out, "report path (default: stdout)");

    int grid_l = 8;
    double grid_theta = 8.0;
    std::string grid_step = "auto", grid_formula = "printed", grid_out, grid_json, grid_ppm;
    int grid_px = 16;
    auto* grid = app.add_subcommand("entropy-grid", "entropy ratio R over the (alpha, beta) grid");
    grid->add_option("--L", grid_l)->required();
    grid->add_option("--theta", grid_theta)->required();
    grid->add_option("--step", grid_step, "auto (1/L) or a multiple of 1/L")->capture_default_str();
    grid->add_option("--formula", grid_formula, "printed or merged")->capture_default_str();
    grid->add_option("--out", grid_out, "CSV path")->required();
    grid->add_option("--json", grid_json, "also write JSON");
    grid->add_option("--ppm", grid_ppm, "also write a PPM heatmap");
    grid->add_option("--cell-pixels", grid_px)->capture_default_str();

    std::string en_report, en_out, en_csv;
    double en_eta = pmsm::kDefaultTimestepSeconds, en_xi = pmsm::kDefaultJoulesPerSpike;
    auto* energy = app.add_subcommand("energy", "average power from a run report");
    energy->add_option("--run-report", en_report)->required();
    energy->add_option("--eta", en_eta, "seconds per timestep")->capture_default_str();
    energy->add_option("--xi", en_xi, "joules per spike")->capture_default_str();
    energy->add_option("--out", en_out, "report path (default: stdout)");
    energy->add_option("--layer-csv", en_csv, "per-layer spike counts CSV");

    std::string ea_ann, ea_snn, ea_list = "1,2,4,8,16", ea_input, ea_out;
    std::size_t ea_n = 16;
    std::uint64_t ea_seed = 0;
    bool ea_header = false;
    auto* errs = app.add_subcommand("error-analysis", "per-layer conversion error and spike deltas");
    errs->add_option("--ann", ea_ann)->required();
    errs->add_option("--snn", ea_snn)->required();
    errs->add_option("--timesteps-list", ea_list)->capture_default_str();
    errs->add_option("--n-samples", ea_n)->capture_default_str();
    errs->add_option("--seed", ea_seed)->capture_default_str();
    errs->add_option("--input", ea_input);
    errs->add_flag("--header", ea_header);
    errs->add_option("--out", ea_out, "CSV path")->required();

    try {
        app.parse(argc, argv);
    }
    catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    }
    catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    }
    catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*train) return cmd_train(tf);
        if (*dataset) return cmd_dataset(ds_kind, ds_n, ds_seed, ds_out, ds_labels);
        if (*convert) return cmd_convert(conv_in, conv_out);
        if (*run) return cmd_run(run_model, run_input, run_t, run_header, run_spikes, run_forced, run_out);
        if (*verify) return cmd_verify(ver_ann, ver_snn, ver_n, ver_seed, ver_tol, ver_input, ver_header, ver_out);
        if (*grid) return cmd_entropy_grid(grid_l, grid_theta, grid_step, grid_formula, grid_out, grid_json, grid_ppm, grid_px);
        if (*energy) return cmd_energy(en_report, en_eta, en_xi, en_out, en_csv);
        if (*errs) return cmd_error_analysis(ea_ann, ea_snn, ea_list, ea_n, ea_seed, ea_input, ea_header, ea_out);
    }
    catch (const UsageError& e) {
        std::cerr << "pmsm: " << e.what() << "\n";
        return 2;
    }
    catch (const std::exception& e) {
        std::cerr << "pmsm: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
