#include "pmsm/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "pmsm/error.hpp"

namespace pmsm::io {

using nlohmann::json;

namespace {

std::string shortest(float v)
{
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string hex(float v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%a", static_cast<double>(v));
    return buf;
}

float parse_hex(const std::string& s)
{
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0') {
        throw ValidationError("malformed hex-float '" + s + "'");
    }
    return static_cast<float>(v);
}

template <typename T>
T get_field(const json& j, const char* key)
{
    if (!j.is_object() || !j.contains(key)) {
        throw ValidationError(std::string("missing field '") + key + "'");
    }
    try {
        return j.at(key).get<T>();
    }
    catch (const json::exception& e) {
        throw ValidationError(std::string("field '") + key + "': " + e.what());
    }
}

void check_header(const json& j, const std::string& kind)
{
    const int version = get_field<int>(j, "format_version");
    if (version != kFormatVersion) {
        throw ValidationError("unsupported format_version " + std::to_string(version));
    }
    const auto model_kind = get_field<std::string>(j, "model_kind");
    if (model_kind != kind) {
        throw StructureError("expected a " + kind + " model file, got model_kind '" + model_kind +
                             "'");
    }
}

} // namespace

std::string format_double(double value)
{
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, res.ptr);
}

json tensor_to_json(const Tensor& t, bool exact)
{
    json j;
    j["shape"] = t.shape();
    json data = json::array();
    for (float v : t.data()) {
        data.push_back(std::strtod(shortest(v).c_str(), nullptr));
    }
    j["data"] = std::move(data);
    if (exact) {
        json h = json::array();
        for (float v : t.data()) {
            h.push_back(hex(v));
        }
        j["hex"] = std::move(h);
    }
    return j;
}

Tensor tensor_from_json(const json& j)
{
    const auto shape = get_field<Shape>(j, "shape");
    std::vector<float> data;
    if (j.contains("hex")) {
        for (const auto& s : get_field<std::vector<std::string>>(j, "hex")) {
            data.push_back(parse_hex(s));
        }
    }
    else {
        for (double v : get_field<std::vector<double>>(j, "data")) {
            data.push_back(static_cast<float>(v));
        }
    }
    try {
        return Tensor(shape, std::move(data));
    }
    catch (const DimensionError& e) {
        throw ValidationError(std::string("tensor record: ") + e.what());
    }
}

json quant_to_json(const QuantParams& q)
{
    return json{{"L", q.levels}, {"theta", q.theta}, {"alpha", q.alpha}, {"beta", q.beta}};
}

QuantParams quant_from_json(const json& j)
{
    return QuantParams{get_field<int>(j, "L"), get_field<double>(j, "theta"),
                       get_field<double>(j, "alpha"), get_field<double>(j, "beta")};
}

json ann_to_json(const AnnModel& model, bool exact)
{
    json layers = json::array();
    for (const auto& layer : model.layers) {
        json l;
        l["kind"] = layer_kind(layer);
        if (const auto* lin = std::get_if<Linear>(&layer)) {
            l["weight"] = tensor_to_json(lin->weight, exact);
            l["bias"] = tensor_to_json(lin->bias, exact);
        }
        else if (const auto* conv = std::get_if<Conv2d>(&layer)) {
            l["weight"] = tensor_to_json(conv->weight, exact);
            l["bias"] = tensor_to_json(conv->bias, exact);
            l["stride"] = conv->stride;
            l["padding"] = conv->padding;
        }
        else if (const auto* bn = std::get_if<BatchNorm>(&layer)) {
            l["gamma"] = tensor_to_json(bn->gamma, exact);
            l["beta"] = tensor_to_json(bn->beta, exact);
            l["running_mean"] = tensor_to_json(bn->running_mean, exact);
            l["running_var"] = tensor_to_json(bn->running_var, exact);
            l["eps"] = static_cast<double>(bn->eps);
        }
        else if (const auto* pqa = std::get_if<Pqa>(&layer)) {
            l["quant"] = quant_to_json(pqa->quant);
        }
        else if (const auto* pool = std::get_if<AvgPool2d>(&layer)) {
            l["window"] = pool->window;
            l["stride"] = pool->stride;
        }
        layers.push_back(std::move(l));
    }
    return json{{"format_version", kFormatVersion},
                {"model_kind", "ann"},
                {"input_shape", model.input_shape},
                {"layers", std::move(layers)}};
}

AnnModel ann_from_json(const json& j)
{
    check_header(j, "ann");
    AnnModel model;
    model.input_shape = get_field<Shape>(j, "input_shape");
    for (const auto& l : get_field<json>(j, "layers")) {
        const auto kind = get_field<std::string>(l, "kind");
        if (kind == "linear") {
            model.layers.emplace_back(Linear{tensor_from_json(get_field<json>(l, "weight")),
                                             tensor_from_json(get_field<json>(l, "bias"))});
        }
        else if (kind == "conv2d") {
            model.layers.emplace_back(Conv2d{tensor_from_json(get_field<json>(l, "weight")),
                                             tensor_from_json(get_field<json>(l, "bias")),
                                             get_field<std::size_t>(l, "stride"),
                                             get_field<std::size_t>(l, "padding")});
        }
        else if (kind == "batchnorm") {
            model.layers.emplace_back(BatchNorm{tensor_from_json(get_field<json>(l, "gamma")),
                                                tensor_from_json(get_field<json>(l, "beta")),
                                                tensor_from_json(get_field<json>(l, "running_mean")),
                                                tensor_from_json(get_field<json>(l, "running_var")),
                                                static_cast<float>(get_field<double>(l, "eps"))});
        }
        else if (kind == "pqa") {
            model.layers.emplace_back(Pqa{quant_from_json(get_field<json>(l, "quant"))});
        }
        else if (kind == "avgpool2d") {
            model.layers.emplace_back(
                AvgPool2d{get_field<std::size_t>(l, "window"), get_field<std::size_t>(l, "stride")});
        }
        else if (kind == "flatten") {
            model.layers.emplace_back(Flatten{});
        }
        else {
            throw ValidationError("unknown ANN layer kind '" + kind + "'");
        }
        validate_layer(model.layers.back());
    }
    return model;
}

json snn_to_json(const SnnModel& model, bool exact)
{
    json layers = json::array();
    for (const auto& layer : model.layers) {
        json l;
        l["kind"] = to_string(layer.kind);
        if (layer.is_weight_layer()) {
            l["weight"] = tensor_to_json(layer.weight, exact);
            l["bias"] = tensor_to_json(layer.bias, exact);
            if (layer.kind == SnnLayerKind::conv2d) {
                l["stride"] = layer.stride;
                l["padding"] = layer.padding;
            }
            if (layer.aif) {
                l["aif"] = json{{"theta_snn", static_cast<double>(layer.aif->theta_snn)},
                                {"c_neg", layer.aif->c_neg},
                                {"c_pos", layer.aif->c_pos},
                                {"v_init", static_cast<double>(layer.aif->v_init)}};
            }
            else {
                l["aif"] = nullptr;
            }
        }
        else if (layer.kind == SnnLayerKind::avgpool2d) {
            l["window"] = layer.window;
            l["stride"] = layer.stride;
        }
        layers.push_back(std::move(l));
    }
    return json{{"format_version", kFormatVersion},
                {"model_kind", "snn"},
                {"input_shape", model.input_shape},
                {"layers", std::move(layers)}};
}

SnnModel snn_from_json(const json& j)
{
    check_header(j, "snn");
    SnnModel model;
    model.input_shape = get_field<Shape>(j, "input_shape");
    for (const auto& l : get_field<json>(j, "layers")) {
        SnnLayer layer;
        layer.kind = snn_layer_kind_from_string(get_field<std::string>(l, "kind"));
        if (layer.is_weight_layer()) {
            layer.weight = tensor_from_json(get_field<json>(l, "weight"));
            layer.bias = tensor_from_json(get_field<json>(l, "bias"));
            if (layer.kind == SnnLayerKind::conv2d) {
                layer.stride = get_field<std::size_t>(l, "stride");
                layer.padding = get_field<std::size_t>(l, "padding");
            }
            if (l.contains("aif") && !l.at("aif").is_null()) {
                const auto& a = l.at("aif");
                layer.aif = AifParams{static_cast<float>(get_field<double>(a, "theta_snn")),
                                      get_field<int>(a, "c_neg"), get_field<int>(a, "c_pos"),
                                      static_cast<float>(get_field<double>(a, "v_init"))};
            }
        }
        else if (layer.kind == SnnLayerKind::avgpool2d) {
            layer.window = get_field<std::size_t>(l, "window");
            layer.stride = get_field<std::size_t>(l, "stride");
        }
        model.layers.push_back(std::move(layer));
    }
    validate_snn(model);
    return model;
}

json read_json(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open '" + path.string() + "'");
    }
    try {
        return json::parse(in);
    }
    catch (const json::parse_error& e) {
        throw IoError("'" + path.string() + "' is not valid JSON: " + e.what());
    }
}

void write_text(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write '" + path.string() + "'");
    }
    out << text;
    if (!out) {
        throw IoError("write to '" + path.string() + "' failed");
    }
}

void write_json(const std::filesystem::path& path, const json& j)
{
    write_text(path, j.dump(2) + "\n");
}

AnyModel load_model(const std::filesystem::path& path)
{
    const json j = read_json(path);
    const auto kind = get_field<std::string>(j, "model_kind");
    if (kind == "ann") {
        return ann_from_json(j);
    }
    if (kind == "snn") {
        return snn_from_json(j);
    }
    throw ValidationError("unknown model_kind '" + kind + "'");
}

AnnModel load_ann(const std::filesystem::path& path)
{
    return ann_from_json(read_json(path));
}

SnnModel load_snn(const std::filesystem::path& path)
{
    return snn_from_json(read_json(path));
}

void save_model(const std::filesystem::path& path, const AnnModel& model, bool exact)
{
    write_json(path, ann_to_json(model, exact));
}

void save_model(const std::filesystem::path& path, const SnnModel& model, bool exact)
{
    write_json(path, snn_to_json(model, exact));
}

std::vector<std::vector<float>> read_csv_rows(const std::filesystem::path& path, bool header)
{
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open '" + path.string() + "'");
    }
    std::vector<std::vector<float>> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (header && line_no == 1) {
            continue;
        }
        if (line.find_first_not_of(" \t") == std::string::npos) {
            continue;
        }
        std::vector<float> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            const auto b = cell.find_first_not_of(" \t");
            const auto e = cell.find_last_not_of(" \t");
            const std::string trimmed = b == std::string::npos ? "" : cell.substr(b, e - b + 1);
            float v = 0.0f;
            auto res = std::from_chars(trimmed.data(), trimmed.data() + trimmed.size(), v);
            if (trimmed.empty() || res.ec != std::errc() ||
                res.ptr != trimmed.data() + trimmed.size()) {
                throw ValidationError(path.string() + ":" + std::to_string(line_no) +
                                      ": not a number: '" + cell + "'");
            }
            row.push_back(v);
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string rows_to_csv(const std::vector<std::vector<float>>& rows)
{
    std::string out;
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) {
                out += ',';
            }
            out += shortest(row[i]);
        }
        out += '\n';
    }
    return out;
}

json run_report_to_json(const RunReport& report, bool include_spikes)
{
    const SpikeTally tally = count_spikes(report);
    json layers = json::array();
    for (std::size_t l = 0; l < report.labels.size(); ++l) {
        json layer{{"label", report.labels[l]},
                   {"theta_snn", static_cast<double>(report.thresholds[l])},
                   {"shape", report.shapes[l]},
                   {"spike_count", tally.per_layer[l]},
                   {"psp", report.psp[l].values()}};
        if (include_spikes) {
            layer["spikes"] = report.spikes[l];
        }
        layers.push_back(std::move(layer));
    }
    return json{{"timesteps", report.timesteps},
                {"prediction", decode_prediction(report)},
                {"head_output", report.head_output.values()},
                {"total_spike_events", report.total_spike_events},
                {"layers", std::move(layers)}};
}

json equivalence_to_json(const EquivalenceReport& report, double tolerance)
{
    return json{{"format_version", kFormatVersion},
                {"kind", "equivalence_report"},
                {"samples", report.samples},
                {"max_abs_diff", report.max_abs_diff},
                {"argmax_agreement", report.argmax_agreement},
                {"index_mismatches", report.index_mismatches},
                {"neurons_checked", report.neurons_checked},
                {"tolerance", tolerance},
                {"pass", report.max_abs_diff <= tolerance}};
}

json energy_to_json(const EnergyReport& report)
{
    json layers = json::array();
    for (std::size_t i = 0; i < report.per_layer_counts.size(); ++i) {
        layers.push_back(json{{"label", report.labels.at(i)},
                              {"spike_count", report.per_layer_counts[i]}});
    }
    return json{{"format_version", kFormatVersion},
                {"kind", "energy_report"},
                {"N", report.spike_events},
                {"N_1e8", report.spike_events / 1e8},
                {"T", report.timesteps},
                {"samples", report.samples},
                {"eta", report.eta},
                {"xi", report.xi},
                {"P_watts", report.watts},
                {"per_layer", std::move(layers)}};
}

json grid_to_json(const EntropyGrid& grid)
{
    json cells = json::array();
    for (std::size_t i = 0; i < grid.alphas.size(); ++i) {
        for (std::size_t k = 0; k < grid.betas.size(); ++k) {
            cells.push_back(
                json{{"alpha", grid.alphas[i]}, {"beta", grid.betas[k]}, {"R", grid.ratios[i][k]}});
        }
    }
    return json{{"format_version", kFormatVersion},
                {"kind", "entropy_grid"},
                {"L", grid.levels},
                {"theta", grid.theta},
                {"formula", to_string(grid.formula)},
                {"H_BN", entropy_bn()},
                {"max_R", grid.max_ratio()},
                {"min_R", grid.min_ratio()},
                {"cells", std::move(cells)}};
}

std::string grid_to_csv(const EntropyGrid& grid)
{
    std::string out = "alpha,beta,R\n";
    for (std::size_t i = 0; i < grid.alphas.size(); ++i) {
        for (std::size_t k = 0; k < grid.betas.size(); ++k) {
            out += format_double(grid.alphas[i]) + ',' + format_double(grid.betas[k]) + ',' +
                   format_double(grid.ratios[i][k]) + '\n';
        }
    }
    return out;
}

std::string grid_to_ppm(const EntropyGrid& grid, int cell_pixels)
{
    if (cell_pixels < 1) {
        throw ValidationError("cell size must be >= 1 pixel");
    }
    const auto cols = grid.betas.size();
    const auto rows = grid.alphas.size();
    const auto px = static_cast<std::size_t>(cell_pixels);
    std::string out = "P6\n" + std::to_string(cols * px) + " " + std::to_string(rows * px) +
                      "\n255\n";
    // top row is alpha = 0, columns run over increasing beta
    for (std::size_t r = 0; r < rows * px; ++r) {
        const std::size_t i = rows - 1 - r / px;
        for (std::size_t c = 0; c < cols * px; ++c) {
            const double d = std::clamp(grid.ratios[i][c / px] - 1.0, -1.0, 1.0);
            unsigned char rgb[3];
            if (d < 0.0) {
                const auto v = static_cast<unsigned char>(std::lround(255.0 * (1.0 + d)));
                rgb[0] = v;
                rgb[1] = v;
                rgb[2] = 255;
            }
            else {
                const auto v = static_cast<unsigned char>(std::lround(255.0 * (1.0 - d)));
                rgb[0] = 255;
                rgb[1] = v;
                rgb[2] = v;
            }
            out.append(reinterpret_cast<const char*>(rgb), 3);
        }
    }
    return out;
}

} // namespace pmsm::io
