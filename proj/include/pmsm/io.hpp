#pragma once

#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "pmsm/converter.hpp"
#include "pmsm/energy.hpp"
#include "pmsm/entropy.hpp"
#include "pmsm/model.hpp"
#include "pmsm/runtime.hpp"

namespace pmsm::io {

inline constexpr int kFormatVersion = 1;

/// Tensors serialize as {"shape": [...], "data": [...]} with shortest
/// round-trip decimals. With `exact` the record also carries "hex": C99
/// hex-float strings, which take precedence when loading.
nlohmann::json tensor_to_json(const Tensor& t, bool exact = true);
Tensor tensor_from_json(const nlohmann::json& j);

nlohmann::json quant_to_json(const QuantParams& q);
QuantParams quant_from_json(const nlohmann::json& j);

nlohmann::json ann_to_json(const AnnModel& model, bool exact = true);
AnnModel ann_from_json(const nlohmann::json& j);
nlohmann::json snn_to_json(const SnnModel& model, bool exact = true);
SnnModel snn_from_json(const nlohmann::json& j);

using AnyModel = std::variant<AnnModel, SnnModel>;

/// Reads a model file of either kind; throws IoError / ValidationError.
AnyModel load_model(const std::filesystem::path& path);
AnnModel load_ann(const std::filesystem::path& path);
SnnModel load_snn(const std::filesystem::path& path);
void save_model(const std::filesystem::path& path, const AnnModel& model, bool exact = true);
void save_model(const std::filesystem::path& path, const SnnModel& model, bool exact = true);

nlohmann::json read_json(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

/// Comma-separated decimals, one sample per row.
std::vector<std::vector<float>> read_csv_rows(const std::filesystem::path& path, bool header);
std::string rows_to_csv(const std::vector<std::vector<float>>& rows);

nlohmann::json run_report_to_json(const RunReport& report, bool include_spikes);
nlohmann::json equivalence_to_json(const EquivalenceReport& report, double tolerance);
nlohmann::json energy_to_json(const EnergyReport& report);
nlohmann::json grid_to_json(const EntropyGrid& grid);
/// Header "alpha,beta,R", alpha-major order.
std::string grid_to_csv(const EntropyGrid& grid);
/// Binary PPM heatmap of R - 1: blue below, white at, red above.
std::string grid_to_ppm(const EntropyGrid& grid, int cell_pixels = 16);

std::string format_double(double value);

} // namespace pmsm::io
