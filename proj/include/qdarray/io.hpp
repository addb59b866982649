#pragma once

// File formats: diagram CSV + JSON sidecar, fit reports, energy and
// capacitance documents.
//
// Diagram CSV: header "y\x,<x_0>,...,<x_{n-1}>", then one row per y value
// "<y_i>,<v_i0>,...". Numbers use %.17g, lines end in '\n'. The sidecar
// lives next to the CSV with the extension replaced by ".json".

#include "qdarray/capnet.hpp"
#include "qdarray/diagram.hpp"
#include "qdarray/least_squares.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace qdarray::io {

inline constexpr const char* kVersion = "1.0.0";

/// The file could not be opened, read or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The content is malformed or inconsistent.
class ParseError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

std::string format_number(double v);

std::string grid_to_csv(const diagram::DiagramGrid& grid);
diagram::DiagramGrid grid_from_csv(const std::string& text);

nlohmann::json sidecar(const diagram::DiagramGrid& grid, const nlohmann::json& params,
                       std::uint64_t seed);

std::filesystem::path sidecar_path(const std::filesystem::path& csv);

/// Writes <csv> and its sidecar.
void write_grid(const diagram::DiagramGrid& grid, const std::filesystem::path& csv,
                const nlohmann::json& params, std::uint64_t seed);

/// Reads the CSV and, when present, the sidecar (axis names, units, meta).
diagram::DiagramGrid read_grid(const std::filesystem::path& csv);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);
nlohmann::json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const nlohmann::json& doc);

/// {"parameter", "value", "sigma", "unit", "covariance"}; covariance holds
/// the parameter's row of the report covariance matrix.
nlohmann::json parameter_record(const std::string& name, double value, double sigma,
                                const std::string& unit, const std::vector<double>& covariance);

nlohmann::json matrix_json(const fit::Matrix& m);

/// {"E_C": [4], "E_Cij": [3], "sigma_E_C": [4], "sigma_E_Cij": [3], "units": "ueV"}
nlohmann::json energies_json(const capnet::ElectrostaticEnergies& en);
capnet::ElectrostaticEnergies energies_from_json(const nlohmann::json& doc);

/// {"C": [4], "C_ij": [3], "sigma_C": [4], "sigma_C_ij": [3], "units": "aF"}
nlohmann::json capacitances_json(const capnet::CapacitanceEstimate& est);
capnet::CapacitanceEstimate capacitances_from_json(const nlohmann::json& doc);

}  // namespace qdarray::io
