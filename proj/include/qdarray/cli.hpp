#pragma once

// Command layer: JSON run configurations, the subcommands and their exit
// codes.
//
// A run configuration is one JSON document. Physical quantities are given
// either as a bare number in the default unit of the field or as
// {"value": v, "unit": "..."}. Relative input paths resolve against the
// directory of the configuration file, output paths against --out.

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace qdarray::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 2,     // invalid configuration or input content
  kExitIo = 3,         // file could not be read or written
  kExitNumerical = 4,  // fit or solver failure
};

/// Missing, mistyped or out-of-range configuration field.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// simulate-diagram, simulate-honeycomb, fit-g, fit-hamiltonian,
/// extract-energies, convert, geometry-sweep
const std::vector<std::string>& command_names();

struct GlobalOptions {
  std::filesystem::path config;       // empty: no configuration file
  std::optional<std::uint64_t> seed;  // overrides the configuration
  std::filesystem::path out = ".";
  int threads = 1;                    // 0: hardware concurrency
  std::optional<std::string> direction;  // convert
  std::optional<std::string> method;     // fit-g
};

struct RunConfig {
  std::string mode;
  nlohmann::json doc = nlohmann::json::object();
  std::filesystem::path base_dir = ".";
  std::filesystem::path out_dir = ".";
  std::uint64_t seed = 0;
  int threads = 1;
  std::optional<std::string> direction;
  std::optional<std::string> method;

  /// Required input path, resolved against base_dir.
  std::filesystem::path input(const std::string& key) const;
  /// Output path from `key` or `fallback`, resolved against out_dir.
  std::filesystem::path output(const std::string& key, const std::string& fallback) const;
};

/// Reads and checks the configuration file; command-line flags override
/// the document.
RunConfig load_config(const std::string& mode, const GlobalOptions& options);

/// Same, from an in-memory document.
RunConfig make_config(const std::string& mode, nlohmann::json doc,
                      const std::filesystem::path& base_dir, const GlobalOptions& options);

enum class Quantity { Energy, Temperature, Capacitance, Length, Voltage, LeverArm };

/// Value in library units (ueV, K, aF, nm, mV, ueV/mV). `field` names the
/// entry in error messages.
double quantity(const nlohmann::json& value, Quantity kind, const std::string& field);

struct CommandResult {
  std::vector<std::filesystem::path> files;
  std::vector<std::string> warnings;
  nlohmann::json report = nlohmann::json::object();
};

CommandResult cmd_simulate_diagram(const RunConfig& cfg);
CommandResult cmd_simulate_honeycomb(const RunConfig& cfg);
/// Method "shift-tanh" (default) or "curvature".
CommandResult cmd_fit_g(const RunConfig& cfg);
CommandResult cmd_fit_hamiltonian(const RunConfig& cfg);
CommandResult cmd_extract_energies(const RunConfig& cfg);
/// Direction "energies-to-capacitances" or "capacitances-to-energies";
/// inferred from the input document when not given.
CommandResult cmd_convert(const RunConfig& cfg);
CommandResult cmd_geometry_sweep(const RunConfig& cfg);

CommandResult dispatch(const RunConfig& cfg);

/// Loads the configuration, runs the command, lists written files on `out`
/// and warnings or the error on `err`. Returns the exit code.
int run(const std::string& mode, const GlobalOptions& options, std::ostream& out,
        std::ostream& err);

}  // namespace qdarray::cli
