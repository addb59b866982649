#include "qdarray/cli.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <map>

int main(int argc, char** argv) {
  namespace cli = qdarray::cli;
  CLI::App app{"Synthesize, fit and convert quantum-dot array data"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config;
  std::uint64_t seed = 0;
  std::string out = ".";
  int threads = 1;
  std::string direction, method;
  auto* seed_opt = app.add_option("--seed", seed, "Random seed (overrides the configuration)");
  app.add_option("--config", config, "JSON run configuration");
  app.add_option("--out", out, "Output directory (created if missing)");
  app.add_option("--threads", threads, "Worker threads; 0 picks the hardware concurrency");

  std::map<std::string, CLI::App*> subs;
  const std::map<std::string, std::string> help = {
      {"simulate-diagram", "Synthesize a two-double-dot polarization diagram"},
      {"simulate-honeycomb", "Synthesize a honeycomb charge-stability diagram"},
      {"fit-g", "Fit the capacitive coupling g of a polarization diagram"},
      {"fit-hamiltonian", "Fit t_L, t_R and g to the curved polarization lines"},
      {"extract-energies", "Extract charging and coupling energies from honeycomb diagrams"},
      {"convert", "Convert between electrostatic energies and capacitances"},
      {"geometry-sweep", "Disc-pair capacitance versus center distance"},
  };
  CLI::Option* direction_opt = nullptr;
  CLI::Option* method_opt = nullptr;
  for (const auto& name : cli::command_names()) {
    auto* sub = app.add_subcommand(name, help.at(name));
    subs[name] = sub;
    if (name == "convert")
      direction_opt = sub->add_option("--direction", direction,
                                      "energies-to-capacitances or capacitances-to-energies");
    if (name == "fit-g") method_opt = sub->add_option("--method", method, "shift-tanh or curvature");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cli::kExitConfig;
  }

  cli::GlobalOptions options;
  options.config = config;
  options.out = out;
  options.threads = threads;
  if (seed_opt->count() > 0) options.seed = seed;
  if (direction_opt && direction_opt->count() > 0) options.direction = direction;
  if (method_opt && method_opt->count() > 0) options.method = method;

  for (const auto& [name, sub] : subs)
    if (sub->parsed()) return cli::run(name, options, std::cout, std::cerr);
  return cli::kExitConfig;
}
