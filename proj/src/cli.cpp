#include "qdarray/cli.hpp"

#include "qdarray/capnet.hpp"
#include "qdarray/diagram.hpp"
#include "qdarray/fitters.hpp"
#include "qdarray/geometry.hpp"
#include "qdarray/hamiltonian.hpp"
#include "qdarray/io.hpp"
#include "qdarray/transitions.hpp"
#include "qdarray/units.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

namespace qdarray::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

const json& require(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object() || !obj.contains(key))
    throw ConfigError("missing required field '" + join(path, key) + "'");
  return obj.at(key);
}

const json* find(const json& obj, const std::string& key) {
  if (!obj.is_object()) return nullptr;
  const auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

double number(const json& v, const std::string& field) {
  if (!v.is_number()) throw ConfigError("'" + field + "' must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ConfigError("'" + field + "' must be finite");
  return x;
}

int integer(const json& v, const std::string& field) {
  if (!v.is_number_integer()) throw ConfigError("'" + field + "' must be an integer");
  return v.get<int>();
}

bool boolean(const json& v, const std::string& field) {
  if (!v.is_boolean()) throw ConfigError("'" + field + "' must be true or false");
  return v.get<bool>();
}

std::string text(const json& v, const std::string& field) {
  if (!v.is_string()) throw ConfigError("'" + field + "' must be a string");
  return v.get<std::string>();
}

template <std::size_t N>
std::array<double, N> numbers(const json& v, const std::string& field) {
  if (!v.is_array() || v.size() != N)
    throw ConfigError("'" + field + "' must be an array of " + std::to_string(N) + " numbers");
  std::array<double, N> out{};
  for (std::size_t i = 0; i < N; ++i)
    out[i] = number(v[i], field + "[" + std::to_string(i) + "]");
  return out;
}

double number_or(const json& obj, const std::string& key, const std::string& path, double fallback) {
  const json* v = find(obj, key);
  return v ? number(*v, join(path, key)) : fallback;
}

double quantity_or(const json& obj, const std::string& key, Quantity kind, const std::string& path,
                   double fallback) {
  const json* v = find(obj, key);
  return v ? quantity(*v, kind, join(path, key)) : fallback;
}

capnet::Matrix4 matrix4(const json& v, const std::string& field) {
  if (!v.is_array() || v.size() != 4) throw ConfigError("'" + field + "' must be a 4x4 array");
  capnet::Matrix4 m;
  for (int r = 0; r < 4; ++r) {
    const auto row = numbers<4>(v[static_cast<std::size_t>(r)], field + "[" + std::to_string(r) + "]");
    for (int c = 0; c < 4; ++c) m(r, c) = row[static_cast<std::size_t>(c)];
  }
  return m;
}

capnet::SourceVoltages voltages(const json& v, const std::string& field) {
  capnet::SourceVoltages out;
  if (const json* g = find(v, "v_gate")) out.v_gate = numbers<4>(*g, join(field, "v_gate"));
  if (const json* o = find(v, "v_ohmic")) out.v_ohmic = numbers<2>(*o, join(field, "v_ohmic"));
  return out;
}

json voltages_json(const capnet::SourceVoltages& v) {
  return {{"v_gate", v.v_gate}, {"v_ohmic", v.v_ohmic}};
}

diagram::Axis axis(const json& v, const std::string& field, const std::string& default_name) {
  diagram::Axis a;
  a.name = default_name;
  if (const json* n = find(v, "name")) a.name = text(*n, join(field, "name"));
  a.start = quantity(require(v, "start", field), Quantity::Voltage, join(field, "start"));
  a.stop = quantity(require(v, "stop", field), Quantity::Voltage, join(field, "stop"));
  a.npoints = integer(require(v, "npoints", field), join(field, "npoints"));
  if (a.npoints < 2) throw ConfigError("'" + join(field, "npoints") + "' must be >= 2");
  if (a.start == a.stop) throw ConfigError("'" + field + "' has zero extent");
  return a;
}

capnet::CapacitanceNetwork network(const json& v, const std::string& field) {
  if (const json* u = find(v, "units"); u && *u != "aF")
    throw ConfigError("'" + join(field, "units") + "' must be \"aF\"");
  capnet::CapacitanceNetwork net;
  net.c_total = numbers<4>(require(v, "C", field), join(field, "C"));
  net.c_inter = numbers<3>(require(v, "C_ij", field), join(field, "C_ij"));
  if (const json* g = find(v, "C_g")) net.c_gate = numbers<4>(*g, join(field, "C_g"));
  if (const json* o = find(v, "C_o")) net.c_ohmic = numbers<2>(*o, join(field, "C_o"));
  capnet::validate(net);
  return net;
}

diagram::LeverArmSet lever_arms(const json& v, const std::string& field) {
  diagram::LeverArmSet lv;
  if (const json* a = find(v, "alpha")) {
    lv.alpha = matrix4(*a, join(field, "alpha"));
    if (const json* s = find(v, "sigma")) lv.sigma = matrix4(*s, join(field, "sigma"));
  } else {
    lv = diagram::LeverArmSet::from_detuning(
        quantity(require(v, "left", field), Quantity::LeverArm, join(field, "left")),
        quantity(require(v, "right", field), Quantity::LeverArm, join(field, "right")));
  }
  diagram::validate(lv);
  return lv;
}

fitters::Window window(const json& v, const std::string& field) {
  fitters::Window w;
  w.x_min = quantity(require(v, "x_min", field), Quantity::Voltage, join(field, "x_min"));
  w.x_max = quantity(require(v, "x_max", field), Quantity::Voltage, join(field, "x_max"));
  w.y_min = quantity(require(v, "y_min", field), Quantity::Voltage, join(field, "y_min"));
  w.y_max = quantity(require(v, "y_max", field), Quantity::Voltage, join(field, "y_max"));
  if (!(w.x_max > w.x_min) || !(w.y_max > w.y_min))
    throw ConfigError("'" + field + "' needs x_max > x_min and y_max > y_min");
  return w;
}

fitters::TrackOptions track_options(const json& doc) {
  fitters::TrackOptions t;
  const json* v = find(doc, "track");
  if (!v) return t;
  if (const json* h = find(*v, "half_window")) t.half_window = integer(*h, "track.half_window");
  if (t.half_window < 0) throw ConfigError("'track.half_window' must be >= 0");
  if (const json* s = find(*v, "step_term")) t.step_term = boolean(*s, "track.step_term");
  if (const json* c = find(*v, "companion")) t.companion = boolean(*c, "track.companion");
  return t;
}

void append_meta_warnings(const json& meta, std::vector<std::string>& warnings) {
  if (const json* w = find(meta, "warnings"); w && w->is_array())
    for (const auto& s : *w)
      if (s.is_string()) warnings.push_back(s.get<std::string>());
}

void write_json_output(const fs::path& path, const json& doc, CommandResult& result) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  io::write_json(path, doc);
  result.files.push_back(path);
}

void write_grid_output(const diagram::DiagramGrid& grid, const fs::path& path, const json& params,
                       std::uint64_t seed, CommandResult& result) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  io::write_grid(grid, path, params, seed);
  result.files.push_back(path);
  result.files.push_back(io::sidecar_path(path));
}

json energy_pair(double value_ueV, double sigma_ueV) {
  return {{"ueV", value_ueV},
          {"sigma_ueV", sigma_ueV},
          {"GHz", units::ueV_to_GHz(value_ueV)},
          {"sigma_GHz", units::ueV_to_GHz(sigma_ueV)}};
}

std::vector<double> covariance_row(const fit::Matrix& cov, int row, double scale) {
  std::vector<double> out;
  if (row < 0 || row >= cov.rows()) return out;
  for (Eigen::Index c = 0; c < cov.cols(); ++c) out.push_back(cov(row, c) * scale);
  return out;
}

// Records in ueV and in GHz for one energy parameter.
void energy_records(json& list, const std::string& name, double value, double sigma,
                    const fit::Matrix& cov, int row) {
  const double h = units::kPlanckUeVPerGHz;
  list.push_back(io::parameter_record(name, value, sigma, "ueV", covariance_row(cov, row, 1.0)));
  list.push_back(io::parameter_record(name, value / h, sigma / h, "GHz",
                                      covariance_row(cov, row, 1.0 / (h * h))));
}

// Polarization diagram plus the forward-model context needed to fit it.
struct PolarizationInput {
  diagram::DiagramGrid grid;
  diagram::LeverArmSet lever_arms;
  capnet::SourceVoltages v0;
  std::optional<double> t_e;
  diagram::SensorModel sensor;
  std::string source;  // input path as written in the configuration
};

PolarizationInput load_polarization(const RunConfig& cfg) {
  PolarizationInput in;
  in.source = text(require(cfg.doc, "input", ""), "input");
  in.grid = io::read_grid(cfg.input("input"));
  const json& meta = in.grid.meta;
  try {
    if (const json* lv = find(cfg.doc, "lever_arms")) {
      in.lever_arms = lever_arms(*lv, "lever_arms");
    } else if (const json* m = find(meta, "lever_arms")) {
      in.lever_arms = diagram::LeverArmSet::from_detuning(m->at("alpha_l_ueV_per_mV").get<double>(),
                                                          m->at("alpha_r_ueV_per_mV").get<double>());
      diagram::validate(in.lever_arms);
    } else {
      throw ConfigError("missing required field 'lever_arms' (absent from the diagram sidecar)");
    }
    if (const json* v = find(cfg.doc, "v0"))
      in.v0 = voltages(*v, "v0");
    else if (const json* m = find(meta, "v0"))
      in.v0 = voltages(*m, "sidecar meta.v0");
    if (const json* t = find(cfg.doc, "t_e"))
      in.t_e = quantity(*t, Quantity::Temperature, "t_e");
    else if (const json* p = find(meta, "params"); p && p->contains("t_e_K"))
      in.t_e = p->at("t_e_K").get<double>();
    const json* s = find(cfg.doc, "sensor");
    if (!s) s = find(meta, "sensor");
    if (s) {
      in.sensor.beta_l = number_or(*s, "beta_l", "sensor", 1.0);
      in.sensor.beta_r = number_or(*s, "beta_r", "sensor", 1.0);
      in.sensor.background = number_or(*s, "background", "sensor", 0.0);
    }
  } catch (const json::exception& e) {
    throw io::ParseError("diagram sidecar of " + in.source + ": " + e.what());
  }
  return in;
}

double detuning_pixel(const PolarizationInput& in) {
  return std::max(std::abs(in.grid.axis_x.step()) * in.lever_arms.detuning_left(),
                  std::abs(in.grid.axis_y.step()) * in.lever_arms.detuning_right());
}

json track_summary(const fitters::LineTrack& t) {
  return {{"points", t.size()}, {"truncated", t.truncated}, {"warning", t.warning}};
}

void track_warnings(const fitters::PolarizationLines& lines, std::vector<std::string>& warnings) {
  for (const auto* t : {&lines.left, &lines.right})
    if (!t->warning.empty()) warnings.push_back(t->warning);
}

json base_report(const RunConfig& cfg, const std::string& method) {
  return {{"command", cfg.mode}, {"method", method}, {"version", io::kVersion}, {"seed", cfg.seed}};
}

CommandResult fit_shift(const RunConfig& cfg) {
  CommandResult result;
  const PolarizationInput in = load_polarization(cfg);
  const auto track = track_options(cfg.doc);
  const auto lines =
      fitters::to_detuning(fitters::locate_polarization_lines(in.grid, track), in.lever_arms, in.v0);
  track_warnings(lines, result.warnings);

  std::string which = "both";
  if (const json* l = find(cfg.doc, "line")) which = text(*l, "line");
  if (which != "both" && which != "left" && which != "right")
    throw ConfigError("'line' must be \"left\", \"right\" or \"both\"");

  json per_line = json::object();
  std::vector<std::string> failures;
  double wsum = 0.0, wg = 0.0;
  std::vector<std::pair<double, double>> estimates;
  for (const auto& [name, t] : {std::pair<std::string, const fitters::LineTrack*>{"left", &lines.left},
                                {"right", &lines.right}}) {
    if (which != "both" && which != name) continue;
    if (t->size() < 8) {
      failures.push_back(name + " line: only " + std::to_string(t->size()) + " centre points tracked");
      continue;
    }
    try {
      const auto f = fitters::fit_shift_tanh(*t);
      json entry = {{"g", energy_pair(f.g, f.g_sigma)},
                    {"center_ueV", f.center},
                    {"transition_ueV", f.transition},
                    {"width_ueV", f.width},
                    {"low_confidence", f.low_confidence},
                    {"covariance", io::matrix_json(f.covariance)},
                    {"covariance_order", {"center", "g", "transition", "width"}},
                    {"track", track_summary(*t)}};
      per_line[name] = entry;
      if (f.low_confidence) result.warnings.push_back(name + " line: shift-tanh fit is low confidence");
      estimates.emplace_back(f.g, f.g_sigma);
    } catch (const std::runtime_error& e) {
      failures.push_back(name + " line: " + e.what());
    }
  }
  if (estimates.empty()) {
    std::string msg = "shift-tanh fit failed";
    for (const auto& f : failures) msg += "; " + f;
    throw std::runtime_error(msg);
  }
  for (const auto& f : failures) result.warnings.push_back(f);

  bool weighted = true;
  for (const auto& [g, s] : estimates) weighted = weighted && s > 0.0 && std::isfinite(s);
  double g = 0.0, sigma = 0.0;
  if (weighted) {
    for (const auto& [gi, si] : estimates) {
      wsum += 1.0 / (si * si);
      wg += gi / (si * si);
    }
    g = wg / wsum;
    sigma = std::sqrt(1.0 / wsum);
  } else {
    for (const auto& [gi, si] : estimates) {
      g += gi / static_cast<double>(estimates.size());
      sigma = std::max(sigma, si);
    }
  }

  json report = base_report(cfg, "shift-tanh");
  report["input"] = in.source;
  report["g"] = energy_pair(g, sigma);
  fit::Matrix cov(1, 1);
  cov(0, 0) = sigma * sigma;
  json params = json::array();
  energy_records(params, "g", g, sigma, cov, 0);
  report["parameters"] = params;
  report["lines"] = per_line;
  report["combination"] = weighted ? "inverse-variance mean" : "mean";
  report["lever_arms"] = {{"alpha_l_ueV_per_mV", in.lever_arms.detuning_left()},
                          {"alpha_r_ueV_per_mV", in.lever_arms.detuning_right()}};
  report["v0"] = voltages_json(in.v0);
  report["warnings"] = result.warnings;
  write_json_output(cfg.output("output", "fit_g.json"), report, result);
  result.report = report;
  return result;
}

CommandResult fit_curvature(const RunConfig& cfg, const std::string& fallback_output) {
  CommandResult result;
  const PolarizationInput in = load_polarization(cfg);
  if (!in.t_e) throw ConfigError("missing required field 't_e' (absent from the diagram sidecar)");
  const auto track = track_options(cfg.doc);

  fitters::CurvatureFitOptions options;
  options.resolution = detuning_pixel(in);
  int bias_rounds = 0;
  if (const json* f = find(cfg.doc, "fit")) {
    options.outlier_threshold = number_or(*f, "outlier_threshold", "fit", options.outlier_threshold);
    if (options.outlier_threshold < 0.0) throw ConfigError("'fit.outlier_threshold' must be >= 0");
    if (const json* w = find(*f, "weighted")) options.weighted = boolean(*w, "fit.weighted");
    if (const json* b = find(*f, "bias_rounds")) bias_rounds = integer(*b, "fit.bias_rounds");
    if (bias_rounds < 0) throw ConfigError("'fit.bias_rounds' must be >= 0");
  }

  diagram::PolarizationDiagramSpec forward;
  forward.params.t_e = *in.t_e;
  forward.lever_arms = in.lever_arms;
  forward.v0 = in.v0;
  forward.sensor = in.sensor;
  forward.threads = cfg.threads;
  const auto r = fitters::fit_hamiltonian_diagram(in.grid, forward, track, options, bias_rounds);
  track_warnings(r.lines, result.warnings);
  const auto& f = r.fit;
  if (f.t_l_upper_bound) result.warnings.push_back("t_L is below the resolution; reported as an upper bound");
  if (f.t_r_upper_bound) result.warnings.push_back("t_R is below the resolution; reported as an upper bound");
  if (f.covariance_singular) result.warnings.push_back("fit covariance is singular");

  json report = base_report(cfg, "curvature");
  report["input"] = in.source;
  report["g"] = energy_pair(f.g, f.g_sigma);
  report["t_l"] = energy_pair(f.t_l, f.t_l_sigma);
  report["t_r"] = energy_pair(f.t_r, f.t_r_sigma);
  report["upper_bound"] = {{"t_l", f.t_l_upper_bound}, {"t_r", f.t_r_upper_bound}};
  json params = json::array();
  energy_records(params, "t_l", f.t_l, f.t_l_sigma, f.covariance, 0);
  params[0]["upper_bound"] = f.t_l_upper_bound;
  params[1]["upper_bound"] = f.t_l_upper_bound;
  energy_records(params, "t_r", f.t_r, f.t_r_sigma, f.covariance, 1);
  params[2]["upper_bound"] = f.t_r_upper_bound;
  params[3]["upper_bound"] = f.t_r_upper_bound;
  energy_records(params, "g", f.g, f.g_sigma, f.covariance, 2);
  report["parameters"] = params;
  report["covariance_ueV2"] = io::matrix_json(f.covariance);
  report["covariance_order"] = {"t_l", "t_r", "g"};
  report["fit"] = {{"t_e_K", *in.t_e},
                   {"resolution_ueV", options.resolution},
                   {"residual_norm_ueV", f.residual_norm},
                   {"rejected_points", f.rejected},
                   {"outlier_threshold", options.outlier_threshold},
                   {"weighted", options.weighted},
                   {"bias_rounds", r.bias_rounds},
                   {"covariance_singular", f.covariance_singular}};
  report["tracks"] = {{"left", track_summary(r.lines.left)}, {"right", track_summary(r.lines.right)}};
  report["lever_arms"] = {{"alpha_l_ueV_per_mV", in.lever_arms.detuning_left()},
                          {"alpha_r_ueV_per_mV", in.lever_arms.detuning_right()}};
  report["v0"] = voltages_json(in.v0);
  report["warnings"] = result.warnings;
  write_json_output(cfg.output("output", fallback_output), report, result);
  result.report = report;
  return result;
}

std::vector<double> sweep_distances(const json& doc) {
  const json* v = find(doc, "distances");
  if (!v) return geometry::default_distances();
  std::vector<double> ds;
  if (v->is_array()) {
    for (std::size_t i = 0; i < v->size(); ++i)
      ds.push_back(quantity((*v)[i], Quantity::Length, "distances[" + std::to_string(i) + "]"));
  } else if (v->is_object()) {
    const double start = quantity(require(*v, "start", "distances"), Quantity::Length, "distances.start");
    const double stop = quantity(require(*v, "stop", "distances"), Quantity::Length, "distances.stop");
    const int count = integer(require(*v, "count", "distances"), "distances.count");
    if (count < 1) throw ConfigError("'distances.count' must be >= 1");
    for (int i = 0; i < count; ++i)
      ds.push_back(count == 1 ? start : start + (stop - start) * i / (count - 1));
  } else {
    throw ConfigError("'distances' must be an array or {start, stop, count}");
  }
  if (ds.empty()) throw ConfigError("'distances' is empty");
  return ds;
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {
      "simulate-diagram", "simulate-honeycomb", "fit-g",          "fit-hamiltonian",
      "extract-energies", "convert",            "geometry-sweep",
  };
  return names;
}

fs::path RunConfig::input(const std::string& key) const {
  const fs::path p = text(require(doc, key, ""), key);
  return p.is_absolute() ? p : base_dir / p;
}

fs::path RunConfig::output(const std::string& key, const std::string& fallback) const {
  fs::path p = fallback;
  if (const json* v = find(doc, key)) p = text(*v, key);
  return p.is_absolute() ? p : out_dir / p;
}

double quantity(const json& value, Quantity kind, const std::string& field) {
  if (value.is_number()) return number(value, field);
  if (!value.is_object() || !value.contains("value") || !value.contains("unit"))
    throw ConfigError("'" + field + "' must be a number or {\"value\", \"unit\"}");
  const double v = number(value.at("value"), field + ".value");
  const std::string unit = text(value.at("unit"), field + ".unit");
  const double h = units::kPlanckUeVPerGHz;
  struct Entry {
    Quantity kind;
    const char* unit;
    double scale;
  };
  static const Entry table[] = {
      {Quantity::Energy, "ueV", 1.0},         {Quantity::Energy, "µeV", 1.0},
      {Quantity::Energy, "meV", 1e3},         {Quantity::Energy, "eV", 1e6},
      {Quantity::Energy, "GHz", h},           {Quantity::Energy, "MHz", h * 1e-3},
      {Quantity::Temperature, "K", 1.0},      {Quantity::Temperature, "mK", 1e-3},
      {Quantity::Capacitance, "aF", 1.0},     {Quantity::Capacitance, "fF", 1e3},
      {Quantity::Length, "nm", 1.0},          {Quantity::Length, "um", 1e3},
      {Quantity::Voltage, "mV", 1.0},         {Quantity::Voltage, "V", 1e3},
      {Quantity::Voltage, "uV", 1e-3},        {Quantity::LeverArm, "ueV/mV", 1.0},
      {Quantity::LeverArm, "meV/V", 1.0},     {Quantity::LeverArm, "eV/V", 1e3},
  };
  for (const auto& e : table)
    if (e.kind == kind && unit == e.unit) return v * e.scale;
  throw ConfigError("'" + field + ".unit': unrecognized unit \"" + unit + "\"");
}

RunConfig make_config(const std::string& mode, json doc, const fs::path& base_dir,
                      const GlobalOptions& options) {
  const auto& names = command_names();
  if (std::find(names.begin(), names.end(), mode) == names.end())
    throw ConfigError("unknown command '" + mode + "'");
  if (!doc.is_object()) throw ConfigError("configuration must be a JSON object");
  if (const json* m = find(doc, "mode"); m && text(*m, "mode") != mode)
    throw ConfigError("'mode' is \"" + m->get<std::string>() + "\" but the command is " + mode);
  RunConfig cfg;
  cfg.mode = mode;
  cfg.base_dir = base_dir.empty() ? fs::path(".") : base_dir;
  cfg.out_dir = options.out.empty() ? fs::path(".") : options.out;
  if (options.threads < 0) throw ConfigError("--threads must be >= 0");
  cfg.threads = options.threads;
  if (options.seed) {
    cfg.seed = *options.seed;
  } else if (const json* s = find(doc, "seed")) {
    if (!s->is_number_unsigned()) throw ConfigError("'seed' must be a non-negative integer");
    cfg.seed = s->get<std::uint64_t>();
  }
  cfg.direction = options.direction;
  if (!cfg.direction)
    if (const json* d = find(doc, "direction")) cfg.direction = text(*d, "direction");
  cfg.method = options.method;
  if (!cfg.method)
    if (const json* m = find(doc, "method")) cfg.method = text(*m, "method");
  cfg.doc = std::move(doc);
  return cfg;
}

RunConfig load_config(const std::string& mode, const GlobalOptions& options) {
  if (options.config.empty()) return make_config(mode, json::object(), ".", options);
  const json doc = io::read_json(options.config);
  fs::path base = options.config.parent_path();
  return make_config(mode, doc, base.empty() ? fs::path(".") : base, options);
}

CommandResult cmd_simulate_diagram(const RunConfig& cfg) {
  const json& doc = cfg.doc;
  diagram::PolarizationDiagramSpec spec;
  const json& p = require(doc, "params", "");
  spec.params.t_l = quantity(require(p, "t_l", "params"), Quantity::Energy, "params.t_l");
  spec.params.t_r = quantity(require(p, "t_r", "params"), Quantity::Energy, "params.t_r");
  spec.params.g = quantity(require(p, "g", "params"), Quantity::Energy, "params.g");
  spec.params.t_e = quantity_or(p, "t_e", Quantity::Temperature, "params", spec.params.t_e);
  hamiltonian::validate(spec.params);

  spec.lever_arms = diagram::LeverArmSet::from_detuning(50.0, 50.0);
  if (const json* lv = find(doc, "lever_arms")) spec.lever_arms = lever_arms(*lv, "lever_arms");
  if (const json* v = find(doc, "v0")) spec.v0 = voltages(*v, "v0");
  if (const json* s = find(doc, "sensor")) {
    spec.sensor.beta_l = number_or(*s, "beta_l", "sensor", 1.0);
    spec.sensor.beta_r = number_or(*s, "beta_r", "sensor", 1.0);
    spec.sensor.noise_sigma = number_or(*s, "noise_sigma", "sensor", 0.0);
    spec.sensor.background = number_or(*s, "background", "sensor", 0.0);
    if (const json* m = find(*s, "sensitivity")) {
      if (!m->is_array() || m->size() != 2)
        throw ConfigError("'sensor.sensitivity' must be a 2x2 array");
      for (int r = 0; r < 2; ++r) {
        const auto row = numbers<2>((*m)[static_cast<std::size_t>(r)],
                                    "sensor.sensitivity[" + std::to_string(r) + "]");
        spec.sensor.sensitivity(r, 0) = row[0];
        spec.sensor.sensitivity(r, 1) = row[1];
      }
    }
    if (spec.sensor.noise_sigma < 0.0) throw ConfigError("'sensor.noise_sigma' must be >= 0");
  }
  spec.seed = cfg.seed;
  spec.threads = cfg.threads;

  const json* ax = find(doc, "axis_x");
  const json* ay = find(doc, "axis_y");
  if (ax || ay) {
    if (!ax || !ay) throw ConfigError("'axis_x' and 'axis_y' must be given together");
    spec.axis_x = axis(*ax, "axis_x", "P1");
    spec.axis_y = axis(*ay, "axis_y", "P4");
  } else {
    const json empty = json::object();
    const json* g = find(doc, "grid");
    const json& grid = g ? *g : empty;
    int npoints = diagram::kDefaultGridPoints;
    if (const json* n = find(grid, "npoints")) npoints = integer(*n, "grid.npoints");
    if (npoints < 2) throw ConfigError("'grid.npoints' must be >= 2");
    const double window = quantity_or(grid, "window", Quantity::Energy, "grid",
                                      diagram::kDefaultDetuningWindow);
    if (!(window > 0.0)) throw ConfigError("'grid.window' must be > 0");
    spec.set_detuning_window(window, npoints);
  }

  CommandResult result;
  const auto grid = diagram::synthesize_polarization_diagram(spec);
  append_meta_warnings(grid.meta, result.warnings);
  write_grid_output(grid, cfg.output("output", "polarization_diagram.csv"), doc, cfg.seed, result);
  result.report = grid.meta;
  return result;
}

CommandResult cmd_simulate_honeycomb(const RunConfig& cfg) {
  const json& doc = cfg.doc;
  diagram::HoneycombSpec spec;
  spec.net = network(require(doc, "network", ""), "network");
  spec.axis_x = axis(require(doc, "axis_x", ""), "axis_x", "P1");
  spec.axis_y = axis(require(doc, "axis_y", ""), "axis_y", "P2");
  if (const json* b = find(doc, "base")) spec.base = voltages(*b, "base");
  spec.t_e = quantity_or(doc, "t_e", Quantity::Temperature, "", spec.t_e);
  if (!(spec.t_e > 0.0)) throw ConfigError("'t_e' must be > 0");
  if (const json* n = find(doc, "n_max")) spec.n_max = integer(*n, "n_max");
  if (spec.n_max < 1) throw ConfigError("'n_max' must be >= 1");
  spec.noise_sigma = number_or(doc, "noise_sigma", "", 0.0);
  if (spec.noise_sigma < 0.0) throw ConfigError("'noise_sigma' must be >= 0");
  spec.seed = cfg.seed;
  spec.threads = cfg.threads;

  CommandResult result;
  const auto grid = diagram::synthesize_honeycomb(spec);
  append_meta_warnings(grid.meta, result.warnings);
  write_grid_output(grid, cfg.output("output", "honeycomb.csv"), doc, cfg.seed, result);
  result.report = grid.meta;
  return result;
}

CommandResult cmd_fit_g(const RunConfig& cfg) {
  const std::string method = cfg.method.value_or("shift-tanh");
  if (method == "shift-tanh") return fit_shift(cfg);
  if (method == "curvature") return fit_curvature(cfg, "fit_g.json");
  throw ConfigError("'method' must be \"shift-tanh\" or \"curvature\", not \"" + method + "\"");
}

CommandResult cmd_fit_hamiltonian(const RunConfig& cfg) {
  if (cfg.method && *cfg.method != "curvature")
    throw ConfigError("fit-hamiltonian only supports method \"curvature\"");
  return fit_curvature(cfg, "fit_hamiltonian.json");
}

CommandResult cmd_extract_energies(const RunConfig& cfg) {
  const json& doc = cfg.doc;
  const json& list = require(doc, "measurements", "");
  if (!list.is_array() || list.empty())
    throw ConfigError("'measurements' must be a non-empty array");

  std::vector<fitters::HoneycombMeasurement> measurements;
  std::vector<std::string> sources;
  for (std::size_t i = 0; i < list.size(); ++i) {
    const std::string field = "measurements[" + std::to_string(i) + "]";
    const json& m = list[i];
    const fs::path p = text(require(m, "input", field), join(field, "input"));
    fitters::HoneycombMeasurement hm;
    hm.grid = io::read_grid(p.is_absolute() ? p : cfg.base_dir / p);
    sources.push_back(p.string());
    const std::string wf = join(field, "windows");
    const json& w = require(m, "windows", field);
    hm.windows.x_first = window(require(w, "x_first", wf), join(wf, "x_first"));
    hm.windows.x_second = window(require(w, "x_second", wf), join(wf, "x_second"));
    hm.windows.x_shifted = window(require(w, "x_shifted", wf), join(wf, "x_shifted"));
    hm.windows.y_first = window(require(w, "y_first", wf), join(wf, "y_first"));
    hm.windows.y_second = window(require(w, "y_second", wf), join(wf, "y_second"));
    hm.windows.y_shifted = window(require(w, "y_shifted", wf), join(wf, "y_shifted"));
    measurements.push_back(std::move(hm));
  }

  diagram::LeverArmSet lv;
  std::string lever_source;
  if (const json* l = find(doc, "lever_arms")) {
    lv = lever_arms(*l, "lever_arms");
    lever_source = "config lever_arms";
  } else if (const json* n = find(doc, "network")) {
    lv = diagram::LeverArmSet::from_network(network(*n, "network"));
    lever_source = "config network";
  } else if (const json* n = find(measurements.front().grid.meta, "network")) {
    capnet::CapacitanceNetwork net;
    try {
      net.c_total = n->at("c_total_aF").get<std::array<double, 4>>();
      net.c_inter = n->at("c_inter_aF").get<std::array<double, 3>>();
      net.c_gate = n->at("c_gate_aF").get<std::array<double, 4>>();
      net.c_ohmic = n->at("c_ohmic_aF").get<std::array<double, 2>>();
    } catch (const json::exception& e) {
      throw io::ParseError("sidecar network of " + sources.front() + ": " + e.what());
    }
    lv = diagram::LeverArmSet::from_network(net);
    lever_source = "sidecar network of " + sources.front();
  } else {
    throw ConfigError("missing required field 'lever_arms' or 'network'");
  }

  const auto en = fitters::extract_energies(measurements, lv);
  json out = io::energies_json(en);
  CommandResult result;
  for (const auto& m : measurements) append_meta_warnings(m.grid.meta, result.warnings);
  write_json_output(cfg.output("output", "energies.json"), out, result);
  result.report = out;
  result.report["lever_arm_source"] = lever_source;
  result.report["inputs"] = sources;
  return result;
}

CommandResult cmd_convert(const RunConfig& cfg) {
  const json in = io::read_json(cfg.input("input"));
  std::string direction;
  if (cfg.direction) {
    direction = *cfg.direction;
  } else if (in.is_object() && in.contains("E_C") && !in.contains("C")) {
    direction = "energies-to-capacitances";
  } else if (in.is_object() && in.contains("C") && !in.contains("E_C")) {
    direction = "capacitances-to-energies";
  } else {
    throw ConfigError("missing required field 'direction'");
  }

  CommandResult result;
  json out;
  std::string fallback;
  if (direction == "energies-to-capacitances") {
    const auto en = io::energies_from_json(in);
    out = io::capacitances_json(capnet::capacitances_from_energies(en));
    fallback = "capacitances.json";
  } else if (direction == "capacitances-to-energies") {
    const auto est = io::capacitances_from_json(in);
    out = io::energies_json(capnet::energies_from_capacitances(est.net, est.sigma));
    fallback = "energies.json";
  } else {
    throw ConfigError("'direction' must be \"energies-to-capacitances\" or "
                      "\"capacitances-to-energies\", not \"" + direction + "\"");
  }
  write_json_output(cfg.output("output", fallback), out, result);
  result.report = out;
  return result;
}

CommandResult cmd_geometry_sweep(const RunConfig& cfg) {
  const json& doc = cfg.doc;
  geometry::DiscPairGeometry g;
  g.diameter = quantity_or(doc, "diameter", Quantity::Length, "", g.diameter);
  g.depth = quantity_or(doc, "depth", Quantity::Length, "", g.depth);
  g.epsilon_r = number_or(doc, "epsilon_r", "", g.epsilon_r);
  int panels = geometry::kDefaultPanels;
  if (const json* p = find(doc, "panels")) panels = integer(*p, "panels");
  if (panels < geometry::kMinPanels)
    throw ConfigError("'panels' must be >= " + std::to_string(geometry::kMinPanels));
  const std::vector<double> ds = sweep_distances(doc);
  g.center_distance = ds.front();
  geometry::validate(g);

  const auto rows = geometry::sweep_distance(g, ds, panels, cfg.threads);

  CommandResult result;
  std::ostringstream csv;
  csv << "d_nm,C_ij_aF,C_i_screened_aF,C_i_unscreened_aF\n";
  std::vector<double> d, cs, cu;
  json table = json::array();
  for (const auto& r : rows) {
    csv << io::format_number(r.d) << ',' << io::format_number(r.c_mutual_screened) << ','
        << io::format_number(r.c_self_screened) << ',' << io::format_number(r.c_self_unscreened)
        << '\n';
    d.push_back(r.d);
    cs.push_back(r.c_mutual_screened);
    cu.push_back(r.c_mutual_unscreened);
  }
  const fs::path table_path = cfg.output("output", "geometry_sweep.csv");
  if (table_path.has_parent_path()) fs::create_directories(table_path.parent_path());
  io::write_text(table_path, csv.str());
  result.files.push_back(table_path);

  json report = {{"command", cfg.mode},
                 {"version", io::kVersion},
                 {"geometry",
                  {{"diameter_nm", g.diameter},
                   {"depth_nm", g.depth},
                   {"epsilon_r", g.epsilon_r},
                   {"panels_requested", panels}}},
                 {"distances_nm", d},
                 {"C_ij_screened_aF", cs},
                 {"C_ij_unscreened_aF", cu}};
  if (rows.size() >= 5) {
    const auto screened = geometry::power_law_fit(d, cs);
    const auto unscreened = geometry::power_law_fit(d, cu);
    report["power_law"] = {
        {"screened", {{"exponent", screened.exponent}, {"exponent_sigma", screened.exponent_sigma},
                      {"prefactor_aF", screened.prefactor}}},
        {"unscreened", {{"exponent", unscreened.exponent}, {"exponent_sigma", unscreened.exponent_sigma},
                        {"prefactor_aF", unscreened.prefactor}}},
        {"model", "C_ij = prefactor * d_nm^exponent"}};
  } else {
    result.warnings.push_back(std::to_string(rows.size()) +
                              "-point sweep: no power-law fit (needs at least 5 points)");
  }
  bool check = true;
  if (const json* c = find(doc, "single_disc_check")) check = boolean(*c, "single_disc_check");
  if (check) {
    const double bem = geometry::single_disc_capacitance(g.diameter, g.epsilon_r, g.depth, false, panels);
    const double analytic = geometry::analytic_disc_capacitance(g.diameter, g.epsilon_r);
    report["single_disc_unscreened"] = {
        {"bem_aF", bem}, {"analytic_aF", analytic}, {"relative_error", (bem - analytic) / analytic}};
  }
  report["warnings"] = result.warnings;
  write_json_output(cfg.output("report", "geometry_report.json"), report, result);
  result.report = report;
  return result;
}

CommandResult dispatch(const RunConfig& cfg) {
  if (cfg.mode == "simulate-diagram") return cmd_simulate_diagram(cfg);
  if (cfg.mode == "simulate-honeycomb") return cmd_simulate_honeycomb(cfg);
  if (cfg.mode == "fit-g") return cmd_fit_g(cfg);
  if (cfg.mode == "fit-hamiltonian") return cmd_fit_hamiltonian(cfg);
  if (cfg.mode == "extract-energies") return cmd_extract_energies(cfg);
  if (cfg.mode == "convert") return cmd_convert(cfg);
  if (cfg.mode == "geometry-sweep") return cmd_geometry_sweep(cfg);
  throw ConfigError("unknown command '" + cfg.mode + "'");
}

int run(const std::string& mode, const GlobalOptions& options, std::ostream& out,
        std::ostream& err) {
  try {
    const RunConfig cfg = load_config(mode, options);
    fs::create_directories(cfg.out_dir);
    const CommandResult result = dispatch(cfg);
    for (const auto& w : result.warnings) err << "warning: " << w << '\n';
    for (const auto& f : result.files) out << f.string() << '\n';
    return kExitOk;
  } catch (const io::IoError& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const json::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const fit::FitError& e) {
    err << "error: fit did not converge: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumerical;
  }
}

}  // namespace qdarray::cli
