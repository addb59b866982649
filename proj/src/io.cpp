#include "qdarray/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace qdarray::io {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

double parse_number(std::string_view field, int line) {
  while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
  while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r'))
    field.remove_suffix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (field.empty() || ec != std::errc() || ptr != field.data() + field.size() || !std::isfinite(v))
    throw ParseError("line " + std::to_string(line) + ": '" + std::string(field) +
                     "' is not a finite number");
  return v;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

diagram::Axis axis_from_coords(const std::vector<double>& c, const std::string& name) {
  if (c.size() < 2) throw ParseError(name + " axis needs at least 2 points");
  diagram::Axis a{name, c.front(), c.back(), static_cast<int>(c.size()), "mV"};
  const double span = std::abs(a.stop - a.start);
  if (!(span > 0.0)) throw ParseError(name + " axis has zero extent");
  for (int i = 0; i < a.npoints; ++i)
    if (std::abs(c[static_cast<std::size_t>(i)] - a.at(i)) > 1e-9 * span)
      throw ParseError(name + " axis is not uniformly spaced");
  return a;
}

json axis_json(const diagram::Axis& a) {
  return {{"name", a.name}, {"start", a.start}, {"stop", a.stop}, {"npoints", a.npoints},
          {"units", a.units}};
}

std::array<double, 4> four(const json& v, const std::string& key) {
  if (!v.is_array() || v.size() != 4) throw ParseError("'" + key + "' must hold 4 numbers");
  return v.get<std::array<double, 4>>();
}

std::array<double, 3> three(const json& v, const std::string& key) {
  if (!v.is_array() || v.size() != 3) throw ParseError("'" + key + "' must hold 3 numbers");
  return v.get<std::array<double, 3>>();
}

std::optional<capnet::Seven> seven_sigma(const json& doc, const std::string& k4,
                                         const std::string& k3) {
  if (!doc.contains(k4) && !doc.contains(k3)) return std::nullopt;
  if (!doc.contains(k4) || !doc.contains(k3))
    throw ParseError("'" + k4 + "' and '" + k3 + "' must be given together");
  const auto a = four(doc.at(k4), k4);
  const auto b = three(doc.at(k3), k3);
  return capnet::Seven{a[0], a[1], a[2], a[3], b[0], b[1], b[2]};
}

void check_units(const json& doc, const std::string& expected) {
  if (doc.contains("units") && doc.at("units") != expected)
    throw ParseError("units must be '" + expected + "'");
}

}  // namespace

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string grid_to_csv(const diagram::DiagramGrid& grid) {
  diagram::validate(grid);
  std::string out = "y\\x";
  for (int i = 0; i < grid.axis_x.npoints; ++i) out += "," + format_number(grid.axis_x.at(i));
  out += '\n';
  for (int r = 0; r < grid.axis_y.npoints; ++r) {
    out += format_number(grid.axis_y.at(r));
    for (int c = 0; c < grid.axis_x.npoints; ++c) out += "," + format_number(grid.values(r, c));
    out += '\n';
  }
  return out;
}

diagram::DiagramGrid grid_from_csv(const std::string& text) {
  std::vector<std::string_view> lines;
  std::string_view rest(text);
  while (!rest.empty()) {
    const std::size_t nl = rest.find('\n');
    std::string_view line = rest.substr(0, nl);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!line.empty()) lines.push_back(line);
    if (nl == std::string_view::npos) break;
    rest.remove_prefix(nl + 1);
  }
  if (lines.size() < 3) throw ParseError("CSV needs a header and at least 2 rows");

  const auto header = split(lines[0]);
  std::vector<double> xs;
  for (std::size_t i = 1; i < header.size(); ++i) xs.push_back(parse_number(header[i], 1));
  const std::size_t nx = xs.size();

  std::vector<double> ys;
  Eigen::MatrixXd values(static_cast<Eigen::Index>(lines.size() - 1), static_cast<Eigen::Index>(nx));
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto fields = split(lines[r]);
    const int line_no = static_cast<int>(r + 1);
    if (fields.size() != nx + 1)
      throw ParseError("line " + std::to_string(line_no) + ": expected " + std::to_string(nx + 1) +
                       " fields, found " + std::to_string(fields.size()));
    ys.push_back(parse_number(fields[0], line_no));
    for (std::size_t c = 0; c < nx; ++c)
      values(static_cast<Eigen::Index>(r - 1), static_cast<Eigen::Index>(c)) =
          parse_number(fields[c + 1], line_no);
  }
  diagram::DiagramGrid grid;
  grid.axis_x = axis_from_coords(xs, "x");
  grid.axis_y = axis_from_coords(ys, "y");
  grid.values = std::move(values);
  return grid;
}

json sidecar(const diagram::DiagramGrid& grid, const json& params, std::uint64_t seed) {
  return {
      {"axes", {{"x", axis_json(grid.axis_x)}, {"y", axis_json(grid.axis_y)}}},
      {"units",
       {{"x", grid.axis_x.units},
        {"y", grid.axis_y.units},
        {"signal", "arb"},
        {"energy", "ueV"},
        {"capacitance", "aF"},
        {"temperature", "K"}}},
      {"params", params},
      {"seed", seed},
      {"version", kVersion},
      {"meta", grid.meta},
  };
}

fs::path sidecar_path(const fs::path& csv) {
  fs::path p = csv;
  p.replace_extension(".json");
  return p;
}

void write_grid(const diagram::DiagramGrid& grid, const fs::path& csv, const json& params,
                std::uint64_t seed) {
  write_text(csv, grid_to_csv(grid));
  write_json(sidecar_path(csv), sidecar(grid, params, seed));
}

diagram::DiagramGrid read_grid(const fs::path& csv) {
  diagram::DiagramGrid grid = grid_from_csv(read_text(csv));
  const fs::path side = sidecar_path(csv);
  if (!fs::exists(side)) return grid;
  const json doc = read_json(side);
  try {
    const json& axes = doc.at("axes");
    for (auto [key, axis] : {std::pair{"x", &grid.axis_x}, std::pair{"y", &grid.axis_y}}) {
      const json& a = axes.at(key);
      if (a.at("npoints").get<int>() != axis->npoints)
        throw ParseError(std::string("sidecar ") + key + " axis length disagrees with the CSV");
      axis->name = a.at("name").get<std::string>();
      axis->units = a.at("units").get<std::string>();
    }
    if (doc.contains("meta")) grid.meta = doc.at("meta");
  } catch (const json::exception& e) {
    throw ParseError("sidecar " + side.string() + ": " + e.what());
  }
  return grid;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("failed reading " + path.string());
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  out.flush();
  if (!out) throw IoError("failed writing " + path.string());
}

json read_json(const fs::path& path) {
  const std::string text = read_text(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const json& doc) { write_text(path, doc.dump(2) + "\n"); }

json parameter_record(const std::string& name, double value, double sigma, const std::string& unit,
                      const std::vector<double>& covariance) {
  return {{"parameter", name}, {"value", value}, {"sigma", sigma}, {"unit", unit},
          {"covariance", covariance}};
}

json matrix_json(const fit::Matrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      row.push_back(std::isfinite(m(r, c)) ? json(m(r, c)) : json(nullptr));
    rows.push_back(row);
  }
  return rows;
}

json energies_json(const capnet::ElectrostaticEnergies& en) {
  json doc = {{"E_C", en.e_c}, {"E_Cij", en.e_cc}, {"units", "ueV"}};
  if (en.sigma) {
    const auto& s = *en.sigma;
    doc["sigma_E_C"] = {s[0], s[1], s[2], s[3]};
    doc["sigma_E_Cij"] = {s[4], s[5], s[6]};
  }
  return doc;
}

capnet::ElectrostaticEnergies energies_from_json(const json& doc) {
  try {
    check_units(doc, "ueV");
    capnet::ElectrostaticEnergies en;
    en.e_c = four(doc.at("E_C"), "E_C");
    en.e_cc = three(doc.at("E_Cij"), "E_Cij");
    en.sigma = seven_sigma(doc, "sigma_E_C", "sigma_E_Cij");
    return en;
  } catch (const json::exception& e) {
    throw ParseError(std::string("energies document: ") + e.what());
  }
}

json capacitances_json(const capnet::CapacitanceEstimate& est) {
  json doc = {{"C", est.net.c_total}, {"C_ij", est.net.c_inter}, {"units", "aF"}};
  if (est.sigma) {
    const auto& s = *est.sigma;
    doc["sigma_C"] = {s[0], s[1], s[2], s[3]};
    doc["sigma_C_ij"] = {s[4], s[5], s[6]};
  }
  return doc;
}

capnet::CapacitanceEstimate capacitances_from_json(const json& doc) {
  try {
    check_units(doc, "aF");
    capnet::CapacitanceEstimate est;
    est.net.c_total = four(doc.at("C"), "C");
    est.net.c_inter = three(doc.at("C_ij"), "C_ij");
    est.sigma = seven_sigma(doc, "sigma_C", "sigma_C_ij");
    return est;
  } catch (const json::exception& e) {
    throw ParseError(std::string("capacitances document: ") + e.what());
  }
}

}  // namespace qdarray::io
