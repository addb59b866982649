#include "qdarray/diagram.hpp"

#include "parallel.hpp"
#include "qdarray/units.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace qdarray::diagram {

namespace {

// Centered differences on the grid, one-sided on the edges.
Eigen::MatrixXd derivative_x(const Eigen::MatrixXd& m, double h) {
  const Eigen::Index nx = m.cols();
  Eigen::MatrixXd d(m.rows(), nx);
  for (Eigen::Index j = 0; j < nx; ++j) {
    const Eigen::Index lo = std::max<Eigen::Index>(j - 1, 0);
    const Eigen::Index hi = std::min<Eigen::Index>(j + 1, nx - 1);
    d.col(j) = (m.col(hi) - m.col(lo)) / (h * static_cast<double>(hi - lo));
  }
  return d;
}

Eigen::MatrixXd derivative_y(const Eigen::MatrixXd& m, double h) {
  return derivative_x(m.transpose(), h).transpose();
}

nlohmann::json voltages_json(const SourceVoltages& v) {
  return {{"v_gate", v.v_gate}, {"v_ohmic", v.v_ohmic}};
}

}  // namespace

LeverArmSet LeverArmSet::from_detuning(double alpha_l, double alpha_r) {
  LeverArmSet lv;
  lv.alpha(0, 0) = alpha_l;
  lv.alpha(3, 3) = alpha_r;
  return lv;
}

LeverArmSet LeverArmSet::from_network(const capnet::CapacitanceNetwork& net) {
  LeverArmSet lv;
  lv.alpha = capnet::gate_lever_arms(net);
  return lv;
}

void validate(const LeverArmSet& lv) {
  if (!lv.alpha.allFinite() || !lv.sigma.allFinite())
    throw std::invalid_argument("lever arms must be finite");
  if (!(lv.detuning_left() > 0.0) || !(lv.detuning_right() > 0.0))
    throw std::invalid_argument("detuning lever arms must be > 0");
}

Detunings detunings_from_voltages(const LeverArmSet& lv, const SourceVoltages& v,
                                  const SourceVoltages& v0) {
  validate(lv);
  return {lv.detuning_left() * (v.v_gate[0] - v0.v_gate[0]),
          lv.detuning_right() * (v.v_gate[3] - v0.v_gate[3])};
}

SourceVoltages voltages_from_detunings(const LeverArmSet& lv, const Detunings& eps,
                                       const SourceVoltages& v0) {
  validate(lv);
  SourceVoltages v = v0;
  v.v_gate[0] = v0.v_gate[0] + eps.eps_l / lv.detuning_left();
  v.v_gate[3] = v0.v_gate[3] + eps.eps_r / lv.detuning_right();
  return v;
}

void validate(const Axis& a) {
  if (a.npoints < 2) throw std::invalid_argument("axis '" + a.name + "' needs npoints >= 2");
  if (!std::isfinite(a.start) || !std::isfinite(a.stop) || a.start == a.stop)
    throw std::invalid_argument("axis '" + a.name + "' needs finite, distinct start and stop");
}

void validate(const DiagramGrid& g) {
  validate(g.axis_x);
  validate(g.axis_y);
  if (g.values.rows() != g.axis_y.npoints || g.values.cols() != g.axis_x.npoints)
    throw std::invalid_argument("diagram values do not match axis sizes");
}

void PolarizationDiagramSpec::set_detuning_window(double half_width, int npoints) {
  validate(lever_arms);
  const double hx = half_width / lever_arms.detuning_left();
  const double hy = half_width / lever_arms.detuning_right();
  axis_x = Axis{"P1", v0.v_gate[0] - hx, v0.v_gate[0] + hx, npoints, "mV"};
  axis_y = Axis{"P4", v0.v_gate[3] - hy, v0.v_gate[3] + hy, npoints, "mV"};
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> polarization_maps(const PolarizationDiagramSpec& spec) {
  validate(spec.axis_x);
  validate(spec.axis_y);
  validate(spec.lever_arms);
  hamiltonian::validate(spec.params);
  const int nx = spec.axis_x.npoints, ny = spec.axis_y.npoints;
  Eigen::MatrixXd pl(ny, nx), pr(ny, nx);
  detail::parallel_for(ny, spec.threads, [&](int iy) {
    hamiltonian::TwoQubitParams p = spec.params;
    SourceVoltages v = spec.v0;
    v.v_gate[3] = spec.axis_y.at(iy);
    for (int ix = 0; ix < nx; ++ix) {
      v.v_gate[0] = spec.axis_x.at(ix);
      const Detunings eps = detunings_from_voltages(spec.lever_arms, v, spec.v0);
      p.eps_l = eps.eps_l;
      p.eps_r = eps.eps_r;
      const auto pol = hamiltonian::thermal_polarization(p);
      pl(iy, ix) = pol.left;
      pr(iy, ix) = pol.right;
    }
  });
  return {std::move(pl), std::move(pr)};
}

DiagramGrid synthesize_polarization_diagram(const PolarizationDiagramSpec& spec) {
  if (spec.sensor.noise_sigma < 0.0) throw std::invalid_argument("noise_sigma must be >= 0");
  const auto [pl, pr] = polarization_maps(spec);
  const double hx = spec.axis_x.step(), hy = spec.axis_y.step();
  const auto& s = spec.sensor.sensitivity;

  DiagramGrid grid;
  grid.axis_x = spec.axis_x;
  grid.axis_y = spec.axis_y;
  grid.values = spec.sensor.beta_l * (s(0, 0) * derivative_x(pl, hx) + s(0, 1) * derivative_x(pr, hx)) +
                spec.sensor.beta_r * (s(1, 0) * derivative_y(pl, hy) + s(1, 1) * derivative_y(pr, hy));
  grid.values.array() += spec.sensor.background;

  const auto& p = spec.params;
  nlohmann::json warnings = nlohmann::json::array();
  const double pixel_l = std::abs(hx) * spec.lever_arms.detuning_left();
  const double pixel_r = std::abs(hy) * spec.lever_arms.detuning_right();
  if (pixel_l > p.t_l / 4.0)
    warnings.push_back("pixel size " + std::to_string(pixel_l) + " ueV exceeds t_L/4");
  if (pixel_r > p.t_r / 4.0)
    warnings.push_back("pixel size " + std::to_string(pixel_r) + " ueV exceeds t_R/4");

  grid.meta = {
      {"kind", "polarization"},
      {"params",
       {{"t_l_ueV", p.t_l}, {"t_r_ueV", p.t_r}, {"g_ueV", p.g}, {"t_e_K", p.t_e}}},
      {"lever_arms",
       {{"alpha_l_ueV_per_mV", spec.lever_arms.detuning_left()},
        {"alpha_r_ueV_per_mV", spec.lever_arms.detuning_right()}}},
      {"v0", voltages_json(spec.v0)},
      {"sensor",
       {{"beta_l", spec.sensor.beta_l},
        {"beta_r", spec.sensor.beta_r},
        {"noise_sigma", spec.sensor.noise_sigma},
        {"background", spec.sensor.background}}},
      {"seed", spec.seed},
      {"warnings", warnings},
  };
  if (spec.sensor.noise_sigma > 0.0)
    grid = add_noise(std::move(grid), spec.sensor.noise_sigma, spec.seed);
  return grid;
}

int gate_index(const std::string& axis_name) {
  if (axis_name.size() == 2 && axis_name[0] == 'P' && axis_name[1] >= '1' && axis_name[1] <= '4')
    return axis_name[1] - '1';
  throw std::invalid_argument("axis name '" + axis_name + "' is not a plunger gate P1..P4");
}

DiagramGrid synthesize_honeycomb(const HoneycombSpec& spec) {
  validate(spec.axis_x);
  validate(spec.axis_y);
  capnet::validate(spec.net);
  if (spec.t_e <= 0.0) throw std::invalid_argument("temperature must be > 0");
  if (spec.noise_sigma < 0.0) throw std::invalid_argument("noise_sigma must be >= 0");
  const int gx = gate_index(spec.axis_x.name);
  const int gy = gate_index(spec.axis_y.name);
  if (gx == gy) throw std::invalid_argument("honeycomb axes must sweep two different gates");

  const capnet::OccupationSolver solver(spec.net, spec.n_max);
  const double kt = units::kelvin_to_ueV(spec.t_e);
  const int nx = spec.axis_x.npoints, ny = spec.axis_y.npoints;
  Eigen::MatrixXd charge(ny, nx);

  detail::parallel_for(ny, spec.threads, [&](int iy) {
    SourceVoltages v = spec.base;
    v.v_gate[gy] = spec.axis_y.at(iy);
    for (int ix = 0; ix < nx; ++ix) {
      v.v_gate[gx] = spec.axis_x.at(ix);
      const capnet::Vector4 q = capnet::induced_charge(spec.net, v);
      const capnet::ChargeState ground = solver.ground_state(q);
      const double u0 = solver.energy(ground, q);
      // Thermal average over the ground state and its +-1 neighbours.
      double z = 0.0, n_avg = 0.0;
      for (int k = 0; k < 81; ++k) {
        capnet::ChargeState s = ground;
        int code = k;
        bool valid = true;
        int total = 0;
        for (int d = 0; d < 4; ++d) {
          s.n[d] += code % 3 - 1;
          code /= 3;
          if (s.n[d] < 0 || s.n[d] > spec.n_max) valid = false;
          total += s.n[d];
        }
        if (!valid) continue;
        const double w = std::exp(-(solver.energy(s, q) - u0) / kt);
        z += w;
        n_avg += w * total;
      }
      charge(iy, ix) = n_avg / z;
    }
  });

  DiagramGrid grid;
  grid.axis_x = spec.axis_x;
  grid.axis_y = spec.axis_y;
  grid.values = derivative_x(charge, spec.axis_x.step()) + derivative_y(charge, spec.axis_y.step());
  const auto& net = spec.net;
  grid.meta = {
      {"kind", "honeycomb"},
      {"network",
       {{"c_total_aF", net.c_total},
        {"c_inter_aF", net.c_inter},
        {"c_gate_aF", net.c_gate},
        {"c_ohmic_aF", net.c_ohmic}}},
      {"base", voltages_json(spec.base)},
      {"t_e_K", spec.t_e},
      {"n_max", spec.n_max},
      {"noise_sigma", spec.noise_sigma},
      {"seed", spec.seed},
      {"warnings", nlohmann::json::array()},
  };
  if (spec.noise_sigma > 0.0) grid = add_noise(std::move(grid), spec.noise_sigma, spec.seed);
  return grid;
}

DiagramGrid add_noise(DiagramGrid grid, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0)) throw std::invalid_argument("noise sigma must be >= 0");
  if (sigma == 0.0) return grid;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, sigma);
  for (Eigen::Index iy = 0; iy < grid.values.rows(); ++iy)
    for (Eigen::Index ix = 0; ix < grid.values.cols(); ++ix) grid.values(iy, ix) += normal(rng);
  return grid;
}

}  // namespace qdarray::diagram
