#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"
#include "qdarray/fitters.hpp"
#include "qdarray/transitions.hpp"
#include "qdarray/units.hpp"

#include <cmath>
#include <vector>

using namespace qdarray;
using diagram::LeverArmSet;

namespace {

diagram::PolarizationDiagramSpec spec_ghz(double t_l, double t_r, double g, double noise = 0.0,
                                          std::uint64_t seed = 1, double alpha = 50.0) {
  diagram::PolarizationDiagramSpec s;
  s.params.t_l = units::GHz_to_ueV(t_l);
  s.params.t_r = units::GHz_to_ueV(t_r);
  s.params.g = units::GHz_to_ueV(g);
  s.params.t_e = 0.155;
  s.lever_arms = LeverArmSet::from_detuning(alpha, alpha);
  s.set_detuning_window();
  s.sensor.noise_sigma = noise;
  s.seed = seed;
  return s;
}

fitters::PolarizationLines detuning_lines(const diagram::PolarizationDiagramSpec& s) {
  const auto grid = diagram::synthesize_polarization_diagram(s);
  return fitters::to_detuning(fitters::locate_polarization_lines(grid), s.lever_arms, s.v0);
}

double resolution(const diagram::PolarizationDiagramSpec& s) {
  return s.axis_x.step() * s.lever_arms.detuning_left();
}

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> v;
  for (int i = 0; i < n; ++i) v.push_back(a + (b - a) * i / (n - 1));
  return v;
}

}  // namespace

TEST_CASE("noiseless linecut is recovered exactly") {
  const auto xs = linspace(-10.0, 10.0, 120);
  for (double a : {-2.0, 1.5}) {
    std::vector<double> ys;
    for (double x : xs) ys.push_back(oracle::tanh_peak(x, 0.7, 1.3, a, 0.02));
    const auto f = fitters::fit_linecut(xs, ys);
    CHECK(f.center == doctest::Approx(0.7).epsilon(1e-8));
    CHECK(f.width == doctest::Approx(1.3).epsilon(1e-8));
    CHECK(f.amplitude == doctest::Approx(a).epsilon(1e-8));
    CHECK(f.offset == doctest::Approx(0.02).epsilon(1e-8));
    CHECK(f(0.3) == doctest::Approx(oracle::tanh_peak(0.3, 0.7, 1.3, a, 0.02)).epsilon(1e-8));
  }
}

TEST_CASE("linecut errors") {
  const auto xs = linspace(0.0, 1.0, 40);
  const std::vector<double> flat(40, 0.3);
  CHECK_THROWS_AS(fitters::fit_linecut(xs, flat), std::runtime_error);
  const std::vector<double> few_x{0, 1, 2, 3}, few_y{0, 1, 0, 0};
  CHECK_THROWS_AS(fitters::fit_linecut(few_x, few_y), std::invalid_argument);
}

TEST_CASE("decoupled linecut has the thermal width") {
  const auto s = spec_ghz(0.0, 0.0, 0.0);
  const auto grid = diagram::synthesize_polarization_diagram(s);
  std::vector<double> xs, ys;
  for (int c = 0; c < s.axis_x.npoints; ++c) {
    xs.push_back(s.axis_x.at(c));
    ys.push_back(grid.values(20, c));
  }
  const auto f = fitters::fit_linecut(xs, ys);
  const double expected = 2.0 * oracle::kBoltzmann * 0.155 / 50.0;
  CHECK(f.width == doctest::Approx(expected).epsilon(0.01));
  CHECK(f.center == doctest::Approx(s.v0.v_gate[0]).scale(1.0).epsilon(1e-6));
}

TEST_CASE("uncoupled lines are straight") {
  const auto lines = detuning_lines(spec_ghz(3.0, 4.0, 0.0, 0.02, 5));
  for (const auto* tr : {&lines.left, &lines.right}) {
    REQUIRE(tr->size() > 150);
    double mean = 0.0;
    for (double c : tr->center) mean += c;
    mean /= static_cast<double>(tr->size());
    for (std::size_t i = 0; i < tr->size(); ++i) CHECK(std::abs(tr->center[i] - mean) < 4.0 * tr->sigma[i]);
  }
}

TEST_CASE("tracks of the reference diagram are S-curves of height g") {
  const auto s = spec_ghz(5.8, 7.0, 20.9);
  const auto lines = detuning_lines(s);
  for (const auto* tr : {&lines.left, &lines.right}) {
    CHECK_FALSE(tr->truncated);
    REQUIRE(tr->size() >= 180);
    CHECK(tr->center.back() - tr->center.front() == doctest::Approx(s.params.g).epsilon(0.05));
    int decreasing = 0;
    for (std::size_t i = 1; i < tr->size(); ++i)
      if (tr->center[i] < tr->center[i - 1] - 3.0 * tr->sigma[i]) ++decreasing;
    CHECK(decreasing == 0);
  }
}

TEST_CASE("shift curve at low tunnel coupling") {
  const auto s = spec_ghz(1.0, 1.0, 28.4, 0.05, 3);
  const auto lines = detuning_lines(s);
  const auto f = fitters::fit_shift_tanh(lines.left);
  CHECK(std::abs(f.g_ghz() - 28.4) < 0.8);
  CHECK(f.g_sigma_ghz() > 0.0);
  CHECK_FALSE(f.low_confidence);

  // Same detuning window at twice the lever arm.
  const auto doubled = detuning_lines(spec_ghz(1.0, 1.0, 28.4, 0.05, 3, 100.0));
  const auto f2 = fitters::fit_shift_tanh(doubled.left);
  CHECK(std::abs(f2.g - f.g) < std::max(f.g_sigma, f2.g_sigma));
}

TEST_CASE("shift curve of uncoupled lines is consistent with zero") {
  const auto lines = detuning_lines(spec_ghz(1.0, 1.0, 0.0, 0.05, 4));
  // The step position is free, so chance noise steps push g above 2 sigma
  // now and then; 3 sigma bounds that scan.
  for (const auto* tr : {&lines.left, &lines.right}) {
    const auto f = fitters::fit_shift_tanh(*tr);
    CHECK(f.g < 3.0 * f.g_sigma);
    CHECK(f.g >= 0.0);
  }
}

TEST_CASE("curvature fit symmetry") {
  const auto s = spec_ghz(5.8, 7.0, 20.9);
  const auto lines = detuning_lines(s);
  fitters::CurvatureFitOptions o;
  o.resolution = resolution(s);
  const auto a = fitters::fit_hamiltonian_curvature(lines.left, lines.right, 0.155, o);
  const auto b = fitters::fit_hamiltonian_curvature(lines.right, lines.left, 0.155, o);
  CHECK(a.t_l == doctest::Approx(b.t_r).epsilon(1e-4));
  CHECK(a.t_r == doctest::Approx(b.t_l).epsilon(1e-4));
  CHECK(a.g == doctest::Approx(b.g).epsilon(1e-4));
  // Noiseless recovery.
  CHECK(std::abs(units::ueV_to_GHz(a.t_l) - 5.8) < 0.4);
  CHECK(std::abs(units::ueV_to_GHz(a.t_r) - 7.0) < 0.5);
  CHECK(std::abs(units::ueV_to_GHz(a.g) - 20.9) < 0.3);
  CHECK(a.covariance.rows() == 3);
}

TEST_CASE("curvature and shift fits agree without tunnelling") {
  const auto s = spec_ghz(0.0, 0.0, 10.0, 0.05, 11);
  const auto lines = detuning_lines(s);
  fitters::CurvatureFitOptions o;
  o.resolution = resolution(s);
  const auto h = fitters::fit_hamiltonian_curvature(lines.left, lines.right, 0.155, o);
  const auto sh = fitters::fit_shift_tanh(lines.left);
  CHECK(std::abs(h.g - sh.g) < 2.0 * std::hypot(h.g_sigma, sh.g_sigma));
  CHECK(h.t_l_upper_bound);
  CHECK(h.t_r_upper_bound);
}

TEST_CASE("thermal broadening") {
  const double kb = oracle::kBoltzmann, al = 50.0, ar = 80.0, te = 0.155;
  fitters::ThermalBroadeningData d;
  for (double t : {0.02, 0.1, 0.2, 0.3, 0.45, 0.6}) {
    d.temperature.push_back(t);
    d.width_l.push_back(2.0 * kb / al * std::sqrt(t * t + te * te));
    d.width_r.push_back(2.0 * kb / ar * std::sqrt(t * t + te * te));
  }
  d.voltage_shift_ratio = al / ar;
  const auto f = fitters::fit_thermal_broadening(d);
  CHECK(f.alpha_l == doctest::Approx(al).epsilon(0.005));
  CHECK(f.alpha_r == doctest::Approx(ar).epsilon(0.005));
  CHECK(f.t_e == doctest::Approx(te).epsilon(0.005));
  CHECK(f.alpha_l / f.alpha_r == doctest::Approx(d.voltage_shift_ratio).epsilon(1e-12));
  CHECK(f.kt_e_ueV() == doctest::Approx(13.36).epsilon(1e-3));
  CHECK(f.kt_e_ghz() == doctest::Approx(3.23).epsilon(2e-3));

  CHECK(fitters::thermal_width(50.0, 20.0, te) == doctest::Approx(2.0 * kb * 20.0 / 50.0).epsilon(1e-4));

  auto bad = d;
  std::swap(bad.width_l.front(), bad.width_l.back());
  CHECK_THROWS(fitters::fit_thermal_broadening(bad));
  auto few = d;
  few.temperature.resize(3);
  few.width_l.resize(3);
  few.width_r.resize(3);
  CHECK_THROWS_AS(fitters::fit_thermal_broadening(few), std::invalid_argument);
}

namespace {

constexpr double kElectronsPerAttofaradMillivolt = 1e-21 / 1.602176634e-19;

// Transition lines of the constant-interaction model in the plane of the
// plungers of dots x and y: dot x changes n -> n+1 with m electrons on y
// where K_xx (n + 1/2 - q_x) + K_xy (m - q_y) = 0.
struct PairGeometry {
  double kxx, kyy, kxy, cx, cy;  // c: electrons per mV

  double x_line(double n, double m, double vy) const {
    return (kxx * (n + 0.5) + kxy * (m - cy * vy)) / (kxx * cx);
  }
  double y_line(double n, double m, double vx) const {
    return (kyy * (n + 0.5) + kxy * (m - cx * vx)) / (kyy * cy);
  }
};

fitters::HoneycombMeasurement measure_pair(const capnet::CapacitanceNetwork& net, int x) {
  std::array<double, 4> c = net.c_total;
  std::array<double, 3> cij = net.c_inter;
  const auto k = oracle::energy_matrix(c, cij);
  const int y = x + 1;
  const PairGeometry p{k[x][x], k[y][y], k[x][y], net.c_gate[x] * kElectronsPerAttofaradMillivolt,
                       net.c_gate[y] * kElectronsPerAttofaradMillivolt};
  const double ux = 1.0 / p.cx, uy = 1.0 / p.cy;  // one electron of induced charge

  diagram::HoneycombSpec s;
  s.net = net;
  s.axis_x = {"P" + std::to_string(x + 1), 0.0, 1.8 * ux, 361, "mV"};
  s.axis_y = {"P" + std::to_string(y + 1), 0.0, 1.8 * uy, 361, "mV"};
  fitters::HoneycombMeasurement m;
  m.grid = diagram::synthesize_honeycomb(s);

  auto along_x = [&](double n, double m_y, double lo, double hi) {
    const double mid = p.x_line(n, m_y, 0.5 * (lo + hi) * uy);
    return fitters::Window{mid - 0.15 * ux, mid + 0.15 * ux, lo * uy, hi * uy};
  };
  auto along_y = [&](double n, double m_x, double lo, double hi) {
    const double mid = p.y_line(n, m_x, 0.5 * (lo + hi) * ux);
    return fitters::Window{lo * ux, hi * ux, mid - 0.15 * uy, mid + 0.15 * uy};
  };
  m.windows.x_first = along_x(0, 0, 0.05, 0.35);
  m.windows.x_second = along_x(1, 0, 0.05, 0.35);
  m.windows.x_shifted = along_x(0, 1, 0.7, 1.3);
  m.windows.y_first = along_y(0, 0, 0.05, 0.35);
  m.windows.y_second = along_y(1, 0, 0.05, 0.35);
  m.windows.y_shifted = along_y(0, 1, 0.7, 1.3);
  return m;
}

capnet::CapacitanceNetwork honeycomb_net() {
  capnet::CapacitanceNetwork net;
  net.c_total = {48.0, 52.0, 50.0, 46.0};
  net.c_inter = {8.0, 5.0, 9.0};
  net.c_gate = {3.0, 3.0, 3.0, 3.0};
  return net;
}

}  // namespace

TEST_CASE("electrostatic energies from honeycombs") {
  const auto net = honeycomb_net();
  std::vector<fitters::HoneycombMeasurement> ms;
  for (int x = 0; x < 3; ++x) ms.push_back(measure_pair(net, x));
  const auto lv = LeverArmSet::from_network(net);
  const auto en = fitters::extract_energies(ms, lv);

  const auto k = oracle::energy_matrix(net.c_total, net.c_inter);
  for (int i = 0; i < 4; ++i) {
    CAPTURE(i);
    CHECK(en.e_c[i] == doctest::Approx(k[i][i]).epsilon(0.01));
    CHECK(en.e_c[i] > 2400.0);
    CHECK(en.e_c[i] < 4400.0);
  }
  for (int j = 0; j < 3; ++j) {
    CAPTURE(j);
    CHECK(en.e_cc[j] == doctest::Approx(k[j][j + 1]).epsilon(0.02));
    CHECK(en.e_cc[j] > 120.0);
    CHECK(en.e_cc[j] < 680.0);
  }
  REQUIRE(en.sigma.has_value());

  // Back to capacitances.
  const auto est = capnet::capacitances_from_energies(en);
  REQUIRE(est.sigma.has_value());
  const auto truth = net.dot_capacitances();
  const auto got = est.net.dot_capacitances();
  for (std::size_t i = 0; i < 7; ++i) {
    CAPTURE(i);
    CHECK(std::abs(got[i] - truth[i]) < 3.0 * (*est.sigma)[i]);
  }
}

TEST_CASE("transition windows need enough peaks") {
  const auto net = honeycomb_net();
  auto m = measure_pair(net, 0);
  fitters::Window empty{0.0, 1.0, 0.0, 1.0};
  CHECK_THROWS_AS(fitters::fit_transition_line(m.grid, empty, fitters::CutDirection::AlongX),
                  std::runtime_error);
  const auto line = fitters::fit_transition_line(m.grid, m.windows.x_first, fitters::CutDirection::AlongX);
  CHECK(line.peaks >= 5);
  // dV_x/dV_y = -(K_xy c_y)/(K_xx c_x)
  const auto k = oracle::energy_matrix(net.c_total, net.c_inter);
  CHECK(line.slope == doctest::Approx(-k[0][1] / k[0][0]).epsilon(0.05));

  std::vector<fitters::HoneycombMeasurement> one{m};
  CHECK_THROWS_AS(fitters::extract_energies(one, LeverArmSet::from_network(net)), std::invalid_argument);
}
