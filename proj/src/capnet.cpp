#include "qdarray/capnet.hpp"

#include "qdarray/units.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace qdarray::capnet {

namespace {

constexpr double kE2 = units::kE2PerAttofarad;

// Closed forms on raw seven-vectors, without validation, so that finite
// difference Jacobians can step freely around a valid point.
double determinant_raw(const Seven& c) {
  const double c1 = c[0], c2 = c[1], c3 = c[2], c4 = c[3];
  const double c12 = c[4], c23 = c[5], c34 = c[6];
  return c1 * c2 * c3 * c4 - c3 * c4 * c12 * c12 - c1 * c2 * c34 * c34 - c1 * c4 * c23 * c23 +
         c12 * c12 * c34 * c34;
}

Seven energies_raw(const Seven& c) {
  const double c1 = c[0], c2 = c[1], c3 = c[2], c4 = c[3];
  const double c12 = c[4], c23 = c[5], c34 = c[6];
  const double s = kE2 / determinant_raw(c);
  return {
      s * (c2 * c3 * c4 - c4 * c23 * c23 - c2 * c34 * c34),
      s * (c1 * c3 * c4 - c1 * c34 * c34),
      s * (c1 * c2 * c4 - c4 * c12 * c12),
      s * (c1 * c2 * c3 - c3 * c12 * c12 - c1 * c23 * c23),
      s * (c3 * c4 * c12 - c12 * c34 * c34),
      s * (c1 * c4 * c23),
      s * (c1 * c2 * c34 - c34 * c12 * c12),
  };
}

Seven capacitances_raw(const Seven& e) {
  const double e1 = e[0], e2 = e[1], e3 = e[2], e4 = e[3];
  const double e12 = e[4], e23 = e[5], e34 = e[6];
  const double d12 = e1 * e2 - e12 * e12;
  const double d23 = e2 * e3 - e23 * e23;
  const double d34 = e3 * e4 - e34 * e34;
  return {
      kE2 * e2 / d12,
      kE2 * (e1 * e2 * e2 * e3 - e12 * e12 * e23 * e23) / (e2 * d12 * d23),
      kE2 * (e2 * e3 * e3 * e4 - e23 * e23 * e34 * e34) / (e3 * d23 * d34),
      kE2 * e3 / d34,
      kE2 * e12 / d12,
      kE2 * e23 / d23,
      kE2 * e34 / d34,
  };
}

// First-order propagation of independent input uncertainties through f.
template <typename F>
Seven propagate(F&& f, const Seven& x, const Seven& sigma) {
  double scale = 0.0;
  for (double v : x) scale = std::max(scale, std::abs(v));
  Eigen::Matrix<double, 7, 7> jac;
  for (int j = 0; j < 7; ++j) {
    const double h = 1e-6 * std::max(std::abs(x[j]), 1e-3 * scale);
    Seven up = x, dn = x;
    up[j] += h;
    dn[j] -= h;
    const Seven fu = f(up), fd = f(dn);
    for (int i = 0; i < 7; ++i) jac(i, j) = (fu[i] - fd[i]) / (2.0 * h);
  }
  Seven out{};
  for (int i = 0; i < 7; ++i) {
    double var = 0.0;
    for (int j = 0; j < 7; ++j) var += jac(i, j) * jac(i, j) * sigma[j] * sigma[j];
    out[i] = std::sqrt(var);
  }
  return out;
}

bool all_finite(const auto& range) {
  for (double v : range)
    if (!std::isfinite(v)) return false;
  return true;
}

}  // namespace

CapacitanceNetwork CapacitanceNetwork::uniform(double c, double c12, double c23, double c34) {
  CapacitanceNetwork net;
  net.c_total = {c, c, c, c};
  net.c_inter = {c12, c23, c34};
  return net;
}

Seven CapacitanceNetwork::dot_capacitances() const {
  return {c_total[0], c_total[1], c_total[2], c_total[3], c_inter[0], c_inter[1], c_inter[2]};
}

CapacitanceNetwork CapacitanceNetwork::from_dot_capacitances(const Seven& c) {
  CapacitanceNetwork net;
  net.c_total = {c[0], c[1], c[2], c[3]};
  net.c_inter = {c[4], c[5], c[6]};
  return net;
}

Seven ElectrostaticEnergies::values() const {
  return {e_c[0], e_c[1], e_c[2], e_c[3], e_cc[0], e_cc[1], e_cc[2]};
}

ElectrostaticEnergies ElectrostaticEnergies::from_values(const Seven& e) {
  ElectrostaticEnergies en;
  en.e_c = {e[0], e[1], e[2], e[3]};
  en.e_cc = {e[4], e[5], e[6]};
  return en;
}

void validate(const CapacitanceNetwork& net) {
  if (!all_finite(net.c_total) || !all_finite(net.c_inter) || !all_finite(net.c_gate) ||
      !all_finite(net.c_ohmic))
    throw std::invalid_argument("capacitance network contains non-finite values");
  for (int i = 0; i < 4; ++i)
    if (net.c_total[i] <= 0.0)
      throw std::invalid_argument("C_" + std::to_string(i + 1) + " must be > 0");
  for (int k = 0; k < 3; ++k)
    if (net.c_inter[k] < 0.0)
      throw std::invalid_argument("C_" + std::to_string(k + 1) + std::to_string(k + 2) +
                                  " must be >= 0");
  for (double c : net.c_gate)
    if (c < 0.0) throw std::invalid_argument("gate capacitances must be >= 0");
  for (double c : net.c_ohmic)
    if (c < 0.0) throw std::invalid_argument("ohmic capacitances must be >= 0");
  for (int i = 0; i < 4; ++i) {
    const double left = i > 0 ? net.c_inter[i - 1] : 0.0;
    const double right = i < 3 ? net.c_inter[i] : 0.0;
    if (net.c_total[i] <= left + right)
      throw std::invalid_argument("C_" + std::to_string(i + 1) +
                                  " must exceed the sum of its inter-dot capacitances");
  }
}

void validate(const ElectrostaticEnergies& en) {
  if (!all_finite(en.e_c) || !all_finite(en.e_cc))
    throw std::invalid_argument("energies contain non-finite values");
  for (int i = 0; i < 4; ++i)
    if (en.e_c[i] <= 0.0)
      throw std::invalid_argument("E_C" + std::to_string(i + 1) + " must be > 0");
  for (int k = 0; k < 3; ++k) {
    const std::string name = "E_C" + std::to_string(k + 1) + std::to_string(k + 2);
    if (en.e_cc[k] < 0.0) throw std::invalid_argument(name + " must be >= 0");
    if (en.e_cc[k] * en.e_cc[k] >= en.e_c[k] * en.e_c[k + 1])
      throw std::invalid_argument(name + "^2 < E_C" + std::to_string(k + 1) + "*E_C" +
                                  std::to_string(k + 2) + " violated");
  }
  if (en.sigma)
    for (double s : *en.sigma)
      if (!(s >= 0.0)) throw std::invalid_argument("energy uncertainties must be >= 0");
}

void validate(const ChargeState& s) {
  for (int n : s.n)
    if (n < 0) throw std::invalid_argument("electron numbers must be >= 0");
}

Matrix4 maxwell_matrix(const CapacitanceNetwork& net) {
  validate(net);
  Matrix4 m = Matrix4::Zero();
  for (int i = 0; i < 4; ++i) m(i, i) = net.c_total[i];
  for (int k = 0; k < 3; ++k) {
    m(k, k + 1) = -net.c_inter[k];
    m(k + 1, k) = -net.c_inter[k];
  }
  return m;
}

double maxwell_determinant(const CapacitanceNetwork& net) {
  validate(net);
  return determinant_raw(net.dot_capacitances());
}

Vector4 induced_charge(const CapacitanceNetwork& net, const SourceVoltages& v) {
  Vector4 q;
  for (int i = 0; i < 4; ++i) q(i) = net.c_gate[i] * v.v_gate[i];
  q(0) += net.c_ohmic[0] * v.v_ohmic[0];
  q(3) += net.c_ohmic[1] * v.v_ohmic[1];
  return q * units::kElectronsPerAttofaradMillivolt;
}

double electrostatic_energy(const CapacitanceNetwork& net, const ChargeState& state,
                            const SourceVoltages& v) {
  validate(state);
  const Matrix4 c = maxwell_matrix(net);
  const Eigen::LDLT<Matrix4> ldlt(c);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
    throw std::runtime_error("Maxwell matrix is singular");
  Vector4 x;
  for (int i = 0; i < 4; ++i) x(i) = state.n[i];
  x -= induced_charge(net, v);
  return 0.5 * kE2 * x.dot(ldlt.solve(x));
}

ElectrostaticEnergies energies_from_capacitances(const CapacitanceNetwork& net,
                                                 const std::optional<Seven>& sigma) {
  validate(net);
  const Seven c = net.dot_capacitances();
  auto en = ElectrostaticEnergies::from_values(energies_raw(c));
  if (sigma) en.sigma = propagate(energies_raw, c, *sigma);
  return en;
}

CapacitanceEstimate capacitances_from_energies(const ElectrostaticEnergies& en) {
  validate(en);
  const Seven e = en.values();
  CapacitanceEstimate out;
  out.net = CapacitanceNetwork::from_dot_capacitances(capacitances_raw(e));
  if (en.sigma) out.sigma = propagate(capacitances_raw, e, *en.sigma);
  return out;
}

double coupling_exact(const CapacitanceNetwork& net) {
  validate(net);
  const auto& c = net.c_total;
  const auto& m = net.c_inter;
  return kE2 * m[1] * (c[0] - m[0]) * (c[3] - m[2]) / determinant_raw(net.dot_capacitances());
}

double coupling_series(const CapacitanceNetwork& net) {
  validate(net);
  const double mean = std::accumulate(net.c_total.begin(), net.c_total.end(), 0.0) / 4.0;
  const double c12 = net.c_inter[0] / mean;
  const double c23 = net.c_inter[1] / mean;
  const double c34 = net.c_inter[2] / mean;
  return kE2 / mean * (c23 - c23 * c12 - c23 * c34);
}

namespace {

ChargeState shifted(const ChargeState& base, std::array<int, 4> add) {
  ChargeState s = base;
  for (int i = 0; i < 4; ++i) s.n[i] += add[i];
  return s;
}

using MatrixLd = Eigen::Matrix<long double, 4, 4>;
using VectorLd = Eigen::Matrix<long double, 4, 1>;

// Total energies at zero source voltage in extended precision; the shift
// forms subtract energies that are orders of magnitude larger than g.
class ShiftEnergies {
 public:
  explicit ShiftEnergies(const CapacitanceNetwork& net)
      : ldlt_(maxwell_matrix(net).cast<long double>()) {
    if (ldlt_.info() != Eigen::Success || !ldlt_.isPositive())
      throw std::runtime_error("Maxwell matrix is singular");
  }

  long double operator()(const ChargeState& s) const {
    validate(s);
    VectorLd x;
    for (int i = 0; i < 4; ++i) x(i) = s.n[i];
    return 0.5L * static_cast<long double>(kE2) * x.dot(ldlt_.solve(x));
  }

 private:
  Eigen::LDLT<MatrixLd> ldlt_;
};

}  // namespace

double coupling_by_shift(const CapacitanceNetwork& net, const ChargeState& base) {
  validate(net);
  const ShiftEnergies energy(net);
  auto u = [&](std::array<int, 4> add) { return energy(shifted(base, add)); };
  // eps_12 with the right electron on dot 3, minus eps_12 with it on dot 4.
  return static_cast<double>((u({0, 1, 1, 0}) - u({1, 0, 1, 0})) - (u({0, 1, 0, 1}) - u({1, 0, 0, 1})));
}

double coupling_by_shift_right(const CapacitanceNetwork& net, const ChargeState& base) {
  validate(net);
  const ShiftEnergies energy(net);
  auto u = [&](std::array<int, 4> add) { return energy(shifted(base, add)); };
  // eps_34 with the left electron on dot 2, minus eps_34 with it on dot 1.
  return static_cast<double>((u({0, 1, 1, 0}) - u({0, 1, 0, 1})) - (u({1, 0, 1, 0}) - u({1, 0, 0, 1})));
}

Matrix4 gate_lever_arms(const CapacitanceNetwork& net) {
  const Matrix4 inv = maxwell_matrix(net).inverse();
  // d mu_i / d V_j = -e^2 (C^-1)_ij C_gj / e  ->  ueV per mV
  const double scale = kE2 * units::kElectronsPerAttofaradMillivolt;
  Matrix4 alpha;
  for (int gate = 0; gate < 4; ++gate)
    for (int dot = 0; dot < 4; ++dot) alpha(gate, dot) = scale * inv(dot, gate) * net.c_gate[gate];
  return alpha;
}

OccupationSolver::OccupationSolver(const CapacitanceNetwork& net, int n_max) : n_max_(n_max) {
  if (n_max < 0) throw std::invalid_argument("n_max must be >= 0");
  const Matrix4 c = maxwell_matrix(net);
  inverse_ = kE2 * c.inverse();
  const int side = n_max + 1;
  states_.reserve(static_cast<std::size_t>(side) * side * side * side);
  for (int a = 0; a < side; ++a)
    for (int b = 0; b < side; ++b)
      for (int cc = 0; cc < side; ++cc)
        for (int d = 0; d < side; ++d) states_.push_back({a, b, cc, d});
  self_terms_.reserve(states_.size());
  for (const auto& s : states_) {
    Vector4 n(s[0], s[1], s[2], s[3]);
    self_terms_.push_back(0.5 * n.dot(inverse_ * n));
  }
}

ChargeState OccupationSolver::ground_state(const Vector4& induced) const {
  // U(N) = 1/2 N.K.N - N.K.q + const; the constant does not affect the argmin.
  const Vector4 w = inverse_ * induced;
  double best = std::numeric_limits<double>::infinity();
  std::size_t best_idx = 0;
  for (std::size_t k = 0; k < states_.size(); ++k) {
    const auto& s = states_[k];
    const double u = self_terms_[k] - (s[0] * w(0) + s[1] * w(1) + s[2] * w(2) + s[3] * w(3));
    if (u < best) {
      best = u;
      best_idx = k;
    }
  }
  return ChargeState{states_[best_idx]};
}

double OccupationSolver::energy(const ChargeState& s, const Vector4& induced) const {
  Vector4 x(s.n[0], s.n[1], s.n[2], s.n[3]);
  x -= induced;
  return 0.5 * x.dot(inverse_ * x);
}

ChargeState ground_state_config(const CapacitanceNetwork& net, const SourceVoltages& v, int n_max) {
  const OccupationSolver solver(net, n_max);
  return solver.ground_state(induced_charge(net, v));
}

}  // namespace qdarray::capnet
