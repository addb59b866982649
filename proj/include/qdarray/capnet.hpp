#pragma once

// Constant-interaction electrostatics of the linear four-dot chain.
//
// Nodes 1..4 are the dots, joined by nearest-neighbour capacitors C_12, C_23,
// C_34. Dots 1 and 4 additionally couple to the ohmic reservoirs. Every dot
// has a plunger gate capacitor. All quantities use the units in units.hpp.
//
// Electrons carry negative charge, so the induced charge C_g*V_g enters with
// the opposite sign of N and the electrostatic energy reads
//
//     U(N) = (e^2/2) (N - q)^T C^{-1} (N - q),   q_i = (C_gi V_gi + C_oi V_oi)/e
//
// The 1/2 makes the addition energy of dot i (second difference in N_i) equal
// E_Ci and the mixed difference in (N_i, N_j) equal E_Cij.

#include <Eigen/Dense>

#include <array>
#include <optional>
#include <vector>

namespace qdarray::capnet {

using Matrix4 = Eigen::Matrix4d;
using Vector4 = Eigen::Vector4d;

/// Seven-entry vectors are ordered (1, 2, 3, 4, 12, 23, 34).
using Seven = std::array<double, 7>;

struct CapacitanceNetwork {
  std::array<double, 4> c_total{};  // C_1..C_4
  std::array<double, 3> c_inter{};  // C_12, C_23, C_34
  std::array<double, 4> c_gate{};   // C_g1..C_g4
  std::array<double, 2> c_ohmic{};  // C_o1 (dot 1), C_o2 (dot 4)

  /// Uniform chain: every C_i = c, with the given inter-dot capacitances.
  static CapacitanceNetwork uniform(double c, double c12, double c23, double c34);

  Seven dot_capacitances() const;
  static CapacitanceNetwork from_dot_capacitances(const Seven& c);
};

struct ChargeState {
  std::array<int, 4> n{};
  friend bool operator==(const ChargeState&, const ChargeState&) = default;
};

struct SourceVoltages {
  std::array<double, 4> v_gate{};
  std::array<double, 2> v_ohmic{};
};

struct ElectrostaticEnergies {
  std::array<double, 4> e_c{};   // E_C1..E_C4
  std::array<double, 3> e_cc{};  // E_C12, E_C23, E_C34
  std::optional<Seven> sigma;    // 1 sigma, same ordering as values()

  Seven values() const;
  static ElectrostaticEnergies from_values(const Seven& e);
};

struct CapacitanceEstimate {
  CapacitanceNetwork net;  // c_gate and c_ohmic are left at zero
  std::optional<Seven> sigma;
};

/// Throws std::invalid_argument naming the first violated invariant.
void validate(const CapacitanceNetwork& net);
void validate(const ElectrostaticEnergies& en);
void validate(const ChargeState& s);

Matrix4 maxwell_matrix(const CapacitanceNetwork& net);

/// |C| by the closed-form tridiagonal expansion.
double maxwell_determinant(const CapacitanceNetwork& net);

/// Gate and reservoir induced charge q in units of e.
Vector4 induced_charge(const CapacitanceNetwork& net, const SourceVoltages& v);

double electrostatic_energy(const CapacitanceNetwork& net, const ChargeState& state,
                            const SourceVoltages& v);

ElectrostaticEnergies energies_from_capacitances(const CapacitanceNetwork& net,
                                                 const std::optional<Seven>& sigma = std::nullopt);

/// Inverse of energies_from_capacitances. When the energies carry
/// uncertainties they are propagated to first order.
CapacitanceEstimate capacitances_from_energies(const ElectrostaticEnergies& en);

/// g = e^2 C_23 (C_1 - C_12)(C_4 - C_34) / |C|
double coupling_exact(const CapacitanceNetwork& net);

/// Second-order expansion in c_ij = C_ij / <C_i>.
double coupling_series(const CapacitanceNetwork& net);

/// Shift of the left detuning when the right electron moves from dot 4 to
/// dot 3, evaluated from four total energies with one electron per double dot
/// on top of `base`.
double coupling_by_shift(const CapacitanceNetwork& net, const ChargeState& base = {});

/// Same quantity read as the shift of the right detuning.
double coupling_by_shift_right(const CapacitanceNetwork& net, const ChargeState& base = {});

/// Lever arms alpha(gate, dot) = -d mu_dot / d V_gate in ueV/mV.
Matrix4 gate_lever_arms(const CapacitanceNetwork& net);

inline constexpr int kDefaultMaxElectrons = 6;

/// Lowest-energy occupation over [0, n_max]^4; exact ties resolve to the
/// lexicographically smallest N.
ChargeState ground_state_config(const CapacitanceNetwork& net, const SourceVoltages& v,
                                int n_max = kDefaultMaxElectrons);

/// Precomputed enumeration of all occupations for repeated ground-state
/// searches at many voltage points (used by diagram synthesis).
class OccupationSolver {
 public:
  OccupationSolver(const CapacitanceNetwork& net, int n_max = kDefaultMaxElectrons);

  ChargeState ground_state(const Vector4& induced) const;

  /// Full U(N) in ueV.
  double energy(const ChargeState& s, const Vector4& induced) const;

  const Matrix4& inverse() const { return inverse_; }
  int n_max() const { return n_max_; }

 private:
  Matrix4 inverse_;  // e^2 C^{-1} in ueV
  int n_max_;
  std::vector<std::array<int, 4>> states_;
  std::vector<double> self_terms_;  // (1/2) N^T K N
};

}  // namespace qdarray::capnet
