#pragma once

// Two capacitively coupled charge qubits.
//
// Basis order is |LL>, |LR>, |RL>, |RR> where, for each double dot, the first
// state (sigma_z = +1) has the electron on the outer dot (dot 1 or dot 4) and
// the second on the inner dot (dot 2 or dot 3). The coupling term therefore
// adds g to |RR>, the configuration with both electrons on the inner dots.

#include <Eigen/Dense>

#include <array>

namespace qdarray::hamiltonian {

using Matrix4 = Eigen::Matrix4d;

struct TwoQubitParams {
  double eps_l = 0.0;  // ueV
  double eps_r = 0.0;  // ueV
  double t_l = 0.0;    // ueV
  double t_r = 0.0;    // ueV
  double g = 0.0;      // ueV
  double t_e = 0.155;  // K
};

void validate(const TwoQubitParams& p);

struct EigenSystem {
  std::array<double, 4> energies{};  // ascending
  Matrix4 states;                    // column i is |psi_i>
};

struct Polarization {
  double left = 0.0;
  double right = 0.0;
};

Matrix4 build_hamiltonian(const TwoQubitParams& p);

/// Throws std::invalid_argument for a non-symmetric input.
EigenSystem eigensystem(const Matrix4& h);

/// Boltzmann-weighted <sigma_z> of each double dot.
Polarization thermal_polarization(const TwoQubitParams& p);

/// <psi_1|sigma_z|psi_1> for each double dot (the T -> 0 limit).
Polarization ground_state_polarization(const TwoQubitParams& p);

/// Single double dot at zero tunnel coupling: P = tanh(-eps / 2 k_B T).
double single_qubit_polarization(double eps, double t, double t_e);

inline constexpr double kDefaultRootTolerance = 1e-6;  // ueV

/// eps_l at which P_L = 0 for the given eps_r (p.eps_l is ignored).
double left_line_location(const TwoQubitParams& p, double tolerance = kDefaultRootTolerance);

/// eps_r at which P_R = 0 for the given eps_l (p.eps_r is ignored).
double right_line_location(const TwoQubitParams& p, double tolerance = kDefaultRootTolerance);

}  // namespace qdarray::hamiltonian
