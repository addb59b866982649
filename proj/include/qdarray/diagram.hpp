#pragma once

// Forward synthesis of two-dimensional stability diagrams.

#include "qdarray/capnet.hpp"
#include "qdarray/hamiltonian.hpp"

#include <Eigen/Dense>
#include <json.hpp>

#include <cstdint>
#include <string>

namespace qdarray::diagram {

using capnet::Matrix4;
using capnet::SourceVoltages;

/// Gate-to-dot lever arms alpha(gate, dot) in ueV/mV for plungers P1..P4.
struct LeverArmSet {
  Matrix4 alpha = Matrix4::Zero();
  Matrix4 sigma = Matrix4::Zero();  // 1 sigma per entry

  /// alpha_P1^(eps) = alpha_P1^(1) - alpha_P1^(2)
  double detuning_left() const { return alpha(0, 0) - alpha(0, 1); }
  /// alpha_P4^(eps) = alpha_P4^(4) - alpha_P4^(3)
  double detuning_right() const { return alpha(3, 3) - alpha(3, 2); }

  /// Only the two detuning lever arms are known; they are placed on the
  /// diagonal so that detuning_left/right return them.
  static LeverArmSet from_detuning(double alpha_l, double alpha_r);
  static LeverArmSet from_network(const capnet::CapacitanceNetwork& net);
};

void validate(const LeverArmSet& lv);

struct Detunings {
  double eps_l = 0.0;
  double eps_r = 0.0;
};

/// eps = alpha^(eps) (V - V0) for P1 (left) and P4 (right).
Detunings detunings_from_voltages(const LeverArmSet& lv, const SourceVoltages& v,
                                  const SourceVoltages& v0);
/// Inverse map; entries other than P1 and P4 are copied from v0.
SourceVoltages voltages_from_detunings(const LeverArmSet& lv, const Detunings& eps,
                                       const SourceVoltages& v0);

/// Charge-sensor response. Sensor L is read as dI_L/dV_P1 and sensor R as
/// dI_R/dV_P4; sensitivity(s, d) couples sensor s to the polarization of
/// double dot d.
struct SensorModel {
  double beta_l = 1.0;
  double beta_r = 1.0;
  Eigen::Matrix2d sensitivity = Eigen::Matrix2d::Identity();
  double noise_sigma = 0.0;
  double background = 0.0;
};

struct Axis {
  std::string name;  // gate name ("P1") or detuning label
  double start = 0.0;
  double stop = 1.0;
  int npoints = 2;
  std::string units = "mV";

  double step() const { return (stop - start) / (npoints - 1); }
  double at(int i) const { return start + i * step(); }
};

/// values(iy, ix): rows follow axis_y, columns follow axis_x.
struct DiagramGrid {
  Axis axis_x;
  Axis axis_y;
  Eigen::MatrixXd values;
  nlohmann::json meta = nlohmann::json::object();
};

void validate(const Axis& a);
void validate(const DiagramGrid& g);

inline constexpr int kDefaultGridPoints = 200;
inline constexpr double kDefaultDetuningWindow = 500.0;  // ueV half-width

struct PolarizationDiagramSpec {
  hamiltonian::TwoQubitParams params;  // eps_l and eps_r are ignored
  LeverArmSet lever_arms;
  SensorModel sensor;
  Axis axis_x{"P1", 0.0, 1.0, kDefaultGridPoints, "mV"};
  Axis axis_y{"P4", 0.0, 1.0, kDefaultGridPoints, "mV"};
  SourceVoltages v0;  // P1 and P4 entries give the zero-detuning point
  std::uint64_t seed = 0;
  int threads = 1;    // 0 selects hardware concurrency

  /// Axes spanning +-window ueV in detuning around v0.
  void set_detuning_window(double half_width = kDefaultDetuningWindow,
                           int npoints = kDefaultGridPoints);
};

DiagramGrid synthesize_polarization_diagram(const PolarizationDiagramSpec& spec);

/// Polarizations (P_L, P_R) on the grid of a polarization diagram spec,
/// before derivatives are taken.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> polarization_maps(const PolarizationDiagramSpec& spec);

struct HoneycombSpec {
  capnet::CapacitanceNetwork net;
  Axis axis_x{"P1", 0.0, 1.0, kDefaultGridPoints, "mV"};
  Axis axis_y{"P2", 0.0, 1.0, kDefaultGridPoints, "mV"};
  SourceVoltages base;  // voltages of the gates that are not swept
  double t_e = 0.155;   // K
  int n_max = capnet::kDefaultMaxElectrons;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
  int threads = 1;
};

/// Sensor signal d<N_total>/dV_x + d<N_total>/dV_y of the thermally averaged
/// constant-interaction occupation; addition lines appear as peaks.
DiagramGrid synthesize_honeycomb(const HoneycombSpec& spec);

/// Index (0..3) of a plunger axis name "P1".."P4"; throws otherwise.
int gate_index(const std::string& axis_name);

/// Adds i.i.d. N(0, sigma^2) noise drawn in row-major order from a stream
/// seeded with `seed`.
DiagramGrid add_noise(DiagramGrid grid, double sigma, std::uint64_t seed);

}  // namespace qdarray::diagram
