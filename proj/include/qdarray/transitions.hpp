#pragma once

// Charge-transition lines in honeycomb diagrams and the electrostatic
// energies read from their spacings.

#include "qdarray/capnet.hpp"
#include "qdarray/diagram.hpp"

#include <Eigen/Dense>

#include <span>
#include <utility>
#include <vector>

namespace qdarray::fitters {

/// Rectangle in axis units.
struct Window {
  double x_min = 0.0, x_max = 0.0;
  double y_min = 0.0, y_max = 0.0;
};

/// AlongX: linecuts are rows and the line is x = slope * y + intercept.
/// AlongY: linecuts are columns and the line is y = slope * x + intercept.
enum class CutDirection { AlongX, AlongY };

struct TransitionLine {
  double slope = 0.0;
  double intercept = 0.0;
  Eigen::Matrix2d covariance = Eigen::Matrix2d::Zero();  // (slope, intercept)
  CutDirection direction = CutDirection::AlongX;
  int peaks = 0;

  /// Position along the cut axis at sweep coordinate s.
  double position(double s) const { return slope * s + intercept; }
  double position_variance(double s) const;
};

/// (sweep coordinate, sub-pixel peak position) for every linecut in the
/// window whose maximum clears median + 3 sigma (sigma from the MAD).
std::vector<std::pair<double, double>> find_peaks(const diagram::DiagramGrid& grid,
                                                  const Window& window, CutDirection direction);

/// Throws std::runtime_error when fewer than 5 peaks are found.
TransitionLine fit_transition_line(const diagram::DiagramGrid& grid, const Window& window,
                                   CutDirection direction);

/// Windows around the transitions of one pair of dots. Dot x is the dot
/// under the gate on axis_x, dot y the dot under the gate on axis_y.
///   x_first   dot x: N -> N+1 transition
///   x_second  dot x: N+1 -> N+2 transition at the same N_y
///   x_shifted dot x: N -> N+1 transition with N_y increased by one
/// and likewise for dot y.
struct PairWindows {
  Window x_first, x_second, x_shifted;
  Window y_first, y_second, y_shifted;
};

struct HoneycombMeasurement {
  diagram::DiagramGrid grid;
  PairWindows windows;
};

/// Energy spacing between two parallel transition lines of the same dot,
/// measured along the cut axis and converted with `alpha` (ueV/mV).
std::pair<double, double> line_spacing_energy(const TransitionLine& a, const Window& wa,
                                              const TransitionLine& b, const Window& wb,
                                              double alpha, double alpha_sigma);

/// Combines all measurements into the seven energies. Each dot pair must be
/// covered by one measurement whose axes sweep the plungers of two adjacent
/// dots; repeated charging energies are averaged.
capnet::ElectrostaticEnergies extract_energies(std::span<const HoneycombMeasurement> measurements,
                                               const diagram::LeverArmSet& lv);

}  // namespace qdarray::fitters
