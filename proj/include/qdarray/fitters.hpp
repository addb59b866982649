#pragma once

// Inverse pipeline for polarization diagrams: linecut fits, line tracking,
// the two ways of extracting g, and the thermal lever-arm fit.

#include "qdarray/diagram.hpp"
#include "qdarray/least_squares.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace qdarray::fitters {

/// amplitude * d/dx tanh((x - center)/width) + offset [+ step * tanh(...)]
struct TanhFit {
  double center = 0.0;
  double width = 1.0;
  double amplitude = 0.0;
  double offset = 0.0;
  double step = 0.0;  // zero unless fitted
  bool has_companion = false;
  double companion_center = 0.0, companion_width = 0.0, companion_amplitude = 0.0;
  /// order: center, width, amplitude, offset[, step][, companion c, w, A]
  fit::Matrix covariance;

  double center_sigma() const;
  double operator()(double x) const;
};

struct LinecutOptions {
  /// Adds a co-centred tanh step, absorbing the other double dot's signal
  /// where its line shifts across this one.
  bool step_term = false;
  /// Expected position of a second line crossing the linecut. When it lies
  /// within a few widths of the window, a second derivative-of-tanh peak is
  /// fitted alongside the first.
  std::optional<double> companion;
  /// Expected line position; the initial peak is searched within a quarter
  /// of the linecut around it instead of over the whole linecut.
  std::optional<double> hint;
};

/// Throws std::invalid_argument for < 8 points and std::runtime_error when
/// no peak rises above the noise floor.
TanhFit fit_linecut(std::span<const double> x, std::span<const double> y,
                    const LinecutOptions& options = {});

/// Sequence of line centres. `sweep` is the coordinate of the linecut on
/// the opposing axis, `center` the fitted position along the cut.
struct LineTrack {
  std::vector<double> sweep;
  std::vector<double> center;
  std::vector<double> sigma;
  bool truncated = false;
  std::string warning;

  std::size_t size() const { return center.size(); }
};

struct TrackOptions {
  int half_window = 0;  // pixels; 0 picks max(10, npoints / 8)
  bool step_term = true;
  /// Second pass that models where the opposite line crosses each linecut.
  bool companion = true;
};

struct PolarizationLines {
  LineTrack left;   // rows: sweep = axis_y, center along axis_x
  LineTrack right;  // columns: sweep = axis_x, center along axis_y
};

PolarizationLines locate_polarization_lines(const diagram::DiagramGrid& grid,
                                            const TrackOptions& options = {});

/// Converts voltage-space tracks to detuning space with the same lever arms
/// and reference point used for synthesis.
PolarizationLines to_detuning(const PolarizationLines& lines, const diagram::LeverArmSet& lv,
                              const diagram::SourceVoltages& v0);

struct ShiftCurveFit {
  double g = 0.0;  // ueV, peak-to-peak amplitude of the tanh
  double g_sigma = 0.0;
  double center = 0.0;      // plateau midpoint
  double transition = 0.0;  // opposing detuning at the step
  double width = 0.0;
  fit::Matrix covariance;   // order: center, g, transition, width
  bool low_confidence = false;

  double g_ghz() const;
  double g_sigma_ghz() const;
};

/// center(eps) = c + (g/2) tanh((eps - eps0)/w)
ShiftCurveFit fit_shift_tanh(const LineTrack& track);

struct HamiltonianFit {
  double t_l = 0.0, t_r = 0.0, g = 0.0;  // ueV
  double t_l_sigma = 0.0, t_r_sigma = 0.0, g_sigma = 0.0;
  fit::Matrix covariance;  // order: t_l, t_r, g
  double residual_norm = 0.0;
  bool t_l_upper_bound = false;  // t_l only bounded from above
  bool t_r_upper_bound = false;
  bool covariance_singular = false;
  int rejected = 0;  // centre points dropped as outliers
};

struct CurvatureFitOptions {
  std::optional<double> t_l_initial, t_r_initial, g_initial;  // ueV
  double resolution = 0.0;  // detuning pixel size, ueV
  double root_tolerance = 1e-9;
  /// Points whose normalized residual exceeds this many robust standard
  /// deviations are dropped and the fit repeated; 0 keeps every point.
  double outlier_threshold = 4.0;
  /// Weight points by 1/sigma of their linecut fits.
  bool weighted = false;
};

/// Fits the P_L = 0 and P_R = 0 root curves of the two-qubit Hamiltonian to
/// the detuning-space tracks. left: sweep = eps_R, center = eps_L;
/// right: sweep = eps_L, center = eps_R.
HamiltonianFit fit_hamiltonian_curvature(const LineTrack& left, const LineTrack& right,
                                         double t_e, const CurvatureFitOptions& options = {});

/// Curvature fit of a polarization diagram with simulation-based removal of
/// the linecut-centre bias. Each round re-synthesizes a noiseless diagram
/// at the current estimate with the forward model (lever arms, sensor,
/// reference point and T_e taken from `forward`, axes from `grid`), tracks
/// its lines with the same options, and subtracts the difference between
/// those centres and the exact roots from the measured centres before
/// refitting. bias_rounds = 0 is the plain curvature fit.
struct DiagramFitResult {
  HamiltonianFit fit;
  PolarizationLines lines;  // detuning space, as measured
  int bias_rounds = 0;
};

DiagramFitResult fit_hamiltonian_diagram(const diagram::DiagramGrid& grid,
                                         const diagram::PolarizationDiagramSpec& forward,
                                         const TrackOptions& track = {},
                                         const CurvatureFitOptions& options = {},
                                         int bias_rounds = 0);

struct ThermalBroadeningData {
  std::vector<double> temperature;  // mixing-chamber K
  std::vector<double> width_l;      // mV, tanh-width convention
  std::vector<double> width_r;      // mV
  /// Right-line over left-line polarization-line shift in volts, which
  /// equals alpha_L / alpha_R.
  double voltage_shift_ratio = 1.0;
};

struct LeverArmFit {
  double alpha_l = 0.0, alpha_r = 0.0;  // ueV/mV
  double alpha_l_sigma = 0.0, alpha_r_sigma = 0.0;
  double t_e = 0.0, t_e_sigma = 0.0;  // K

  double kt_e_ueV() const;
  double kt_e_ghz() const;
};

/// width(T) = (2 k_B / alpha) sqrt(T^2 + T_e^2) for both double dots with
/// shared T_e and alpha_L / alpha_R fixed to the shift ratio.
LeverArmFit fit_thermal_broadening(const ThermalBroadeningData& data);

/// Tanh-width model used by fit_thermal_broadening.
double thermal_width(double alpha, double t_mc, double t_e);

}  // namespace qdarray::fitters
