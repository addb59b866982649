#pragma once

// Capacitance of two coplanar conducting discs buried in a uniform
// dielectric, optionally beneath a grounded conducting plane, by a
// collocation boundary-element method.
//
// Discs are zero-thickness and lie at depth h below the plane z = 0. The
// plane is represented by image panels at z = +h carrying the opposite
// charge. Lengths are in nm, capacitances in aF.

#include <vector>

namespace qdarray::geometry {

inline constexpr double kDefaultDiameter = 80.0;     // nm
inline constexpr double kDefaultDepth = 35.0;        // nm
inline constexpr double kDefaultPermittivity = 13.05;  // Si0.7Ge0.3
inline constexpr int kDefaultPanels = 512;           // per disc
inline constexpr int kMinPanels = 64;

struct DiscPairGeometry {
  double diameter = kDefaultDiameter;
  double center_distance = 130.0;
  double depth = kDefaultDepth;
  double epsilon_r = kDefaultPermittivity;
  bool screened = true;
};

void validate(const DiscPairGeometry& g);

struct CapacitancePair {
  double c_self[2] = {0.0, 0.0};    // Maxwell diagonal (total capacitance)
  double c_ground[2] = {0.0, 0.0};  // row sums (capacitance to ground)
  double c_mutual = 0.0;            // negated off-diagonal
  int panel_count = 0;              // per disc
  double residual = 0.0;            // max |P q - V| over both solves
  double asymmetry = 0.0;           // |C_12 - C_21| / |C_12|
  double rcond = 0.0;               // reciprocal condition estimate
};

CapacitancePair bem_capacitance(const DiscPairGeometry& geom, int panels = kDefaultPanels);

/// Capacitance of one isolated disc (optionally beneath the plane).
double single_disc_capacitance(double diameter, double epsilon_r, double depth, bool screened,
                               int panels = kDefaultPanels);

/// 4 eps D, the analytic self-capacitance of an isolated thin disc.
double analytic_disc_capacitance(double diameter, double epsilon_r);

struct SweepRow {
  double d = 0.0;
  double c_mutual_screened = 0.0;
  double c_mutual_unscreened = 0.0;
  double c_self_screened = 0.0;
  double c_self_unscreened = 0.0;
};

/// bem_capacitance for every distance, with and without the plane. The
/// template's own `screened` flag is ignored. Distances must ascend within
/// [D, 3D].
std::vector<SweepRow> sweep_distance(const DiscPairGeometry& templ, const std::vector<double>& ds,
                                     int panels = kDefaultPanels, int threads = 1);

/// Paper sweep range: d from 85 to 175 nm.
std::vector<double> default_distances(int count = 10);

struct PowerLawFit {
  double exponent = 0.0;
  double exponent_sigma = 0.0;
  double prefactor = 0.0;  // C = prefactor * d^exponent
};

/// Linear least squares on (log d, log C). Needs >= 5 positive points.
PowerLawFit power_law_fit(const std::vector<double>& d, const std::vector<double>& c);

}  // namespace qdarray::geometry
