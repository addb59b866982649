#include "qdarray/fitters.hpp"

#include "qdarray/hamiltonian.hpp"
#include "qdarray/units.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace qdarray::fitters {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kMadToSigma = 1.4826;
constexpr double kHalfMaxSech2 = 0.881373587019543;  // asech(sqrt(1/2))

double median(std::vector<double> v) {
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  double m = *mid;
  if (v.size() % 2 == 0) m = 0.5 * (m + *std::max_element(v.begin(), mid));
  return m;
}

// Robust white-noise sigma from first differences, insensitive to a
// resolved peak occupying much of the linecut.
double difference_noise(const std::vector<double>& y) {
  std::vector<double> d(y.size() - 1);
  for (std::size_t i = 0; i + 1 < y.size(); ++i) d[i] = y[i + 1] - y[i];
  const double md = median(d);
  for (auto& v : d) v = std::abs(v - md);
  return kMadToSigma * median(d) / std::sqrt(2.0);
}

double sech2(double u) {
  const double c = std::cosh(u);
  return std::isfinite(c) ? 1.0 / (c * c) : 0.0;
}

bool usable_sigmas(std::span<const double> s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](double v) {
    return std::isfinite(v) && v > 0.0;
  });
}

std::vector<double> column(const Eigen::MatrixXd& m, Eigen::Index line, Eigen::Index begin,
                           Eigen::Index end) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(end - begin));
  for (Eigen::Index k = begin; k < end; ++k) out.push_back(m(line, k));
  return out;
}

// Tracks one line through successive linecuts. lines(k, i): linecut k,
// sample i along `along`.
// Position along the cut where `other` passes through sweep coordinate s,
// nearest to `near`.
std::optional<double> crossing(const LineTrack& other, double s, double near) {
  std::optional<double> best;
  for (std::size_t j = 0; j + 1 < other.size(); ++j) {
    const double a = other.center[j] - s, b = other.center[j + 1] - s;
    if (a * b > 0.0 || a == b) continue;
    const double pos = other.sweep[j] + a / (a - b) * (other.sweep[j + 1] - other.sweep[j]);
    if (!best || std::abs(pos - near) < std::abs(*best - near)) best = pos;
  }
  return best;
}

LineTrack track_line(const Eigen::MatrixXd& lines, const diagram::Axis& along,
                     const diagram::Axis& sweep, const TrackOptions& options,
                     const std::string& label, const LineTrack* other) {
  const int npts = static_cast<int>(lines.cols());
  const int hw = options.half_window > 0 ? options.half_window : std::max(10, npts / 8);
  std::vector<double> coords(static_cast<std::size_t>(npts));
  for (int i = 0; i < npts; ++i) coords[static_cast<std::size_t>(i)] = along.at(i);

  LineTrack track;
  // Seed from the strongest feature on the first linecut.
  int guess = 0;
  {
    std::vector<double> row = column(lines, 0, 0, npts);
    const double med = median(row);
    double best = -1.0;
    for (int i = 0; i < npts; ++i) {
      const double dev = std::abs(row[static_cast<std::size_t>(i)] - med);
      if (dev > best) {
        best = dev;
        guess = i;
      }
    }
  }

  int skipped = 0, misses = 0;
  for (Eigen::Index k = 0; k < lines.rows(); ++k) {
    const int lo = std::max(0, guess - hw);
    const int hi = std::min(npts, guess + hw + 1);
    LinecutOptions lopt{options.step_term, std::nullopt, along.at(guess)};
    if (other) lopt.companion = crossing(*other, sweep.at(static_cast<int>(k)), along.at(guess));
    std::optional<TanhFit> f;
    std::string failure;
    try {
      if (hi - lo < 8) throw std::runtime_error("window too small");
      const std::vector<double> ys = column(lines, k, lo, hi);
      const std::span<const double> xs(coords.data() + lo, static_cast<std::size_t>(hi - lo));
      f = fit_linecut(xs, ys, lopt);
      const double edge = std::abs(along.step());
      const double c_lo = std::min(xs.front(), xs.back()), c_hi = std::max(xs.front(), xs.back());
      if (!std::isfinite(f->center_sigma()) || f->center - c_lo < edge || c_hi - f->center < edge) {
        failure = "fit pinned to the window edge";
        f.reset();
      }
    } catch (const std::exception& e) {
      failure = e.what();
    }
    if (!f) {
      ++skipped;
      if (++misses > hw / 2) {
        track.truncated = true;
        track.warning = label + " line lost at linecut " + std::to_string(k) + ": " + failure;
        break;
      }
      continue;
    }
    const double idx = (f->center - along.start) / along.step();
    if (std::abs(idx - guess) > 0.5 * hw) {
      track.truncated = true;
      track.warning = label + " line lost at linecut " + std::to_string(k) + ": center jumped";
      break;
    }
    misses = 0;
    track.sweep.push_back(sweep.at(static_cast<int>(k)));
    track.center.push_back(f->center);
    track.sigma.push_back(f->center_sigma());
    guess = static_cast<int>(std::lround(idx));
  }
  if (skipped > 0 && track.warning.empty())
    track.warning = label + " line: " + std::to_string(skipped) + " linecut fits skipped";
  return track;
}

std::pair<double, double> plateaus(const LineTrack& t) {
  const std::size_t n = t.size();
  const std::size_t m = std::max<std::size_t>(2, n / 10);
  const double lo = std::accumulate(t.center.begin(), t.center.begin() + m, 0.0) / m;
  const double hi = std::accumulate(t.center.end() - m, t.center.end(), 0.0) / m;
  return {lo, hi};
}

}  // namespace

double TanhFit::center_sigma() const {
  return covariance.size() > 0 ? std::sqrt(covariance(0, 0)) : 0.0;
}

double TanhFit::operator()(double x) const {
  const double u = (x - center) / width;
  return amplitude / width * sech2(u) + offset + step * std::tanh(u);
}

TanhFit fit_linecut(std::span<const double> x, std::span<const double> y,
                    const LinecutOptions& options) {
  if (x.size() != y.size()) throw std::invalid_argument("linecut x and y differ in length");
  const std::size_t n = x.size();
  if (n < 8) throw std::invalid_argument("linecut needs at least 8 points");

  const std::vector<double> yv(y.begin(), y.end());
  const double med = median(yv);
  std::vector<double> absdev(n);
  for (std::size_t i = 0; i < n; ++i) absdev[i] = std::abs(yv[i] - med);
  const double noise = difference_noise(yv);
  std::size_t pk =
      static_cast<std::size_t>(std::max_element(absdev.begin(), absdev.end()) - absdev.begin());
  if (options.hint) {
    const double reach = 0.25 * std::abs(x.back() - x.front());
    double best = -1.0;
    for (std::size_t i = 0; i < n; ++i)
      if (std::abs(x[i] - *options.hint) <= reach && absdev[i] > best) {
        best = absdev[i];
        pk = i;
      }
  }
  const double peak = absdev[pk];
  const double scale = std::max(std::abs(med), peak);
  if (!(peak > 4.0 * noise) || !(peak > 1e-12 * scale) || peak == 0.0)
    throw std::runtime_error("no peak above the noise floor");

  const double dx = std::abs(x[1] - x[0]);
  const double xmin = std::min(x.front(), x.back());
  const double xmax = std::max(x.front(), x.back());
  std::size_t left = pk, right = pk;
  while (left > 0 && absdev[left] > 0.5 * peak) --left;
  while (right + 1 < n && absdev[right] > 0.5 * peak) ++right;
  const double hwhm = 0.5 * std::abs(x[right] - x[left]);
  const double w0 = std::max(hwhm / kHalfMaxSech2, dx);
  const double a0 = (yv[pk] - med) * w0;

  const int np = options.step_term ? 5 : 4;
  fit::Vector init(np);
  fit::Bounds bounds{fit::Vector::Constant(np, -kInf), fit::Vector::Constant(np, kInf)};
  init.head<4>() << x[pk], w0, a0, med;
  if (np == 5) init(4) = 0.0;
  bounds.lower(0) = xmin;
  bounds.upper(0) = xmax;
  bounds.lower(1) = 1e-3 * dx;
  bounds.upper(1) = 10.0 * (xmax - xmin);

  const fit::CurveModel model = [&](double xi, const fit::Vector& p) {
    const double u = (xi - p(0)) / p(1);
    double v = p(2) / p(1) * sech2(u) + p(3);
    if (np == 5) v += p(4) * std::tanh(u);
    return v;
  };
  auto r = fit::curve_fit(model, x, y, init, bounds);
  TanhFit out;
  const double w1 = r.params(1);
  const bool companion = options.companion && *options.companion > xmin - 3.0 * w1 &&
                         *options.companion < xmax + 3.0 * w1;
  if (companion) {
    const double c2 = *options.companion;
    fit::Vector init2(np + 3);
    init2.head(np) = r.params;
    std::size_t near = 0;
    for (std::size_t i = 1; i < n; ++i)
      if (std::abs(x[i] - c2) < std::abs(x[near] - c2)) near = i;
    const double resid = yv[near] - model(x[near], r.params);
    init2.tail<3>() << c2, w1, resid * w1;
    fit::Bounds bounds2{fit::Vector::Constant(np + 3, -kInf), fit::Vector::Constant(np + 3, kInf)};
    bounds2.lower.head(np) = bounds.lower;
    bounds2.upper.head(np) = bounds.upper;
    bounds2.lower(np) = c2 - 3.0 * w1;
    bounds2.upper(np) = c2 + 3.0 * w1;
    bounds2.lower(np + 1) = bounds.lower(1);
    bounds2.upper(np + 1) = bounds.upper(1);
    const fit::CurveModel model2 = [&](double xi, const fit::Vector& p) {
      const double u = (xi - p(np)) / p(np + 1);
      return model(xi, p.head(np)) + p(np + 2) / p(np + 1) * sech2(u);
    };
    try {
      r = fit::curve_fit(model2, x, y, init2, bounds2);
    } catch (const fit::FitError& e) {
      // A slow crawl along a flat valley still improves on the single peak.
      if (!(e.best().cost < r.cost)) throw;
      r = e.best();
    }
    out.has_companion = true;
    out.companion_center = r.params(np);
    out.companion_width = r.params(np + 1);
    out.companion_amplitude = r.params(np + 2);
  }
  out.center = r.params(0);
  out.width = r.params(1);
  out.amplitude = r.params(2);
  out.offset = r.params(3);
  if (np == 5) out.step = r.params(4);
  out.covariance = r.covariance;
  return out;
}

PolarizationLines locate_polarization_lines(const diagram::DiagramGrid& grid,
                                            const TrackOptions& options) {
  diagram::validate(grid);
  PolarizationLines out;
  const Eigen::MatrixXd columns = grid.values.transpose();
  out.left = track_line(grid.values, grid.axis_x, grid.axis_y, options, "left", nullptr);
  out.right = track_line(columns, grid.axis_y, grid.axis_x, options, "right", nullptr);
  if (options.companion && out.left.size() >= 2 && out.right.size() >= 2) {
    out.left = track_line(grid.values, grid.axis_x, grid.axis_y, options, "left", &out.right);
    out.right = track_line(columns, grid.axis_y, grid.axis_x, options, "right", &out.left);
  }
  return out;
}

PolarizationLines to_detuning(const PolarizationLines& lines, const diagram::LeverArmSet& lv,
                              const diagram::SourceVoltages& v0) {
  diagram::validate(lv);
  const double al = lv.detuning_left(), ar = lv.detuning_right();
  const double x0 = v0.v_gate[0], y0 = v0.v_gate[3];
  PolarizationLines out = lines;
  for (std::size_t k = 0; k < out.left.size(); ++k) {
    out.left.sweep[k] = ar * (lines.left.sweep[k] - y0);
    out.left.center[k] = al * (lines.left.center[k] - x0);
    out.left.sigma[k] = al * lines.left.sigma[k];
  }
  for (std::size_t k = 0; k < out.right.size(); ++k) {
    out.right.sweep[k] = al * (lines.right.sweep[k] - x0);
    out.right.center[k] = ar * (lines.right.center[k] - y0);
    out.right.sigma[k] = ar * lines.right.sigma[k];
  }
  return out;
}

double ShiftCurveFit::g_ghz() const { return units::ueV_to_GHz(g); }
double ShiftCurveFit::g_sigma_ghz() const { return units::ueV_to_GHz(g_sigma); }

ShiftCurveFit fit_shift_tanh(const LineTrack& track) {
  const std::size_t n = track.size();
  if (n < 8) throw std::invalid_argument("shift curve needs at least 8 centre points");
  const auto [lo, hi] = plateaus(track);
  const double c0 = 0.5 * (lo + hi);
  const double g0 = hi - lo;
  const auto [smin_it, smax_it] = std::minmax_element(track.sweep.begin(), track.sweep.end());
  const double smin = *smin_it, smax = *smax_it;
  const double span = smax - smin;
  double eps0 = 0.5 * (smin + smax);
  for (std::size_t k = 0; k < n; ++k)
    if ((track.center[k] - c0) * (g0 >= 0.0 ? 1.0 : -1.0) > 0.0) {
      eps0 = track.sweep[k];
      break;
    }

  fit::Vector init(4);
  init << c0, g0, eps0, span / 20.0;
  fit::Bounds bounds{fit::Vector::Constant(4, -kInf), fit::Vector::Constant(4, kInf)};
  bounds.lower(2) = smin - span;
  bounds.upper(2) = smax + span;
  // A step sharper than the sampling is unresolved and only fits noise.
  bounds.lower(3) = span / static_cast<double>(n - 1);
  bounds.upper(3) = 10.0 * span;

  const fit::CurveModel model = [](double e, const fit::Vector& p) {
    return p(0) + 0.5 * p(1) * std::tanh((e - p(2)) / p(3));
  };
  const std::span<const double> sig =
      usable_sigmas(track.sigma) ? std::span<const double>(track.sigma) : std::span<const double>{};
  const auto r = fit::curve_fit(model, track.sweep, track.center, init, bounds, sig);

  ShiftCurveFit out;
  out.center = r.params(0);
  out.g = std::abs(r.params(1));
  out.g_sigma = r.sigma(1);
  out.transition = r.params(2);
  out.width = r.params(3);
  out.covariance = r.covariance;
  out.low_confidence = !(out.g > 2.0 * out.g_sigma);
  return out;
}

HamiltonianFit fit_hamiltonian_curvature(const LineTrack& left, const LineTrack& right, double t_e,
                                         const CurvatureFitOptions& options) {
  if (!(t_e > 0.0)) throw std::invalid_argument("electron temperature must be > 0");
  if (left.size() + right.size() < 8)
    throw std::invalid_argument("curvature fit needs at least 8 centre points");

  double window = 0.0;
  for (const LineTrack* t : {&left, &right})
    if (t->size() > 0) {
      const auto [a, b] = std::minmax_element(t->sweep.begin(), t->sweep.end());
      window = std::max(window, 0.5 * (*b - *a));
    }
  double g0 = 0.0;
  int tracks = 0;
  for (const LineTrack* t : {&left, &right})
    if (t->size() >= 4) {
      const auto [lo, hi] = plateaus(*t);
      g0 += std::abs(hi - lo);
      ++tracks;
    }
  g0 = tracks > 0 ? g0 / tracks : 0.0;

  fit::Vector init(3);
  init << options.t_l_initial.value_or(0.1 * window), options.t_r_initial.value_or(0.1 * window),
      options.g_initial.value_or(g0);
  const double upper = 10.0 * std::max(window, g0) + 1.0;
  const fit::Bounds bounds{fit::Vector::Zero(3), fit::Vector::Constant(3, upper)};
  init = init.cwiseMax(bounds.lower).cwiseMin(bounds.upper);

  struct Point {
    bool left;
    double sweep, center, weight;
  };
  std::vector<Point> points;
  const bool wl = options.weighted && usable_sigmas(left.sigma);
  const bool wr = options.weighted && usable_sigmas(right.sigma);
  for (std::size_t i = 0; i < left.size(); ++i)
    points.push_back({true, left.sweep[i], left.center[i], wl ? 1.0 / left.sigma[i] : 1.0});
  for (std::size_t i = 0; i < right.size(); ++i)
    points.push_back({false, right.sweep[i], right.center[i], wr ? 1.0 / right.sigma[i] : 1.0});

  const fit::ResidualFn residuals = [&](const fit::Vector& p) {
    fit::Vector r(static_cast<Eigen::Index>(points.size()));
    hamiltonian::TwoQubitParams q;
    q.t_l = p(0);
    q.t_r = p(1);
    q.g = p(2);
    q.t_e = t_e;
    for (std::size_t i = 0; i < points.size(); ++i) {
      const Point& pt = points[i];
      double root;
      if (pt.left) {
        q.eps_l = 0.0;
        q.eps_r = pt.sweep;
        root = hamiltonian::left_line_location(q, options.root_tolerance);
      } else {
        q.eps_r = 0.0;
        q.eps_l = pt.sweep;
        root = hamiltonian::right_line_location(q, options.root_tolerance);
      }
      r(static_cast<Eigen::Index>(i)) = (root - pt.center) * pt.weight;
    }
    return r;
  };

  auto r = fit::least_squares(residuals, init, bounds);
  int rejected = 0;
  for (int pass = 0; pass < 3 && options.outlier_threshold > 0.0; ++pass) {
    const fit::Vector res = residuals(r.params);
    std::vector<double> mags(static_cast<std::size_t>(res.size()));
    for (Eigen::Index i = 0; i < res.size(); ++i) mags[static_cast<std::size_t>(i)] = std::abs(res(i));
    const double scale = kMadToSigma * median(mags);
    if (!(scale > 0.0)) break;
    std::vector<Point> kept;
    for (std::size_t i = 0; i < points.size(); ++i)
      if (mags[i] <= options.outlier_threshold * scale) kept.push_back(points[i]);
    if (kept.size() == points.size() || kept.size() < 8) break;
    rejected += static_cast<int>(points.size() - kept.size());
    points = std::move(kept);
    r = fit::least_squares(residuals, r.params, bounds);
  }

  HamiltonianFit out;
  out.t_l = r.params(0);
  out.t_r = r.params(1);
  out.g = r.params(2);
  out.t_l_sigma = r.sigma(0);
  out.t_r_sigma = r.sigma(1);
  out.g_sigma = r.sigma(2);
  out.covariance = r.covariance;
  out.residual_norm = r.residual_norm();
  out.covariance_singular = r.covariance_singular;
  out.rejected = rejected;
  out.t_l_upper_bound = !(out.t_l > std::max(options.resolution, 2.0 * out.t_l_sigma));
  out.t_r_upper_bound = !(out.t_r > std::max(options.resolution, 2.0 * out.t_r_sigma));
  return out;
}

namespace {

LineTrack subtract_bias(const LineTrack& measured, const LineTrack& simulated,
                        const std::vector<double>& roots, double tolerance) {
  LineTrack out;
  out.truncated = measured.truncated;
  out.warning = measured.warning;
  std::size_t j = 0;
  for (std::size_t k = 0; k < measured.size(); ++k) {
    const double s = measured.sweep[k];
    while (j < simulated.size() && simulated.sweep[j] < s - tolerance) ++j;
    if (j == simulated.size() || std::abs(simulated.sweep[j] - s) > tolerance) continue;
    out.sweep.push_back(s);
    out.center.push_back(measured.center[k] - (simulated.center[j] - roots[j]));
    out.sigma.push_back(measured.sigma[k]);
  }
  return out;
}

}  // namespace

DiagramFitResult fit_hamiltonian_diagram(const diagram::DiagramGrid& grid,
                                         const diagram::PolarizationDiagramSpec& forward,
                                         const TrackOptions& track,
                                         const CurvatureFitOptions& options, int bias_rounds) {
  if (bias_rounds < 0) throw std::invalid_argument("bias_rounds must be >= 0");
  const double t_e = forward.params.t_e;
  DiagramFitResult out;
  const PolarizationLines raw = locate_polarization_lines(grid, track);
  out.lines = to_detuning(raw, forward.lever_arms, forward.v0);
  const std::size_t tracked = out.lines.left.size() + out.lines.right.size();
  if (tracked < 8)
    throw std::runtime_error("polarization lines could not be tracked (" + std::to_string(tracked) +
                             " centre points)");
  out.fit = fit_hamiltonian_curvature(out.lines.left, out.lines.right, t_e, options);

  diagram::PolarizationDiagramSpec sim = forward;
  sim.axis_x = grid.axis_x;
  sim.axis_y = grid.axis_y;
  sim.sensor.noise_sigma = 0.0;
  for (int round = 0; round < bias_rounds; ++round) {
    sim.params.t_l = out.fit.t_l;
    sim.params.t_r = out.fit.t_r;
    sim.params.g = out.fit.g;
    const PolarizationLines model = to_detuning(
        locate_polarization_lines(diagram::synthesize_polarization_diagram(sim), track),
        forward.lever_arms, forward.v0);

    hamiltonian::TwoQubitParams q = sim.params;
    std::vector<double> left_roots, right_roots;
    for (double s : model.left.sweep) {
      q.eps_r = s;
      left_roots.push_back(hamiltonian::left_line_location(q, options.root_tolerance));
    }
    q = sim.params;
    for (double s : model.right.sweep) {
      q.eps_l = s;
      right_roots.push_back(hamiltonian::right_line_location(q, options.root_tolerance));
    }
    CurvatureFitOptions next = options;
    next.t_l_initial = out.fit.t_l;
    next.t_r_initial = out.fit.t_r;
    next.g_initial = out.fit.g;
    const double tol_l = 0.25 * std::abs(grid.axis_y.step()) * forward.lever_arms.detuning_right();
    const double tol_r = 0.25 * std::abs(grid.axis_x.step()) * forward.lever_arms.detuning_left();
    out.fit = fit_hamiltonian_curvature(
        subtract_bias(out.lines.left, model.left, left_roots, tol_l),
        subtract_bias(out.lines.right, model.right, right_roots, tol_r), t_e, next);
    out.bias_rounds = round + 1;
  }
  return out;
}

double LeverArmFit::kt_e_ueV() const { return units::kelvin_to_ueV(t_e); }
double LeverArmFit::kt_e_ghz() const { return units::ueV_to_GHz(kt_e_ueV()); }

double thermal_width(double alpha, double t_mc, double t_e) {
  return 2.0 * units::kBoltzmannUeVPerK / alpha * std::hypot(t_mc, t_e);
}

LeverArmFit fit_thermal_broadening(const ThermalBroadeningData& data) {
  const std::size_t n = data.temperature.size();
  if (n < 4) throw std::invalid_argument("thermal broadening needs at least 4 temperatures");
  if (data.width_l.size() != n || data.width_r.size() != n)
    throw std::invalid_argument("width series must match the temperature series");
  if (!(data.voltage_shift_ratio > 0.0))
    throw std::invalid_argument("voltage shift ratio must be > 0");
  for (std::size_t i = 0; i < n; ++i)
    if (!(data.temperature[i] >= 0.0) || !(data.width_l[i] > 0.0) || !(data.width_r[i] > 0.0))
      throw std::invalid_argument("temperatures must be >= 0 and widths > 0");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return data.temperature[a] < data.temperature[b]; });
  const std::size_t first = order.front(), last = order.back();
  if (!(data.width_l[last] > data.width_l[first]) || !(data.width_r[last] > data.width_r[first]))
    throw std::runtime_error("widths do not increase with temperature (non-thermal regime)");

  const double ratio = data.voltage_shift_ratio;  // alpha_L / alpha_R
  const double t_max = data.temperature[last];
  const double alpha0 = thermal_width(1.0, t_max, 0.0) / data.width_l[last];
  const double t_min = data.temperature[first];
  const double tw = data.width_l[first] * alpha0 / thermal_width(1.0, 1.0, 0.0);
  const double te0 = std::sqrt(std::max(tw * tw - t_min * t_min, 1e-4));

  const fit::ResidualFn residuals = [&](const fit::Vector& p) {
    fit::Vector r(static_cast<Eigen::Index>(2 * n));
    for (std::size_t i = 0; i < n; ++i) {
      const double t = data.temperature[i];
      r(static_cast<Eigen::Index>(i)) = thermal_width(p(0), t, p(1)) - data.width_l[i];
      r(static_cast<Eigen::Index>(n + i)) = thermal_width(p(0) / ratio, t, p(1)) - data.width_r[i];
    }
    return r;
  };
  fit::Vector init(2);
  init << alpha0, te0;
  const fit::Bounds bounds{fit::Vector::Constant(2, 1e-9), fit::Vector::Constant(2, kInf)};
  const auto r = fit::least_squares(residuals, init, bounds);

  LeverArmFit out;
  out.alpha_l = r.params(0);
  out.alpha_r = r.params(0) / ratio;
  out.alpha_l_sigma = r.sigma(0);
  out.alpha_r_sigma = r.sigma(0) / ratio;
  out.t_e = r.params(1);
  out.t_e_sigma = r.sigma(1);
  return out;
}

}  // namespace qdarray::fitters
