#include "qdarray/transitions.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>

namespace qdarray::fitters {

namespace {

constexpr double kMadToSigma = 1.4826;

double median_of(std::vector<double> v) {
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  double m = *mid;
  if (v.size() % 2 == 0) m = 0.5 * (m + *std::max_element(v.begin(), mid));
  return m;
}

struct Estimate {
  double value = 0.0;
  double sigma = 0.0;
};

// Inverse-variance mean, falling back to the plain mean when any sigma is 0.
Estimate combine(const std::vector<Estimate>& xs) {
  const bool weighted =
      std::all_of(xs.begin(), xs.end(), [](const Estimate& e) { return e.sigma > 0.0; });
  Estimate out;
  if (weighted) {
    double wsum = 0.0;
    for (const auto& e : xs) {
      const double w = 1.0 / (e.sigma * e.sigma);
      out.value += w * e.value;
      wsum += w;
    }
    out.value /= wsum;
    out.sigma = 1.0 / std::sqrt(wsum);
  } else {
    double var = 0.0;
    for (const auto& e : xs) {
      out.value += e.value;
      var += e.sigma * e.sigma;
    }
    out.value /= static_cast<double>(xs.size());
    out.sigma = std::sqrt(var) / static_cast<double>(xs.size());
  }
  return out;
}

double window_sweep_center(const Window& w, CutDirection d) {
  return d == CutDirection::AlongX ? 0.5 * (w.y_min + w.y_max) : 0.5 * (w.x_min + w.x_max);
}

}  // namespace

double TransitionLine::position_variance(double s) const {
  return covariance(0, 0) * s * s + 2.0 * covariance(0, 1) * s + covariance(1, 1);
}

std::vector<std::pair<double, double>> find_peaks(const diagram::DiagramGrid& grid,
                                                  const Window& window, CutDirection direction) {
  diagram::validate(grid);
  const bool along_x = direction == CutDirection::AlongX;
  const diagram::Axis& cut = along_x ? grid.axis_x : grid.axis_y;
  const diagram::Axis& sweep = along_x ? grid.axis_y : grid.axis_x;
  const double cut_lo = along_x ? window.x_min : window.y_min;
  const double cut_hi = along_x ? window.x_max : window.y_max;
  const double sweep_lo = along_x ? window.y_min : window.x_min;
  const double sweep_hi = along_x ? window.y_max : window.x_max;

  std::vector<int> cut_idx;
  for (int i = 0; i < cut.npoints; ++i) {
    const double c = cut.at(i);
    if (c >= cut_lo && c <= cut_hi) cut_idx.push_back(i);
  }
  std::vector<std::pair<double, double>> peaks;
  if (cut_idx.size() < 3) return peaks;

  for (int k = 0; k < sweep.npoints; ++k) {
    const double s = sweep.at(k);
    if (s < sweep_lo || s > sweep_hi) continue;
    auto value = [&](int i) { return along_x ? grid.values(k, i) : grid.values(i, k); };
    std::vector<double> vals;
    vals.reserve(cut_idx.size());
    for (int i : cut_idx) vals.push_back(value(i));
    const double med = median_of(vals);
    std::vector<double> dev(vals.size());
    for (std::size_t i = 0; i < vals.size(); ++i) dev[i] = std::abs(vals[i] - med);
    const double noise = kMadToSigma * median_of(dev);
    const auto best = std::max_element(vals.begin(), vals.end());
    const std::size_t j = static_cast<std::size_t>(best - vals.begin());
    if (!(*best - med > 3.0 * noise) || !(*best > med)) continue;
    if (j == 0 || j + 1 == vals.size()) continue;  // peak on the window edge
    const double y0 = vals[j - 1], y1 = vals[j], y2 = vals[j + 1];
    const double denom = y0 - 2.0 * y1 + y2;
    const double shift = denom < 0.0 ? 0.5 * (y0 - y2) / denom : 0.0;
    peaks.emplace_back(s, cut.at(cut_idx[j]) + shift * cut.step());
  }
  return peaks;
}

TransitionLine fit_transition_line(const diagram::DiagramGrid& grid, const Window& window,
                                   CutDirection direction) {
  const auto peaks = find_peaks(grid, window, direction);
  const int n = static_cast<int>(peaks.size());
  if (n < 5)
    throw std::runtime_error("transition window holds " + std::to_string(n) +
                             " peaks; at least 5 are needed");
  Eigen::MatrixXd design(n, 2);
  Eigen::VectorXd pos(n);
  for (int i = 0; i < n; ++i) {
    design(i, 0) = peaks[static_cast<std::size_t>(i)].first;
    design(i, 1) = 1.0;
    pos(i) = peaks[static_cast<std::size_t>(i)].second;
  }
  const Eigen::Matrix2d normal = design.transpose() * design;
  const Eigen::Vector2d coef = normal.ldlt().solve(design.transpose() * pos);
  const double rss = (design * coef - pos).squaredNorm();
  TransitionLine line;
  line.slope = coef(0);
  line.intercept = coef(1);
  line.covariance = normal.inverse() * (n > 2 ? rss / (n - 2) : 0.0);
  line.direction = direction;
  line.peaks = n;
  return line;
}

std::pair<double, double> line_spacing_energy(const TransitionLine& a, const Window& wa,
                                              const TransitionLine& b, const Window& wb,
                                              double alpha, double alpha_sigma) {
  if (a.direction != b.direction)
    throw std::invalid_argument("transition lines were cut along different axes");
  const double s = 0.5 * (window_sweep_center(wa, a.direction) + window_sweep_center(wb, b.direction));
  const double d = std::abs(b.position(s) - a.position(s));
  const double d_var = a.position_variance(s) + b.position_variance(s);
  const double e = alpha * d;
  const double e_sigma = std::sqrt(alpha * alpha * d_var + d * d * alpha_sigma * alpha_sigma);
  return {e, e_sigma};
}

capnet::ElectrostaticEnergies extract_energies(std::span<const HoneycombMeasurement> measurements,
                                               const diagram::LeverArmSet& lv) {
  std::array<std::vector<Estimate>, 4> charging;
  std::array<std::vector<Estimate>, 3> coupling;

  for (const auto& m : measurements) {
    const int dx = diagram::gate_index(m.grid.axis_x.name);
    const int dy = diagram::gate_index(m.grid.axis_y.name);
    if (std::abs(dx - dy) != 1)
      throw std::invalid_argument("honeycomb axes must sweep plungers of adjacent dots");
    const auto& w = m.windows;
    const double ax = lv.alpha(dx, dx), ay = lv.alpha(dy, dy);
    if (!(ax > 0.0) || !(ay > 0.0))
      throw std::invalid_argument("plunger lever arms must be > 0");
    const double ax_s = lv.sigma(dx, dx), ay_s = lv.sigma(dy, dy);

    const auto x1 = fit_transition_line(m.grid, w.x_first, CutDirection::AlongX);
    const auto x2 = fit_transition_line(m.grid, w.x_second, CutDirection::AlongX);
    const auto x3 = fit_transition_line(m.grid, w.x_shifted, CutDirection::AlongX);
    const auto y1 = fit_transition_line(m.grid, w.y_first, CutDirection::AlongY);
    const auto y2 = fit_transition_line(m.grid, w.y_second, CutDirection::AlongY);
    const auto y3 = fit_transition_line(m.grid, w.y_shifted, CutDirection::AlongY);

    auto push = [](std::vector<Estimate>& v, std::pair<double, double> e) {
      v.push_back({e.first, e.second});
    };
    push(charging[static_cast<std::size_t>(dx)],
         line_spacing_energy(x1, w.x_first, x2, w.x_second, ax, ax_s));
    push(charging[static_cast<std::size_t>(dy)],
         line_spacing_energy(y1, w.y_first, y2, w.y_second, ay, ay_s));

    // E_Cij = E_Cji: both readings are averaged.
    const auto rx = line_spacing_energy(x1, w.x_first, x3, w.x_shifted, ax, ax_s);
    const auto ry = line_spacing_energy(y1, w.y_first, y3, w.y_shifted, ay, ay_s);
    push(coupling[static_cast<std::size_t>(std::min(dx, dy))],
         {0.5 * (rx.first + ry.first), 0.5 * std::hypot(rx.second, ry.second)});
  }

  capnet::ElectrostaticEnergies en;
  capnet::Seven sigma{};
  for (int i = 0; i < 4; ++i) {
    if (charging[static_cast<std::size_t>(i)].empty())
      throw std::invalid_argument("no honeycomb measures E_C" + std::to_string(i + 1));
    const Estimate e = combine(charging[static_cast<std::size_t>(i)]);
    en.e_c[static_cast<std::size_t>(i)] = e.value;
    sigma[static_cast<std::size_t>(i)] = e.sigma;
  }
  for (int k = 0; k < 3; ++k) {
    if (coupling[static_cast<std::size_t>(k)].empty())
      throw std::invalid_argument("no honeycomb measures E_C" + std::to_string(k + 1) +
                                  std::to_string(k + 2));
    const Estimate e = combine(coupling[static_cast<std::size_t>(k)]);
    en.e_cc[static_cast<std::size_t>(k)] = e.value;
    sigma[static_cast<std::size_t>(4 + k)] = e.sigma;
  }
  en.sigma = sigma;
  return en;
}

}  // namespace qdarray::fitters
