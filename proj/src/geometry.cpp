#include "qdarray/geometry.hpp"

#include "parallel.hpp"
#include "qdarray/units.hpp"

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace qdarray::geometry {

namespace {

constexpr double kPi = std::numbers::pi;

struct GaussRule {
  std::array<double, 8> x{};
  std::array<double, 8> w{};
  int n = 0;
};

constexpr GaussRule kGauss4{{-0.8611363115940526, -0.3399810435848563, 0.3399810435848563,
                             0.8611363115940526},
                            {0.3478548451374538, 0.6521451548625461, 0.6521451548625461,
                             0.3478548451374538},
                            4};
constexpr GaussRule kGauss8{{-0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
                             -0.1834346424956498, 0.1834346424956498, 0.5255324099163290,
                             0.7966664774136267, 0.9602898564975363},
                            {0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
                             0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
                             0.2223810344533745, 0.1012285362903763},
                            8};

// Annular sector [r1, r2] x [t1, t2] on a disc centred at (cx, 0).
struct Panel {
  double cx = 0.0;
  double r1 = 0.0, r2 = 0.0, t1 = 0.0, t2 = 0.0;
  double px = 0.0, py = 0.0;  // collocation point
  double area = 0.0;
  double size = 0.0;
  int disc = 0;
};

// Rings of equal radial width; each ring is cut into near-square sectors.
std::vector<Panel> ring_mesh(double radius, int rings, double cx, int disc) {
  std::vector<Panel> panels;
  const double dr = radius / rings;
  for (int k = 0; k < rings; ++k) {
    const double r1 = k * dr, r2 = (k + 1) * dr;
    const double rm = 0.5 * (r1 + r2);
    const int sectors = k == 0 ? 4 : std::max(4, static_cast<int>(std::lround(2.0 * kPi * rm / dr)));
    const double dt = 2.0 * kPi / sectors;
    for (int s = 0; s < sectors; ++s) {
      Panel p;
      p.cx = cx;
      p.r1 = r1;
      p.r2 = r2;
      p.t1 = s * dt;
      p.t2 = (s + 1) * dt;
      const double tm = 0.5 * (p.t1 + p.t2);
      p.px = cx + rm * std::cos(tm);
      p.py = rm * std::sin(tm);
      p.area = 0.5 * (r2 * r2 - r1 * r1) * dt;
      p.size = std::max(dr, rm * dt);
      p.disc = disc;
      panels.push_back(p);
    }
  }
  return panels;
}

int ring_count_for(int panels) {
  // Total count is ~ pi * rings^2.
  int rings = 2;
  while (4 + static_cast<int>(kPi * (rings * rings - 1)) < panels) ++rings;
  return rings;
}

// Mean of 1 / |x - y| for y uniformly spread over the panel, with the panel
// lifted by dz relative to the observation point.
double panel_average(const Panel& p, double x, double y, double dz) {
  const double dx = x - (p.cx + 0.5 * (p.r1 + p.r2) * std::cos(0.5 * (p.t1 + p.t2)));
  const double dy = y - 0.5 * (p.r1 + p.r2) * std::sin(0.5 * (p.t1 + p.t2));
  const double dist = std::sqrt(dx * dx + dy * dy + dz * dz);
  if (dist > 4.0 * p.size) return 1.0 / dist;
  const GaussRule& rule = dist > 2.0 * p.size ? kGauss4 : kGauss8;
  const double hr = 0.5 * (p.r2 - p.r1), mr = 0.5 * (p.r2 + p.r1);
  const double ht = 0.5 * (p.t2 - p.t1), mt = 0.5 * (p.t2 + p.t1);
  double sum = 0.0;
  for (int i = 0; i < rule.n; ++i) {
    const double r = mr + hr * rule.x[static_cast<std::size_t>(i)];
    for (int j = 0; j < rule.n; ++j) {
      const double t = mt + ht * rule.x[static_cast<std::size_t>(j)];
      const double qx = x - (p.cx + r * std::cos(t));
      const double qy = y - r * std::sin(t);
      sum += rule.w[static_cast<std::size_t>(i)] * rule.w[static_cast<std::size_t>(j)] * r /
             std::sqrt(qx * qx + qy * qy + dz * dz);
    }
  }
  return sum * hr * ht / p.area;
}

struct Solution {
  Eigen::MatrixXd maxwell;
  double residual = 0.0;
  double rcond = 0.0;
  int panels_per_disc = 0;
};

Solution solve_discs(const std::vector<double>& centers, double radius, double depth,
                     double epsilon_r, bool screened, int panels_per_disc, int threads) {
  if (panels_per_disc < kMinPanels)
    throw std::invalid_argument("at least " + std::to_string(kMinPanels) + " panels per disc");
  const int rings = ring_count_for(panels_per_disc);
  std::vector<Panel> panels;
  const int ndisc = static_cast<int>(centers.size());
  int per_disc = 0;
  for (int d = 0; d < ndisc; ++d) {
    auto mesh = ring_mesh(radius, rings, centers[static_cast<std::size_t>(d)], d);
    per_disc = static_cast<int>(mesh.size());
    panels.insert(panels.end(), mesh.begin(), mesh.end());
  }
  const int n = static_cast<int>(panels.size());
  const double eps = epsilon_r * units::kVacuumPermittivity;
  const double k = 1.0 / (4.0 * kPi * eps);  // 1/aF per 1/nm

  Eigen::MatrixXd pot(n, n);
  detail::parallel_for(n, threads, [&](int i) {
    const Panel& obs = panels[static_cast<std::size_t>(i)];
    for (int j = 0; j < n; ++j) {
      const Panel& src = panels[static_cast<std::size_t>(j)];
      double v;
      if (i == j)
        v = 2.0 / std::sqrt(src.area / kPi);  // equal-area disc
      else
        v = panel_average(src, obs.px, obs.py, 0.0);
      if (screened) v -= panel_average(src, obs.px, obs.py, 2.0 * depth);
      pot(i, j) = k * v;
    }
  });

  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(pot);
  Solution sol;
  sol.rcond = lu.rcond();
  if (!(sol.rcond > 1e-13))
    throw std::runtime_error("BEM system is ill-conditioned (rcond " + std::to_string(sol.rcond) +
                             ")");
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(n, ndisc);
  for (int i = 0; i < n; ++i) rhs(i, panels[static_cast<std::size_t>(i)].disc) = 1.0;
  const Eigen::MatrixXd q = lu.solve(rhs);
  sol.residual = (pot * q - rhs).cwiseAbs().maxCoeff();
  sol.maxwell = Eigen::MatrixXd::Zero(ndisc, ndisc);
  for (int i = 0; i < n; ++i)
    for (int a = 0; a < ndisc; ++a) sol.maxwell(panels[static_cast<std::size_t>(i)].disc, a) += q(i, a);
  sol.panels_per_disc = per_disc;
  return sol;
}

}  // namespace

void validate(const DiscPairGeometry& g) {
  if (!(g.diameter > 0.0)) throw std::invalid_argument("disc diameter must be > 0");
  if (!(g.depth > 0.0)) throw std::invalid_argument("depth below the plane must be > 0");
  if (!(g.epsilon_r > 0.0)) throw std::invalid_argument("relative permittivity must be > 0");
  if (!(g.center_distance >= g.diameter))
    throw std::invalid_argument("discs overlap: center distance " +
                                std::to_string(g.center_distance) + " nm < diameter " +
                                std::to_string(g.diameter) + " nm");
}

CapacitancePair bem_capacitance(const DiscPairGeometry& geom, int panels) {
  validate(geom);
  const double half = 0.5 * geom.center_distance;
  const Solution sol = solve_discs({-half, half}, 0.5 * geom.diameter, geom.depth, geom.epsilon_r,
                                   geom.screened, panels, 1);
  const Eigen::MatrixXd& m = sol.maxwell;
  CapacitancePair out;
  const double offdiag = 0.5 * (m(0, 1) + m(1, 0));
  out.c_mutual = -offdiag;
  for (int i = 0; i < 2; ++i) {
    out.c_self[i] = m(i, i);
    out.c_ground[i] = m(i, i) + offdiag;
  }
  out.panel_count = sol.panels_per_disc;
  out.residual = sol.residual;
  out.asymmetry = std::abs(m(0, 1) - m(1, 0)) / std::abs(offdiag);
  out.rcond = sol.rcond;
  return out;
}

double single_disc_capacitance(double diameter, double epsilon_r, double depth, bool screened,
                               int panels) {
  if (!(diameter > 0.0) || !(epsilon_r > 0.0) || (screened && !(depth > 0.0)))
    throw std::invalid_argument("invalid single-disc geometry");
  return solve_discs({0.0}, 0.5 * diameter, depth, epsilon_r, screened, panels, 1).maxwell(0, 0);
}

double analytic_disc_capacitance(double diameter, double epsilon_r) {
  return 4.0 * epsilon_r * units::kVacuumPermittivity * diameter;
}

std::vector<SweepRow> sweep_distance(const DiscPairGeometry& templ, const std::vector<double>& ds,
                                     int panels, int threads) {
  DiscPairGeometry g = templ;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (ds[i] < templ.diameter || ds[i] > 3.0 * templ.diameter)
      throw std::invalid_argument("sweep distance " + std::to_string(ds[i]) +
                                  " nm outside [D, 3D]");
    if (i > 0 && !(ds[i] > ds[i - 1]))
      throw std::invalid_argument("sweep distances must ascend");
  }
  std::vector<SweepRow> rows(ds.size());
  detail::parallel_for(static_cast<int>(ds.size()), threads, [&](int i) {
    DiscPairGeometry gi = g;
    gi.center_distance = ds[static_cast<std::size_t>(i)];
    gi.screened = true;
    const auto s = bem_capacitance(gi, panels);
    gi.screened = false;
    const auto u = bem_capacitance(gi, panels);
    rows[static_cast<std::size_t>(i)] = {gi.center_distance, s.c_mutual, u.c_mutual, s.c_self[0],
                                         u.c_self[0]};
  });
  return rows;
}

std::vector<double> default_distances(int count) {
  std::vector<double> ds;
  for (int i = 0; i < count; ++i) ds.push_back(85.0 + 90.0 * i / (count - 1));
  return ds;
}

PowerLawFit power_law_fit(const std::vector<double>& d, const std::vector<double>& c) {
  if (d.size() != c.size()) throw std::invalid_argument("d and C differ in length");
  const int n = static_cast<int>(d.size());
  if (n < 5) throw std::invalid_argument("power-law fit needs at least 5 points");
  Eigen::MatrixXd design(n, 2);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    if (!(d[k] > 0.0) || !(c[k] > 0.0))
      throw std::invalid_argument("power-law fit needs positive values");
    design(i, 0) = std::log(d[k]);
    design(i, 1) = 1.0;
    y(i) = std::log(c[k]);
  }
  const Eigen::Matrix2d normal = design.transpose() * design;
  const Eigen::Vector2d coef = normal.ldlt().solve(design.transpose() * y);
  const double rss = (design * coef - y).squaredNorm();
  const Eigen::Matrix2d cov = normal.inverse() * (rss / (n - 2));
  return {coef(0), std::sqrt(cov(0, 0)), std::exp(coef(1))};
}

}  // namespace qdarray::geometry
