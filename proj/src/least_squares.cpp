#include "qdarray/least_squares.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace qdarray::fit {

namespace {

Vector clamp(const Vector& p, const std::optional<Bounds>& bounds) {
  if (!bounds) return p;
  return p.cwiseMax(bounds->lower).cwiseMin(bounds->upper);
}

double half_squared(const Vector& r) { return 0.5 * r.squaredNorm(); }

struct Covariance {
  Matrix value;
  bool singular = false;
};

Covariance covariance_from_jacobian(const Matrix& jac, double cost, int m) {
  const Eigen::Index n = jac.cols();
  const Matrix jtj = jac.transpose() * jac;
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(jtj);
  const Vector ev = eig.eigenvalues();
  const double top = ev.cwiseAbs().maxCoeff();
  Covariance out;
  Vector inv_ev(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(top > 0.0) || ev(i) <= 1e-12 * top) {
      out.singular = true;
      inv_ev(i) = 0.0;
    } else {
      inv_ev(i) = 1.0 / ev(i);
    }
  }
  const double variance = m > n ? 2.0 * cost / static_cast<double>(m - n) : 1.0;
  out.value = eig.eigenvectors() * inv_ev.asDiagonal() * eig.eigenvectors().transpose() * variance;
  if (out.singular) {
    // Directions with no information get infinite variance.
    for (Eigen::Index i = 0; i < n; ++i)
      if (!(top > 0.0) || ev(i) <= 1e-12 * top)
        for (Eigen::Index k = 0; k < n; ++k)
          if (std::abs(eig.eigenvectors()(k, i)) > 1e-8)
            out.value(k, k) = std::numeric_limits<double>::infinity();
  }
  return out;
}

}  // namespace

double LeastSquaresResult::residual_norm() const { return std::sqrt(2.0 * cost); }

double LeastSquaresResult::sigma(int i) const { return std::sqrt(covariance(i, i)); }

Matrix numerical_jacobian(const ResidualFn& residuals, const Vector& params, const Vector& r0,
                          const std::optional<Bounds>& bounds, double relative_step) {
  const Eigen::Index n = params.size();
  Matrix jac(r0.size(), n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double h = relative_step * std::max(std::abs(params(j)), 1e-3);
    bool up_ok = true, down_ok = true;
    if (bounds) {
      up_ok = params(j) + h <= bounds->upper(j);
      down_ok = params(j) - h >= bounds->lower(j);
    }
    Vector p = params;
    if (up_ok && down_ok) {
      p(j) = params(j) + h;
      const Vector ru = residuals(p);
      p(j) = params(j) - h;
      const Vector rd = residuals(p);
      jac.col(j) = (ru - rd) / (2.0 * h);
    } else if (up_ok) {
      p(j) = params(j) + h;
      jac.col(j) = (residuals(p) - r0) / h;
    } else {
      p(j) = params(j) - h;
      jac.col(j) = (r0 - residuals(p)) / h;
    }
  }
  return jac;
}

LeastSquaresResult least_squares(const ResidualFn& residuals, const Vector& initial,
                                 const std::optional<Bounds>& bounds,
                                 const LeastSquaresOptions& options) {
  if (!initial.allFinite()) throw std::invalid_argument("initial parameters must be finite");
  if (bounds) {
    if (bounds->lower.size() != initial.size() || bounds->upper.size() != initial.size())
      throw std::invalid_argument("bounds size does not match parameter count");
    if ((initial.array() < bounds->lower.array()).any() ||
        (initial.array() > bounds->upper.array()).any())
      throw std::invalid_argument("initial parameters lie outside bounds");
  }

  Vector p = initial;
  Vector r = residuals(p);
  const int m = static_cast<int>(r.size());
  const Eigen::Index n = p.size();
  if (m < n) throw std::invalid_argument("fewer residuals than parameters");
  if (!r.allFinite()) throw std::invalid_argument("residuals at the initial point are not finite");

  double cost = half_squared(r);
  double lambda = 1e-3;
  bool converged = cost == 0.0;
  int iter = 0;

  while (!converged && iter < options.max_iterations) {
    ++iter;
    const Matrix jac = numerical_jacobian(residuals, p, r, bounds, options.jacobian_step);
    const Matrix jtj = jac.transpose() * jac;
    const Vector grad = jac.transpose() * r;
    Vector diag = jtj.diagonal();
    const double floor = std::max(diag.maxCoeff(), 1.0) * 1e-12;
    diag = diag.cwiseMax(floor);

    // Parameters held at a bound by a gradient pointing outward stay fixed.
    std::vector<bool> active(static_cast<std::size_t>(n), false);
    if (bounds)
      for (Eigen::Index j = 0; j < n; ++j)
        active[static_cast<std::size_t>(j)] =
            (p(j) <= bounds->lower(j) && grad(j) > 0.0) || (p(j) >= bounds->upper(j) && grad(j) < 0.0);

    bool accepted = false;
    while (!accepted) {
      Matrix damped = jtj;
      damped.diagonal() += lambda * diag;
      Vector rhs = -grad;
      for (Eigen::Index j = 0; j < n; ++j)
        if (active[static_cast<std::size_t>(j)]) {
          damped.row(j).setZero();
          damped.col(j).setZero();
          damped(j, j) = 1.0;
          rhs(j) = 0.0;
        }
      const Vector step = damped.ldlt().solve(rhs);
      const Vector trial = clamp(p + step, bounds);
      const Vector actual_step = trial - p;
      const Vector r_trial = residuals(trial);
      const double cost_trial = r_trial.allFinite() ? half_squared(r_trial)
                                                    : std::numeric_limits<double>::infinity();
      if (cost_trial < cost) {
        const double rel_cost = (cost - cost_trial) / std::max(cost, 1e-300);
        const double rel_step = actual_step.norm() / (p.norm() + options.step_tolerance);
        p = trial;
        r = r_trial;
        cost = cost_trial;
        lambda = std::max(lambda / 3.0, 1e-12);
        accepted = true;
        if (rel_cost < options.cost_tolerance || rel_step < options.step_tolerance || cost == 0.0)
          converged = true;
      } else {
        lambda *= 4.0;
        const double rel_step = actual_step.norm() / (p.norm() + options.step_tolerance);
        // No downhill step exists at machine precision: stationary point.
        if (lambda > 1e16 || rel_step < options.step_tolerance) {
          converged = true;
          break;
        }
      }
    }
  }

  LeastSquaresResult result;
  result.params = p;
  result.cost = cost;
  result.residual_count = m;
  result.iterations = iter;
  const Matrix jac = numerical_jacobian(residuals, p, r, bounds, options.jacobian_step);
  const Covariance cov = covariance_from_jacobian(jac, cost, m);
  result.covariance = cov.value;
  result.covariance_singular = cov.singular;
  if (!converged) throw FitError("least squares did not converge", result);
  return result;
}

LeastSquaresResult curve_fit(const CurveModel& model, std::span<const double> xs,
                             std::span<const double> ys, const Vector& initial,
                             const std::optional<Bounds>& bounds, std::span<const double> sigmas,
                             const LeastSquaresOptions& options) {
  if (xs.size() != ys.size()) throw std::invalid_argument("xs and ys differ in length");
  if (!sigmas.empty() && sigmas.size() != xs.size())
    throw std::invalid_argument("sigmas differ in length from data");
  const ResidualFn fn = [&](const Vector& params) {
    Vector r(static_cast<Eigen::Index>(xs.size()));
    for (std::size_t i = 0; i < xs.size(); ++i) {
      double v = model(xs[i], params) - ys[i];
      if (!sigmas.empty()) v /= sigmas[i];
      r(static_cast<Eigen::Index>(i)) = v;
    }
    return r;
  };
  return least_squares(fn, initial, bounds, options);
}

}  // namespace qdarray::fit
