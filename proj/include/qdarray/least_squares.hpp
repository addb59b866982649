#pragma once

// Bounded Levenberg-Marquardt with a finite-difference Jacobian. Shared by
// every fitting stage; each call is self-contained.

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <span>
#include <stdexcept>

namespace qdarray::fit {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Maps parameters to a residual vector (already divided by sigma when the
/// data are weighted).
using ResidualFn = std::function<Vector(const Vector&)>;

struct Bounds {
  Vector lower;
  Vector upper;
};

struct LeastSquaresOptions {
  int max_iterations = 500;
  double cost_tolerance = 1e-10;  // relative cost change
  double step_tolerance = 1e-10;  // relative step length
  double jacobian_step = 1e-6;    // relative finite-difference step
};

struct LeastSquaresResult {
  Vector params;
  Matrix covariance;  // (J^T J)^-1 * residual variance
  double cost = 0.0;  // 0.5 * |r|^2
  int residual_count = 0;
  int iterations = 0;
  bool covariance_singular = false;

  double residual_norm() const;
  double sigma(int i) const;
  int dof() const { return residual_count - static_cast<int>(params.size()); }
};

/// Thrown when the iteration limit is hit; carries the best point found.
class FitError : public std::runtime_error {
 public:
  FitError(const std::string& what, LeastSquaresResult best)
      : std::runtime_error(what), best_(std::move(best)) {}
  const LeastSquaresResult& best() const { return best_; }

 private:
  LeastSquaresResult best_;
};

LeastSquaresResult least_squares(const ResidualFn& residuals, const Vector& initial,
                                 const std::optional<Bounds>& bounds = std::nullopt,
                                 const LeastSquaresOptions& options = {});

/// y(x) = model(x, params) fitted to (xs, ys), optionally weighted by sigmas.
using CurveModel = std::function<double(double, const Vector&)>;

LeastSquaresResult curve_fit(const CurveModel& model, std::span<const double> xs,
                             std::span<const double> ys, const Vector& initial,
                             const std::optional<Bounds>& bounds = std::nullopt,
                             std::span<const double> sigmas = {},
                             const LeastSquaresOptions& options = {});

/// Central-difference Jacobian, switching to one-sided steps at bounds.
Matrix numerical_jacobian(const ResidualFn& residuals, const Vector& params, const Vector& r0,
                          const std::optional<Bounds>& bounds, double relative_step);

}  // namespace qdarray::fit
