#include "qdarray/hamiltonian.hpp"

#include "qdarray/units.hpp"

#include <cmath>
#include <stdexcept>

namespace qdarray::hamiltonian {

namespace {

using Matrix2 = Eigen::Matrix2d;

const Matrix2 kIdentity = Matrix2::Identity();
const Matrix2 kSigmaX = (Matrix2() << 0.0, 1.0, 1.0, 0.0).finished();
const Matrix2 kSigmaZ = (Matrix2() << 1.0, 0.0, 0.0, -1.0).finished();

Matrix4 kron(const Matrix2& a, const Matrix2& b) {
  Matrix4 out;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) out.block<2, 2>(2 * i, 2 * j) = a(i, j) * b;
  return out;
}

const Matrix4 kSigmaZLeft = kron(kSigmaZ, kIdentity);
const Matrix4 kSigmaZRight = kron(kIdentity, kSigmaZ);

Polarization weighted_polarization(const EigenSystem& es, double kt) {
  Polarization p;
  double z = 0.0;
  for (int i = 0; i < 4; ++i) {
    const double w = kt > 0.0 ? std::exp(-(es.energies[i] - es.energies[0]) / kt) : (i == 0);
    const auto psi = es.states.col(i);
    p.left += w * psi.dot(kSigmaZLeft * psi);
    p.right += w * psi.dot(kSigmaZRight * psi);
    z += w;
  }
  p.left /= z;
  p.right /= z;
  return p;
}

template <typename Pol>
double bisect_root(Pol&& pol, double scale, double tolerance) {
  // pol is strictly decreasing: positive on the low side, negative on the high.
  double lo = -scale, hi = scale;
  for (int k = 0; k < 64 && pol(lo) <= 0.0; ++k) lo -= scale * std::ldexp(1.0, k);
  for (int k = 0; k < 64 && pol(hi) >= 0.0; ++k) hi += scale * std::ldexp(1.0, k);
  if (!(pol(lo) > 0.0) || !(pol(hi) < 0.0))
    throw std::runtime_error("could not bracket polarization line");
  while (hi - lo > tolerance) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double v = pol(mid);
    if (v > 0.0)
      lo = mid;
    else if (v < 0.0)
      hi = mid;
    else
      return mid;
  }
  return 0.5 * (lo + hi);
}

double bracket_scale(const TwoQubitParams& p) {
  return p.g + 10.0 * (units::kelvin_to_ueV(p.t_e) + p.t_l + p.t_r) + 1.0;
}

}  // namespace

void validate(const TwoQubitParams& p) {
  for (double v : {p.eps_l, p.eps_r, p.t_l, p.t_r, p.g, p.t_e})
    if (!std::isfinite(v)) throw std::invalid_argument("Hamiltonian parameters must be finite");
  if (p.t_l < 0.0 || p.t_r < 0.0) throw std::invalid_argument("tunnel couplings must be >= 0");
  if (p.g < 0.0) throw std::invalid_argument("capacitive coupling g must be >= 0");
  if (p.t_e <= 0.0) throw std::invalid_argument("electron temperature must be > 0");
}

Matrix4 build_hamiltonian(const TwoQubitParams& p) {
  const Matrix2 inner = kIdentity - kSigmaZ;
  return 0.5 * p.eps_l * kron(kSigmaZ, kIdentity) + p.t_l * kron(kSigmaX, kIdentity) +
         0.5 * p.eps_r * kron(kIdentity, kSigmaZ) + p.t_r * kron(kIdentity, kSigmaX) +
         0.25 * p.g * kron(inner, inner);
}

EigenSystem eigensystem(const Matrix4& h) {
  const double norm = h.norm();
  if ((h - h.transpose()).norm() > 1e-12 * std::max(norm, 1.0))
    throw std::invalid_argument("eigensystem requires a symmetric matrix");
  const Eigen::SelfAdjointEigenSolver<Matrix4> solver(h);
  if (solver.info() != Eigen::Success) throw std::runtime_error("eigensolver failed");
  EigenSystem es;
  es.states = solver.eigenvectors();
  for (int i = 0; i < 4; ++i) {
    es.energies[i] = solver.eigenvalues()(i);
    Eigen::Index big = 0;
    es.states.col(i).cwiseAbs().maxCoeff(&big);
    if (es.states(big, i) < 0.0) es.states.col(i) *= -1.0;
  }
  return es;
}

Polarization thermal_polarization(const TwoQubitParams& p) {
  validate(p);
  return weighted_polarization(eigensystem(build_hamiltonian(p)), units::kelvin_to_ueV(p.t_e));
}

Polarization ground_state_polarization(const TwoQubitParams& p) {
  return weighted_polarization(eigensystem(build_hamiltonian(p)), 0.0);
}

double single_qubit_polarization(double eps, double t, double t_e) {
  const double kt = units::kelvin_to_ueV(t_e);
  const double omega = std::hypot(0.5 * eps, t);
  if (omega == 0.0) return 0.0;
  return -(0.5 * eps / omega) * std::tanh(omega / kt);
}

double left_line_location(const TwoQubitParams& p, double tolerance) {
  validate(p);
  TwoQubitParams q = p;
  return bisect_root(
      [&](double eps) {
        q.eps_l = eps;
        return thermal_polarization(q).left;
      },
      bracket_scale(p), tolerance);
}

double right_line_location(const TwoQubitParams& p, double tolerance) {
  validate(p);
  TwoQubitParams q = p;
  return bisect_root(
      [&](double eps) {
        q.eps_r = eps;
        return thermal_polarization(q).right;
      },
      bracket_scale(p), tolerance);
}

}  // namespace qdarray::hamiltonian
