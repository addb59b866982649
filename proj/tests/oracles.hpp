#pragma once

// Independent reference implementations for the tests. Nothing here calls
// into the library; matrices are plain arrays and every algorithm is the
// textbook one.

#include <array>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <utility>

namespace oracle {

using M4 = std::array<std::array<double, 4>, 4>;

inline constexpr double kE2PerAttofarad = 160217.6634;  // ueV
inline constexpr double kPlanck = 4.135667696;          // ueV / GHz
inline constexpr double kBoltzmann = 86.173303;         // ueV / K

/// Gauss-Jordan with partial pivoting.
inline M4 inverse(M4 a) {
  M4 inv{};
  for (int i = 0; i < 4; ++i) inv[i][i] = 1.0;
  for (int col = 0; col < 4; ++col) {
    int piv = col;
    for (int r = col + 1; r < 4; ++r)
      if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
    if (a[piv][col] == 0.0) throw std::runtime_error("singular");
    std::swap(a[piv], a[col]);
    std::swap(inv[piv], inv[col]);
    const double d = a[col][col];
    for (int c = 0; c < 4; ++c) {
      a[col][c] /= d;
      inv[col][c] /= d;
    }
    for (int r = 0; r < 4; ++r) {
      if (r == col) continue;
      const double f = a[r][col];
      for (int c = 0; c < 4; ++c) {
        a[r][c] -= f * a[col][c];
        inv[r][c] -= f * inv[col][c];
      }
    }
  }
  return inv;
}

/// Maxwell matrix of the linear chain: C_i on the diagonal, -C_ij between
/// neighbours.
inline M4 chain_maxwell(const std::array<double, 4>& c, const std::array<double, 3>& cij) {
  M4 m{};
  for (int i = 0; i < 4; ++i) m[i][i] = c[i];
  for (int k = 0; k < 3; ++k) m[k][k + 1] = m[k + 1][k] = -cij[k];
  return m;
}

/// e^2 C^-1 in ueV.
inline M4 energy_matrix(const std::array<double, 4>& c, const std::array<double, 3>& cij) {
  M4 k = inverse(chain_maxwell(c, cij));
  for (auto& row : k)
    for (auto& v : row) v *= kE2PerAttofarad;
  return k;
}

/// U(N) = (1/2) N^T K N with zero induced charge.
inline double chain_energy(const M4& k, const std::array<int, 4>& n) {
  double u = 0.0;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) u += 0.5 * n[i] * k[i][j] * n[j];
  return u;
}

/// Change of the left detuning mu_1 - mu_2 when the right electron moves
/// from dot 4 to dot 3, from total energies.
inline double coupling_from_energies(const std::array<double, 4>& c,
                                     const std::array<double, 3>& cij) {
  const M4 k = energy_matrix(c, cij);
  auto eps_left = [&](int n3, int n4) {
    return chain_energy(k, {1, 0, n3, n4}) - chain_energy(k, {0, 1, n3, n4});
  };
  return eps_left(0, 1) - eps_left(1, 0);
}

/// Cyclic Jacobi rotations; eigenvalues ascending, eigenvectors in columns.
inline std::pair<std::array<double, 4>, M4> jacobi(M4 a) {
  M4 v{};
  for (int i = 0; i < 4; ++i) v[i][i] = 1.0;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < 4; ++p)
      for (int q = p + 1; q < 4; ++q) off += a[p][q] * a[p][q];
    if (off < 1e-30) break;
    for (int p = 0; p < 4; ++p)
      for (int q = p + 1; q < 4; ++q) {
        if (a[p][q] == 0.0) continue;
        const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double cs = 1.0 / std::sqrt(t * t + 1.0), sn = t * cs;
        for (int k = 0; k < 4; ++k) {
          const double akp = a[k][p], akq = a[k][q];
          a[k][p] = cs * akp - sn * akq;
          a[k][q] = sn * akp + cs * akq;
        }
        for (int k = 0; k < 4; ++k) {
          const double apk = a[p][k], aqk = a[q][k];
          a[p][k] = cs * apk - sn * aqk;
          a[q][k] = sn * apk + cs * aqk;
        }
        for (int k = 0; k < 4; ++k) {
          const double vkp = v[k][p], vkq = v[k][q];
          v[k][p] = cs * vkp - sn * vkq;
          v[k][q] = sn * vkp + cs * vkq;
        }
      }
  }
  std::array<int, 4> idx{0, 1, 2, 3};
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j)
      if (a[idx[j]][idx[j]] < a[idx[i]][idx[i]]) std::swap(idx[i], idx[j]);
  std::array<double, 4> w{};
  M4 vs{};
  for (int i = 0; i < 4; ++i) {
    w[i] = a[idx[i]][idx[i]];
    for (int k = 0; k < 4; ++k) vs[k][i] = v[k][idx[i]];
  }
  return {w, vs};
}

/// Two-qubit Hamiltonian written out element by element in the basis
/// |LL>, |LR>, |RL>, |RR> (left double dot first); g sits on |RR>.
inline M4 two_qubit_hamiltonian(double eps_l, double eps_r, double t_l, double t_r, double g) {
  M4 h{};
  h[0][0] = 0.5 * (eps_l + eps_r);
  h[1][1] = 0.5 * (eps_l - eps_r);
  h[2][2] = 0.5 * (-eps_l + eps_r);
  h[3][3] = 0.5 * (-eps_l - eps_r) + g;
  h[0][2] = h[2][0] = t_l;
  h[1][3] = h[3][1] = t_l;
  h[0][1] = h[1][0] = t_r;
  h[2][3] = h[3][2] = t_r;
  return h;
}

struct Pol {
  double left = 0.0, right = 0.0;
};

inline Pol thermal_polarization(double eps_l, double eps_r, double t_l, double t_r, double g,
                                double t_e_kelvin) {
  const auto [w, v] = jacobi(two_qubit_hamiltonian(eps_l, eps_r, t_l, t_r, g));
  const double kt = kBoltzmann * t_e_kelvin;
  const double zl[4] = {1, 1, -1, -1}, zr[4] = {1, -1, 1, -1};
  Pol p;
  double z = 0.0;
  for (int i = 0; i < 4; ++i) {
    const double b = std::exp(-(w[i] - w[0]) / kt);
    double pl = 0.0, pr = 0.0;
    for (int k = 0; k < 4; ++k) {
      pl += zl[k] * v[k][i] * v[k][i];
      pr += zr[k] * v[k][i] * v[k][i];
    }
    p.left += b * pl;
    p.right += b * pr;
    z += b;
  }
  p.left /= z;
  p.right /= z;
  return p;
}

/// Root of a decreasing function by bisection on [lo, hi].
inline double bisect(const std::function<double(double)>& f, double lo, double hi, double tol = 1e-10) {
  double flo = f(lo);
  for (int i = 0; i < 200 && hi - lo > tol; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if ((fm > 0) == (flo > 0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

/// eps_l where P_L = 0 at the given eps_r.
inline double left_root(double eps_r, double t_l, double t_r, double g, double t_e) {
  return bisect([&](double e) { return thermal_polarization(e, eps_r, t_l, t_r, g, t_e).left; },
                -2000.0, 2000.0);
}

/// A * d/dx tanh((x - c)/w) + b
inline double tanh_peak(double x, double c, double w, double a, double b) {
  const double s = 1.0 / std::cosh((x - c) / w);
  return a * s * s / w + b;
}

/// Simple 64-bit LCG mapped to [0, 1); deterministic across platforms.
struct Lcg {
  unsigned long long state;
  explicit Lcg(unsigned long long seed) : state(seed * 2862933555777941757ULL + 3037000493ULL) {}
  double uniform() {
    state = state * 6364136223846793005ULL + 1442695040888963407ULL;
    return static_cast<double>(state >> 11) * (1.0 / 9007199254740992.0);
  }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
};

}  // namespace oracle
