#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"
#include "qdarray/capnet.hpp"
#include "qdarray/units.hpp"

#include <cmath>

using namespace qdarray;
using capnet::CapacitanceNetwork;

namespace {

CapacitanceNetwork symmetric_net() { return CapacitanceNetwork::uniform(45.0, 9.0, 2.25, 9.0); }

CapacitanceNetwork random_net(oracle::Lcg& rng) {
  CapacitanceNetwork net;
  for (auto& c : net.c_inter) c = rng.uniform(0.0, 15.0);
  for (int i = 0; i < 4; ++i) {
    const double left = i > 0 ? net.c_inter[i - 1] : 0.0;
    const double right = i < 3 ? net.c_inter[i] : 0.0;
    net.c_total[i] = (left + right) * rng.uniform(1.05, 3.0) + rng.uniform(5.0, 60.0);
  }
  return net;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace

TEST_CASE("Maxwell matrix is the tridiagonal chain") {
  const auto net = symmetric_net();
  const auto m = capnet::maxwell_matrix(net);
  const auto ref = oracle::chain_maxwell(net.c_total, net.c_inter);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) CHECK(m(i, j) == ref[i][j]);
  CHECK(m.isApprox(m.transpose()));
  CHECK(Eigen::SelfAdjointEigenSolver<capnet::Matrix4>(m).eigenvalues().minCoeff() > 0.0);
}

TEST_CASE("determinant of the symmetric network") {
  // 45^4 - 2*45^2*81 - 45^2*2.25^2 + 81^2 by cofactor expansion.
  const double expected = 45.0 * 45.0 * 45.0 * 45.0 - 2.0 * 45.0 * 45.0 * 81.0 -
                          45.0 * 45.0 * 2.25 * 2.25 + 81.0 * 81.0;
  CHECK(expected == doctest::Approx(3768884.4375));
  CHECK(capnet::maxwell_determinant(symmetric_net()) == doctest::Approx(3768884.4375).epsilon(1e-14));
  CHECK(capnet::maxwell_matrix(symmetric_net()).determinant() ==
        doctest::Approx(3768884.4375).epsilon(1e-12));
}

TEST_CASE("decoupled nodes give a diagonal matrix") {
  CapacitanceNetwork net;
  net.c_total = {40.0, 45.0, 50.0, 55.0};
  CHECK(capnet::maxwell_determinant(net) == doctest::Approx(40.0 * 45.0 * 50.0 * 55.0));
  const auto en = capnet::energies_from_capacitances(net);
  for (int i = 0; i < 4; ++i)
    CHECK(en.e_c[i] == doctest::Approx(units::kE2PerAttofarad / net.c_total[i]));
  for (double e : en.e_cc) CHECK(e == 0.0);
}

TEST_CASE("network invariants are enforced") {
  auto net = symmetric_net();
  net.c_total[0] = 9.0;  // equals C_12
  CHECK_THROWS_AS(capnet::maxwell_matrix(net), std::invalid_argument);
  net = symmetric_net();
  net.c_inter[1] = -1.0;
  CHECK_THROWS_AS(capnet::validate(net), std::invalid_argument);
  net = symmetric_net();
  net.c_gate[2] = -0.1;
  CHECK_THROWS_AS(capnet::validate(net), std::invalid_argument);
  capnet::ElectrostaticEnergies en;
  en.e_c = {3000, 3000, 3000, 3000};
  en.e_cc = {3000, 100, 100};  // E_C12^2 = E_C1 E_C2
  CHECK_THROWS_AS(capnet::capacitances_from_energies(en), std::invalid_argument);
  CHECK_THROWS_AS(capnet::validate(capnet::ChargeState{{0, -1, 0, 0}}), std::invalid_argument);
}

TEST_CASE("energies equal finite differences of U") {
  oracle::Lcg rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const auto net = random_net(rng);
    const auto en = capnet::energies_from_capacitances(net);
    const auto k = oracle::energy_matrix(net.c_total, net.c_inter);
    for (int i = 0; i < 4; ++i) CHECK(rel(en.e_c[i], k[i][i]) < 1e-12);
    for (int p = 0; p < 3; ++p) CHECK(rel(en.e_cc[p], k[p][p + 1]) < 1e-12);

    const capnet::SourceVoltages v0{};
    auto u = [&](std::array<int, 4> n) {
      return capnet::electrostatic_energy(net, capnet::ChargeState{n}, v0);
    };
    CHECK(u({0, 0, 0, 0}) == 0.0);
    CHECK(rel(u({1, 0, 0, 0}), 0.5 * en.e_c[0]) < 1e-12);
    // Second difference of U in N_1 and mixed difference in (N_1, N_2).
    CHECK(rel(u({2, 0, 0, 0}) - 2.0 * u({1, 0, 0, 0}), en.e_c[0]) < 1e-10);
    CHECK(rel(u({1, 1, 0, 0}) - u({1, 0, 0, 0}) - u({0, 1, 0, 0}), en.e_cc[0]) < 1e-10);
    CHECK(rel(u({0, 1, 1, 0}) - u({0, 1, 0, 0}) - u({0, 0, 1, 0}), en.e_cc[1]) < 1e-10);
    CHECK(rel(u({0, 0, 1, 1}) - u({0, 0, 1, 0}) - u({0, 0, 0, 1}), en.e_cc[2]) < 1e-10);
  }
}

TEST_CASE("E_C23 of the symmetric network") {
  const auto en = capnet::energies_from_capacitances(symmetric_net());
  CHECK(en.e_cc[1] == doctest::Approx(units::kE2PerAttofarad * 45.0 * 45.0 * 2.25 / 3768884.4375)
                          .epsilon(1e-12));
}

TEST_CASE("U is mirror symmetric on a mirror-symmetric network") {
  auto net = CapacitanceNetwork::uniform(50.0, 8.0, 3.0, 8.0);
  net.c_gate = {5.0, 6.0, 6.0, 5.0};
  net.c_ohmic = {2.0, 2.0};
  capnet::SourceVoltages v;
  v.v_gate = {10.0, -4.0, -4.0, 10.0};
  v.v_ohmic = {1.0, 1.0};
  capnet::SourceVoltages vm = v;
  for (const auto& n : {std::array<int, 4>{1, 2, 0, 3}, std::array<int, 4>{0, 1, 1, 2}}) {
    const std::array<int, 4> mirrored{n[3], n[2], n[1], n[0]};
    CHECK(capnet::electrostatic_energy(net, {n}, v) ==
          doctest::Approx(capnet::electrostatic_energy(net, {mirrored}, vm)).epsilon(1e-12));
  }
}

TEST_CASE("capacitance-energy round trip over random networks") {
  oracle::Lcg rng(11);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto net = random_net(rng);
    const auto back = capnet::capacitances_from_energies(capnet::energies_from_capacitances(net));
    const auto a = net.dot_capacitances(), b = back.net.dot_capacitances();
    for (int i = 0; i < 7; ++i)
      worst = std::max(worst, std::abs(a[i] - b[i]) / std::max(a[i], 1e-3 * a[0]));
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("zero coupling energies invert to isolated dots") {
  capnet::ElectrostaticEnergies en;
  en.e_c = {2400.0, 3000.0, 3600.0, 4400.0};
  const auto est = capnet::capacitances_from_energies(en);
  for (int i = 0; i < 4; ++i)
    CHECK(est.net.c_total[i] == doctest::Approx(units::kE2PerAttofarad / en.e_c[i]));
  for (double c : est.net.c_inter) CHECK(c == 0.0);
}

TEST_CASE("uncertainties propagate to first order") {
  capnet::ElectrostaticEnergies en;
  en.e_c = {3400.0, 3100.0, 3300.0, 3600.0};
  en.e_cc = {600.0, 200.0, 500.0};
  en.sigma = capnet::Seven{20, 30, 25, 15, 10, 5, 12};
  const auto est = capnet::capacitances_from_energies(en);
  REQUIRE(est.sigma);
  // Independent central differences of the inverse, summed in quadrature.
  const auto e0 = en.values();
  for (int out = 0; out < 7; ++out) {
    double var = 0.0;
    for (int in = 0; in < 7; ++in) {
      auto up = e0, dn = e0;
      const double h = 1e-4 * e0[in];
      up[in] += h;
      dn[in] -= h;
      const double d = (capnet::capacitances_from_energies(capnet::ElectrostaticEnergies::from_values(up))
                            .net.dot_capacitances()[out] -
                        capnet::capacitances_from_energies(capnet::ElectrostaticEnergies::from_values(dn))
                            .net.dot_capacitances()[out]) /
                       (2.0 * h);
      var += d * d * (*en.sigma)[in] * (*en.sigma)[in];
    }
    CHECK((*est.sigma)[out] == doctest::Approx(std::sqrt(var)).epsilon(1e-5));
  }
}

TEST_CASE("measured-range energies give capacitances in the measured windows") {
  // Representative charging and coupling energies inside the measured ranges.
  capnet::ElectrostaticEnergies en;
  en.e_c = {2400.0, 3300.0, 4400.0, 3000.0};
  en.e_cc = {500.0, 300.0, 600.0};
  const auto est = capnet::capacitances_from_energies(en);
  for (double c : est.net.c_inter) {
    CHECK(c > 2.0);
    CHECK(c < 13.0);
  }
  // C_i in [36, 67] aF maps into the 2.4-4.4 meV charging-energy window.
  for (double c : {36.5, 50.0, 66.7}) {
    const auto e = capnet::energies_from_capacitances(CapacitanceNetwork::uniform(c, 0.0, 0.0, 0.0));
    CHECK(e.e_c[0] > 2400.0);
    CHECK(e.e_c[0] < 4400.0);
  }
}

TEST_CASE("coupling forms agree") {
  oracle::Lcg rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const auto net = random_net(rng);
    const double exact = capnet::coupling_exact(net);
    const double shift = capnet::coupling_by_shift(net);
    const double oracle_g = oracle::coupling_from_energies(net.c_total, net.c_inter);
    CHECK(rel(shift, exact) < 1e-12);
    CHECK(rel(capnet::coupling_by_shift_right(net), exact) < 1e-12);
    CHECK(rel(oracle_g, exact) < 1e-10);
    CHECK(exact >= 0.0);
    CHECK(rel(capnet::coupling_by_shift(net, capnet::ChargeState{{2, 2, 3, 1}}), exact) < 1e-12);
  }
}

TEST_CASE("coupling of the symmetric network") {
  const auto net = symmetric_net();
  const double c12 = 0.2, c23 = 0.05;
  const double ratio = c23 * (1 - c12) * (1 - c12) / (1 - 2 * c12 * c12 - c23 * c23 + c12 * c12 * c12 * c12);
  const double g = capnet::coupling_exact(net);
  CHECK(g == doctest::Approx(ratio * units::kE2PerAttofarad / 45.0).epsilon(1e-12));
  CHECK(g == doctest::Approx(124.0).epsilon(2e-3));
  CHECK(units::ueV_to_GHz(g) == doctest::Approx(30.0).epsilon(2e-3));
}

TEST_CASE("zero inter-double-dot capacitance decouples") {
  const auto net = CapacitanceNetwork::uniform(45.0, 9.0, 0.0, 9.0);
  CHECK(capnet::coupling_exact(net) == 0.0);
  CHECK(std::abs(capnet::coupling_by_shift(net)) < 1e-9);
}

TEST_CASE("series form") {
  const double e_c = units::kE2PerAttofarad / 45.0;
  CHECK(capnet::coupling_series(CapacitanceNetwork::uniform(45.0, 0.0, 2.25, 0.0)) / e_c ==
        doctest::Approx(0.05));
  CHECK(capnet::coupling_series(CapacitanceNetwork::uniform(45.0, 9.0, 2.25, 9.0)) / e_c ==
        doctest::Approx(0.03));
}

TEST_CASE("series error stays below 1% of E_C over the measured c ranges") {
  const double c = 45.0, e_c = units::kE2PerAttofarad / c;
  double worst = 0.0;
  for (int i = 0; i < 20; ++i)
    for (int j = 0; j < 20; ++j)
      for (int k = 0; k < 20; ++k) {
        const auto net = CapacitanceNetwork::uniform(c, c * (0.1 + 0.1 * i / 19.0),
                                                     c * (0.03 + 0.05 * k / 19.0),
                                                     c * (0.1 + 0.1 * j / 19.0));
        worst = std::max(worst, std::abs(capnet::coupling_exact(net) - capnet::coupling_series(net)) / e_c);
      }
  CHECK(worst < 0.01);
}

TEST_CASE("coupling trends") {
  oracle::Lcg rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const auto net = random_net(rng);
    const double g = capnet::coupling_exact(net);
    const double h = 1e-4;
    for (int k = 0; k < 3; ++k) {
      auto up = net;
      up.c_inter[k] += h;
      if (k == 1)
        CHECK(capnet::coupling_exact(up) > g);
      else if (net.c_inter[1] > 0.0)
        CHECK(capnet::coupling_exact(up) < g);
    }
  }
}

TEST_CASE("ground state search") {
  auto net = CapacitanceNetwork::uniform(50.0, 6.0, 3.0, 6.0);
  net.c_gate = {6.0, 6.0, 6.0, 6.0};
  capnet::SourceVoltages v;
  v.v_gate = {-500, -500, -500, -500};
  CHECK(capnet::ground_state_config(net, v) == capnet::ChargeState{{0, 0, 0, 0}});

  // Mirror-symmetric voltages give a mirror-symmetric occupation.
  v.v_gate = {40, 25, 25, 40};
  const auto s = capnet::ground_state_config(net, v);
  CHECK(s.n[0] == s.n[3]);
  CHECK(s.n[1] == s.n[2]);

  // Matches brute force over the same search box.
  const capnet::OccupationSolver solver(net, 4);
  oracle::Lcg rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    for (auto& x : v.v_gate) x = rng.uniform(-20.0, 120.0);
    const auto q = capnet::induced_charge(net, v);
    double best = 1e300;
    capnet::ChargeState arg;
    for (int a = 0; a <= 4; ++a)
      for (int b = 0; b <= 4; ++b)
        for (int c = 0; c <= 4; ++c)
          for (int d = 0; d <= 4; ++d) {
            const double u = capnet::electrostatic_energy(net, {{a, b, c, d}}, v);
            if (u < best - 1e-9) {
              best = u;
              arg = {{a, b, c, d}};
            }
          }
    CHECK(solver.ground_state(q) == arg);
    CHECK(capnet::ground_state_config(net, v, 4) == arg);
  }
}

TEST_CASE("addition spacing along a plunger sweep equals E_C") {
  auto net = CapacitanceNetwork::uniform(50.0, 6.0, 3.0, 6.0);
  net.c_gate = {6.0, 6.0, 6.0, 6.0};
  const double alpha = capnet::gate_lever_arms(net)(0, 0);
  const auto en = capnet::energies_from_capacitances(net);
  capnet::SourceVoltages v;
  v.v_gate = {0, -300, -300, -300};
  std::vector<double> edges;
  int last = 0;
  for (int i = 0; i <= 40000; ++i) {
    v.v_gate[0] = i * 0.05;
    const int n = capnet::ground_state_config(net, v).n[0];
    if (n != last) {
      edges.push_back(v.v_gate[0]);
      last = n;
    }
  }
  REQUIRE(edges.size() >= 3);
  for (std::size_t k = 1; k < edges.size(); ++k)
    CHECK((edges[k] - edges[k - 1]) * alpha == doctest::Approx(en.e_c[0]).epsilon(4e-3));
}
