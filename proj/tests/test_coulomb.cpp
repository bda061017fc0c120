#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <numbers>
#include <random>

#include "spwells/check.hpp"
#include "spwells/coulomb.hpp"

using namespace spwells;

namespace {

double rel_l2(const ScalarField& a, const ScalarField& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t p = 0; p < a.size(); ++p) {
    num += (a[p] - b[p]) * (a[p] - b[p]);
    den += b[p] * b[p];
  }
  return std::sqrt(num / den);
}

}  // namespace

TEST(Coulomb, ZeroInputGivesZero) {
  const Grid3 g = build_grid(12, 2.0);
  const CoulombSolver s(g);
  for (double v : s.poisson_fft(ScalarField(g)).values) EXPECT_EQ(v, 0.0);
}

TEST(Coulomb, FftMatchesDirectSummation) {
  const Grid3 g = build_grid(16, 4.0);
  std::mt19937_64 rng(1);
  const CoulombSolver s(g);
  for (int trial = 0; trial < 3; ++trial) {
    const ScalarField u = oracle::random_field(g, rng);
    EXPECT_LT(rel_l2(s.poisson_fft(u), poisson_direct(u)), 1e-6);
  }
  CoulombOptions ca;
  ca.self_term = SelfTerm::cell_average;
  const CoulombSolver s2(g, ca);
  const ScalarField u = oracle::random_field(g, rng);
  EXPECT_LT(rel_l2(s2.poisson_fft(u), poisson_direct(u, ca)), 1e-6);
}

TEST(Coulomb, PointChargeIsExactOffTheSource) {
  const Grid3 g = build_grid(17, 2.0);
  const int c = 8;
  ScalarField u(g);
  u[g.index(c, c, c)] = 3.0;
  const double mass = 9.0 * g.cell_volume();
  const ScalarField phi = CoulombSolver(g).poisson_fft(u);
  for (int k = 0; k < g.n; k += 3)
    for (int j = 0; j < g.n; j += 2)
      for (int i = 0; i < g.n; ++i) {
        if (i == c && j == c && k == c) continue;
        const double d = g.h * std::sqrt(double((i - c) * (i - c) + (j - c) * (j - c) + (k - c) * (k - c)));
        const double expect = mass / (4.0 * std::numbers::pi * d);
        EXPECT_NEAR(phi[g.index(i, j, k)], expect, 1e-12 * expect);
      }
}

// Uniform unit-density ball of radius ρ₀: φ(0) = ρ₀²/2. The staircase boundary limits accuracy to O(h)
// and makes the error oscillate with n.
TEST(Coulomb, UniformBallCentreValue) {
  const double rho0 = 1.2;
  for (int n : {21, 41}) {
    const Grid3 g = build_grid(n, 2.0);
    const ScalarField u = sample(g, [&](double x, double y, double z) { return x * x + y * y + z * z <= rho0 * rho0 ? 1.0 : 0.0; });
    const ScalarField phi = CoulombSolver(g).poisson_fft(u);
    const double centre = phi[g.index(n / 2, n / 2, n / 2)];
    const double err = std::abs(centre - 0.5 * rho0 * rho0) / (0.5 * rho0 * rho0);
    EXPECT_LT(err, 0.03) << "n=" << n;
  }
  const Grid3 g = build_grid(21, 2.0);
  const ScalarField u = sample(g, [&](double x, double y, double z) { return x * x + y * y + z * z <= rho0 * rho0 ? 1.0 : 0.0; });
  EXPECT_LT(rel_l2(CoulombSolver(g).poisson_fft(u), poisson_direct(u)), 1e-10);
}

TEST(Coulomb, PositivityAndScaling) {
  const Grid3 g = build_grid(14, 3.0);
  const CoulombSolver s(g);
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    const ScalarField u = oracle::random_field(g, rng);
    const ScalarField phi = s.poisson_fft(u);
    for (double v : phi.values) EXPECT_GT(v, 0.0);
    ScalarField tu(g);
    const double t = 0.5 + trial;
    for (std::size_t p = 0; p < u.size(); ++p) tu[p] = t * u[p];
    const ScalarField phit = s.poisson_fft(tu);
    for (std::size_t p = 0; p < u.size(); ++p) EXPECT_NEAR(phit[p], t * t * phi[p], 1e-13 * t * t * phi[p]);
    const double e = nonlocal_energy(s, u);
    ScalarField u2(g);
    for (std::size_t p = 0; p < u.size(); ++p) u2[p] = 2.0 * u[p];
    EXPECT_NEAR(nonlocal_energy(s, u2), 16.0 * e, 1e-12 * 16.0 * e);
  }
  EXPECT_EQ(nonlocal_energy(s, ScalarField(g)), 0.0);
}

TEST(Coulomb, FieldEnergyIdentity) {
  const Grid3 g = build_grid(24, 6.0);
  const CoulombSolver s(g);
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 3; ++trial) {
    const ScalarField u = oracle::smooth_random_field(g, rng);
    const double lhs = potential_field_energy(u), rhs = nonlocal_energy(s, u);
    EXPECT_LT(std::abs(lhs - rhs) / rhs, 1e-4);
  }
}

TEST(Coulomb, LipschitzInTheField) {
  const Grid3 g = build_grid(12, 2.0);
  const CoulombSolver s(g);
  std::mt19937_64 rng(4);
  const ScalarField u = oracle::random_field(g, rng), v = oracle::random_field(g, rng);
  const ScalarField phi = s.poisson_fft(u);
  auto diff = [&](double eps) {
    ScalarField w(g);
    for (std::size_t p = 0; p < w.size(); ++p) w[p] = u[p] + eps * v[p];
    ScalarField d = s.poisson_fft(w);
    for (std::size_t p = 0; p < d.size(); ++p) d[p] -= phi[p];
    return l2_norm(d);
  };
  const double d1 = diff(1e-3), d2 = diff(5e-4);
  EXPECT_GT(d1, 0.0);
  EXPECT_NEAR(d1 / d2, 2.0, 1e-2);
}

// ∫φ_u u² ≤ C‖u‖⁴ with C measured on calibration fields and stable on fresh ones.
TEST(Coulomb, QuarticBoundStable) {
  const Grid3 g = build_grid(12, 2.0);
  const CoulombSolver s(g);
  const ScalarField zero(g);
  std::mt19937_64 rng(5);
  auto ratio = [&] {
    const ScalarField u = oracle::random_field(g, rng);
    return nonlocal_energy(s, u) / std::pow(norm_lambda(u, zero, 0.0), 4);
  };
  double C = 0.0;
  for (int i = 0; i < 10; ++i) C = std::max(C, ratio());
  for (int i = 0; i < 20; ++i) EXPECT_LE(ratio(), 1.5 * C);
}

TEST(Coulomb, SelfTermConstants) {
  EXPECT_NEAR(cell_average_self_term(), 2.38007736, 1e-8);
  EXPECT_NEAR(kLatticeSelfTerm, 2.8372974794806, 1e-13);
  const Grid3 g = build_grid(9, 1.0);
  ScalarField u(g);
  u[g.index(4, 4, 4)] = 1.0;
  const double w = g.cell_volume() / (4.0 * std::numbers::pi * g.h);
  EXPECT_NEAR(CoulombSolver(g).poisson_fft(u)[g.index(4, 4, 4)], kLatticeSelfTerm * w, 1e-13);
  CoulombOptions ca;
  ca.self_term = SelfTerm::cell_average;
  EXPECT_NEAR(CoulombSolver(g, ca).poisson_fft(u)[g.index(4, 4, 4)], cell_average_self_term() * w, 1e-13);
}

TEST(Coulomb, InputValidation) {
  const Grid3 g = build_grid(10, 1.0);
  const CoulombSolver s(g);
  EXPECT_THROW(s.poisson_fft(ScalarField(build_grid(11, 1.0))), GridMismatch);
  ScalarField bad(g);
  bad[3] = NAN;
  EXPECT_THROW(s.poisson_fft(bad), ConfigError);
  EXPECT_THROW(poisson_direct(bad), ConfigError);
  EXPECT_THROW(poisson_direct(ScalarField(build_grid(33, 1.0))), ConfigError);
}

TEST(Coulomb, SixteenCubedIsFast) {
  const Grid3 g = build_grid(16, 4.0);
  std::mt19937_64 rng(6);
  const ScalarField u = oracle::random_field(g, rng);
  const auto t0 = std::chrono::steady_clock::now();
  const CoulombSolver s(g);
  s.poisson_fft(u);
  poisson_direct(u);
  EXPECT_LT(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(), 5.0);
}
