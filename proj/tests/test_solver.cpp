#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>

#include "spwells/check.hpp"
#include "spwells/solver.hpp"

using namespace spwells;

namespace {

const Context& ctx_one() {
  static const Context c = check_context(24, {}, {0}, 100.0);
  return c;
}

double rel_diff(const ScalarField& a, const ScalarField& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t p = 0; p < a.size(); ++p) {
    num += (a[p] - b[p]) * (a[p] - b[p]);
    den += b[p] * b[p];
  }
  return std::sqrt(num / den);
}

}  // namespace

TEST(InitialGuess, SupportedInTheSelectedWells) {
  const Context& ctx = ctx_one();
  const ScalarField u = initial_guess(ctx, 4);
  for (std::size_t p = 0; p < u.size(); ++p)
    if (!ctx.masks.wells[0][p]) {
      EXPECT_EQ(u[p], 0.0);
    }
  EXPECT_GT(l2_norm(u, &ctx.masks.wells[0]), 0.0);
  const Context both = with_selection(ctx, make_selection({0, 1}, 2));
  const ScalarField v = initial_guess(both, 4);
  EXPECT_GT(l2_norm(v, &both.masks.wells[0]), 0.0);
  EXPECT_GT(l2_norm(v, &both.masks.wells[1]), 0.0);
  EXPECT_NO_THROW(project_to_M(v, penalized_problem(both)));
  EXPECT_GT(rel_diff(initial_guess(ctx, 5), u), 0.0);
}

TEST(SolvePenalized, ConcentratesInTheSelectedWell) {
  const Context& ctx = ctx_one();
  const SolveResult r = solve_penalized(ctx, initial_guess(ctx, 1));
  EXPECT_LT(r.relative_residual, 1e-6);
  EXPECT_LT(r.diagnostics.tail_mass, 0.05);
  double prev = INFINITY;
  for (double h : r.history) {
    EXPECT_LE(h, prev + 1e-12 * std::abs(prev));
    prev = h;
  }
  EXPECT_NEAR(r.energy.total, energy_phi_lambda(r.u, ctx).total, 1e-12 * r.energy.total);
  const LevelResult lim = minimize_limit(ctx, initial_guess(ctx, 1));
  EXPECT_LT(std::abs(r.energy.total - lim.c), 0.1 * lim.c);
}

TEST(SolvePenalized, IndependentOfTheSeed) {
  const Context& ctx = ctx_one();
  const SolveResult a = solve_penalized(ctx, initial_guess(ctx, 1));
  const SolveResult b = solve_penalized(ctx, initial_guess(ctx, 2));
  EXPECT_LT(rel_diff(a.u, b.u), 1e-4);
  EXPECT_NEAR(a.energy.total, b.energy.total, 1e-8 * a.energy.total);
}

TEST(SolvePenalized, RejectsGuessMissingASelectedWell) {
  const Context& ctx = ctx_one();
  EXPECT_THROW(solve_penalized(ctx, ScalarField(ctx.grid)), ConfigError);
}

TEST(VerifyOriginal, SupBoundOutsideTheEnlargedWells) {
  const Context& ctx = ctx_one();
  const double a = ctx.params.a_cut;
  EXPECT_TRUE(verify_original(ScalarField(ctx.grid, 0.5 * a), ctx));
  ScalarField u(ctx.grid, 0.5 * a);
  const std::size_t centre = ctx.grid.index(12, 12, 12);
  ASSERT_FALSE(ctx.masks.selected_enlarged[centre]);
  u[centre] = 2.0 * a;
  EXPECT_FALSE(verify_original(u, ctx));
  // Large values inside Ω'_Υ do not matter.
  ScalarField v(ctx.grid);
  for (std::size_t p = 0; p < v.size(); ++p) v[p] = ctx.masks.selected_enlarged[p] ? 10.0 : 0.0;
  EXPECT_TRUE(verify_original(v, ctx));
}

TEST(VerifyOriginal, ClassificationNeedsTheResidual) {
  const Context& ctx = ctx_one();
  SolveResult r;
  r.u = ScalarField(ctx.grid, 0.1);
  r.relative_residual = 1e-3;
  EXPECT_TRUE(verify_original(r, ctx, 1e-8));
  EXPECT_EQ(r.classification, Classification::auxiliary_only);
  r.relative_residual = 1e-9;
  verify_original(r, ctx, 1e-8);
  EXPECT_EQ(r.classification, Classification::original);
  EXPECT_STREQ(to_string(Classification::original), "original");
  EXPECT_STREQ(to_string(Classification::auxiliary_only), "auxiliary-only");
}

TEST(Continuation, TrendsAlongLambda) {
  const Context& ctx = ctx_one();
  const ContinuationResult cr = continuation(make_schedule({10, 100, 1000}), ctx, initial_guess(ctx, 1));
  ASSERT_TRUE(cr.ok()) << cr.failure;
  ASSERT_EQ(cr.results.size(), 3u);
  for (std::size_t i = 1; i < 3; ++i) {
    EXPECT_LT(cr.results[i].diagnostics.tail_mass, cr.results[i - 1].diagnostics.tail_mass);
    EXPECT_LT(cr.results[i].diagnostics.penalty_mass, cr.results[i - 1].diagnostics.penalty_mass);
    EXPECT_GT(cr.results[i].lambda, cr.results[i - 1].lambda);
  }
  const LevelResult lim = minimize_limit(ctx, initial_guess(ctx, 1));
  EXPECT_LT(std::abs(cr.results.back().energy.total - lim.c), 0.05 * lim.c);
}

TEST(Continuation, ReportsTheFailingStep) {
  const Context& ctx = ctx_one();
  const ContinuationResult cr = continuation(make_schedule({10, 100}), ctx, ScalarField(ctx.grid));
  EXPECT_FALSE(cr.ok());
  EXPECT_EQ(*cr.failed_index, 0u);
  EXPECT_TRUE(cr.results.empty());
  EXPECT_FALSE(cr.failure.empty());
}

TEST(Schedule, Validation) {
  EXPECT_THROW(make_schedule({}), ConfigError);
  EXPECT_THROW(make_schedule({10, 10}), ConfigError);
  EXPECT_THROW(make_schedule({100, 10}), ConfigError);
  EXPECT_THROW(make_schedule({0.5, 10}), ConfigError);
  EXPECT_EQ(make_schedule({1, 2, 3}).lambdas.size(), 3u);
}

TEST(PathScan, BoundedByTheLimitLevel) {
  const Context& ctx = ctx_one();
  const LevelResult lim = minimize_limit(ctx, initial_guess(ctx, 1));
  const TauR tr = estimate_tau_R(lim.w, ctx);
  const PathScan ps = gamma0_path_scan(lim.w, tr.R, ctx, 61);
  EXPECT_LE(ps.b_hat, lim.c + 1e-9);
  EXPECT_LT(ps.boundary_max, lim.c);
  ASSERT_EQ(ps.argmax.size(), 1u);
  EXPECT_NEAR(ps.argmax[0], 1.0 / tr.R, 0.5 / tr.R);
  EXPECT_NEAR(ps.nehari_value, lim.c, 1e-6 * lim.c);
  EXPECT_THROW(gamma0_path_scan(lim.w, tr.R, ctx, 1), ConfigError);
  EXPECT_THROW(gamma0_path_scan(lim.w, 1.0, ctx, 10), ConfigError);
}

TEST(Membership, LimitMinimizerBelongsScaledFieldsDoNot) {
  const Context& ctx = ctx_one();
  const LevelResult lim = minimize_limit(ctx, initial_guess(ctx, 1));
  const TauR tr = estimate_tau_R(lim.w, ctx);
  const double mu = 0.1 * lim.c;
  EXPECT_TRUE(a_mu_membership(lim.w, ctx, lim.c, mu, tr.tau, tr.R).member);
  const Membership zero = a_mu_membership(ScalarField(ctx.grid), ctx, lim.c, mu, tr.tau, tr.R);
  EXPECT_FALSE(zero.member);
  EXPECT_FALSE(zero.norms_ok);
  ScalarField big(ctx.grid);
  for (std::size_t p = 0; p < big.size(); ++p) big[p] = 10.0 * lim.w[p];
  const Membership m = a_mu_membership(big, ctx, lim.c, mu, tr.tau, tr.R);
  EXPECT_FALSE(m.member);
  EXPECT_TRUE(m.norms_ok);
  EXPECT_FALSE(m.energy_ok);
  EXPECT_NEAR(m.delta_theta, tr.tau / (48.0 * tr.R), 1e-15);
  EXPECT_NEAR(m.floor, tr.tau / (8.0 * tr.R) - 2.0 * m.delta_theta, 1e-15);
}

TEST(Diagnostics, ReferenceRadius) {
  EXPECT_DOUBLE_EQ(reference_radius(2.0, 5.0, 3.0), 4.0 * 3.0 / 0.3);
}

// Growing the box by whole cells at fixed h keeps the lattice and the wells in place, so the
// change in the penalized level measures the box truncation alone.
TEST(Truncation, PenalizedLevelInsensitiveToBoxSize) {
  const WellGeometry geo = build_geometry({Ball{{-2.0, 0.0, 0.0}, 1.2}, Ball{{2.0, 0.0, 0.0}, 1.2}}, 0.5, 1.0, 0.5);
  const double h = 8.0 / 23.0;
  double level[2];
  int idx = 0;
  for (int n : {24, 30}) {
    const Grid3 g = build_grid(n, 0.5 * h * (n - 1));
    const Context ctx = make_context(g, geo, make_selection({0}, 2), make_params(4.0, 0.5, 10.0));
    level[idx++] = solve_penalized(ctx, initial_guess(ctx, 1)).energy.total;
  }
  std::printf("penalized level, L = %.4f: %.15g, L = %.4f: %.15g\n", 11.5 * h, level[0], 14.5 * h, level[1]);
  EXPECT_LT(std::abs(level[0] - level[1]) / level[0], 1e-5);
}
