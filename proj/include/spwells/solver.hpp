#pragma once

// Penalized problem (A_λ), λ-continuation, the test for solving the original
// problem, the γ₀ path bound and A_μ membership.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "spwells/error.hpp"
#include "spwells/functionals.hpp"
#include "spwells/grid.hpp"
#include "spwells/nehari.hpp"

namespace spwells {

enum class Classification { auxiliary_only, original };

inline const char* to_string(Classification c) { return c == Classification::original ? "original" : "auxiliary-only"; }

struct SolverOptions {
  double tol = 1e-8;
  int max_iterations = 5000;
};

inline DescentOptions descent_options(const SolverOptions& s) {
  DescentOptions d;
  d.tol = s.tol;
  d.max_iterations = s.max_iterations;
  return d;
}

// Quantities measured on a field against the selection of a context.
struct FieldDiagnostics {
  double tail_mass = 0.0;     // ∫_{outside Ω'_Υ} u² / ∫ u²
  double penalty_mass = 0.0;  // λ ∫ a u²
  double outside_sup = 0.0;   // max u outside Ω'_Υ (≥ 0)
  double tail_norm_sq = 0.0;  // ‖u‖²_{λ, outside Ω'_Υ}
};

inline double outside_sup(const ScalarField& u, const Context& ctx) {
  require_same_grid(u.grid, ctx.grid);
  double m = 0.0;
  for (std::size_t p = 0; p < u.size(); ++p)
    if (!ctx.masks.selected_enlarged.inside[p]) m = std::max(m, u[p]);
  return m;
}

inline FieldDiagnostics field_diagnostics(const ScalarField& u, const Context& ctx) {
  require_same_grid(u.grid, ctx.grid);
  FieldDiagnostics d;
  double total = 0.0, tail = 0.0, pen = 0.0;
  for (std::size_t p = 0; p < u.size(); ++p) {
    const double v2 = u[p] * u[p];
    total += v2;
    if (!ctx.masks.selected_enlarged.inside[p]) tail += v2;
    pen += ctx.a[p] * v2;
  }
  d.tail_mass = total > 0.0 ? tail / total : 0.0;
  d.penalty_mass = ctx.lambda() * pen * ctx.grid.cell_volume();
  d.outside_sup = outside_sup(u, ctx);
  const RegionMask outside = complement(ctx.masks.selected_enlarged);
  d.tail_norm_sq = integrate(norm_lambda_density(u, ctx.a, ctx.lambda()), &outside);
  return d;
}

struct SolveResult {
  ScalarField u;
  EnergyBreakdown energy;
  double residual = 0.0;           // ‖−Δu + (λa+1)u + φ_u u − g(x,u)‖_{L²}
  double relative_residual = 0.0;  // residual / ‖u‖_{L²}
  double lambda = 1.0;
  Selection selection;
  Classification classification = Classification::auxiliary_only;
  int iterations = 0;
  std::vector<double> history;  // φ_λ after each accepted step
  FieldDiagnostics diagnostics;
};

struct ContinuationSchedule {
  std::vector<double> lambdas;
  bool warm_start = true;
};

inline ContinuationSchedule make_schedule(std::vector<double> lambdas, bool warm_start = true) {
  if (lambdas.empty()) throw ConfigError("λ schedule is empty");
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    if (!(lambdas[i] >= 1.0) || !std::isfinite(lambdas[i])) throw ConfigError("λ schedule values must be ≥ 1");
    if (i > 0 && !(lambdas[i] > lambdas[i - 1])) throw ConfigError("λ schedule must be strictly increasing");
  }
  return {std::move(lambdas), warm_start};
}

// Smooth bumps cos²(πr/2ρ) filling each selected closed well, with a small seeded
// multiplicative perturbation so different seeds give different starting points.
inline ScalarField initial_guess(const Context& ctx, std::uint64_t seed = 0, double perturbation = 0.05) {
  const Grid3& g = ctx.grid;
  ScalarField u(g);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (int j : ctx.selection.wells) {
    const Ball& b = ctx.geometry.wells[std::size_t(j)];
    for (int k = 0; k < g.n; ++k)
      for (int jj = 0; jj < g.n; ++jj)
        for (int i = 0; i < g.n; ++i) {
          const double dx = g.coord(i) - b.center[0], dy = g.coord(jj) - b.center[1], dz = g.coord(k) - b.center[2];
          const double r = std::sqrt(dx * dx + dy * dy + dz * dz);
          if (r >= b.radius) continue;
          const double c = std::cos(0.5 * std::numbers::pi * r / b.radius);
          u[g.index(i, jj, k)] = c * c;
        }
  }
  // Perturbation drawn in storage order for every point, so the stream does not depend on Υ.
  for (std::size_t p = 0; p < u.size(); ++p) {
    const double xi = unit(rng);
    u[p] *= 1.0 + perturbation * xi;
  }
  return u;
}

// Critical point of φ_λ by descent on the per-well Nehari set of φ_λ.
inline SolveResult solve_penalized(const Context& ctx, const ScalarField& init, const SolverOptions& opt = {}) {
  require_same_grid(init.grid, ctx.grid);
  for (std::size_t j = 0; j < ctx.selection.size(); ++j) {
    const RegionMask& m = ctx.masks.enlarged[std::size_t(ctx.selection.wells[j])];
    if (!(l2_norm(init, &m) > 0.0))
      throw ConfigError("solve_penalized: initial guess vanishes in selected well " +
                        std::to_string(ctx.selection.wells[j]));
  }
  DescentResult d;
  try {
    d = minimize_on_M(penalized_problem(ctx), init, descent_options(opt));
  } catch (const ComponentCollapse& e) {
    throw ConvergenceError(std::string("solve_penalized: iterate collapsed toward the trivial attractor (") +
                           e.what() + "); use a stronger initial bump");
  }
  SolveResult r;
  r.lambda = ctx.lambda();
  r.selection = ctx.selection;
  r.iterations = d.iterations;
  r.history = std::move(d.history);
  r.u = std::move(d.u);
  // Independent re-evaluation of energy and residual on the final field.
  const Functional::Evaluation ev = Functional(ctx, FunctionalKind::penalized).evaluate(r.u);
  r.energy = ev.energy;
  r.residual = l2_norm(ev.gradient);
  r.relative_residual = r.residual / l2_norm(r.u);
  r.diagnostics = field_diagnostics(r.u, ctx);
  return r;
}

// Sup bound outside Ω'_Υ: u ≤ a_cut there means g(x,u) = f(u), so (A_λ) is (P_λ).
inline bool verify_original(const ScalarField& u, const Context& ctx) {
  return outside_sup(u, ctx) <= ctx.params.a_cut;
}

// Also updates the classification; "original" additionally needs the PDE residual below tol.
inline bool verify_original(SolveResult& r, const Context& ctx, double tol = SolverOptions{}.tol) {
  const bool bound = verify_original(r.u, ctx);
  const bool solved = r.relative_residual <= tol;
  r.classification = bound && solved ? Classification::original : Classification::auxiliary_only;
  return bound;
}

struct ContinuationResult {
  std::vector<SolveResult> results;
  std::optional<std::size_t> failed_index;
  std::string failure;

  bool ok() const noexcept { return !failed_index; }
};

// Solves along an increasing λ schedule, warm-starting from the previous solution.
inline ContinuationResult continuation(const ContinuationSchedule& schedule, const Context& ctx,
                                       const ScalarField& init, const SolverOptions& opt = {}) {
  make_schedule(schedule.lambdas, schedule.warm_start);
  ContinuationResult out;
  ScalarField start = init;
  for (std::size_t i = 0; i < schedule.lambdas.size(); ++i) {
    const Context c = with_lambda(ctx, schedule.lambdas[i]);
    try {
      SolveResult r = solve_penalized(c, schedule.warm_start ? start : init, opt);
      verify_original(r, c, opt.tol);
      start = r.u;
      out.results.push_back(std::move(r));
    } catch (const std::exception& e) {
      out.failed_index = i;
      out.failure = e.what();
      break;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

struct PathScan {
  double b_hat = 0.0;         // max over the scanned t-grid (and the Nehari point)
  double boundary_max = 0.0;  // max over t with a coordinate on ∂[1/R², 1]
  std::vector<double> argmax;
  double nehari_value = 0.0;  // φ_λ(γ₀(1/R, …, 1/R))
};

// φ_λ(γ₀(t)) for γ₀(t) = Σ t_j R w_j on a tensor grid of [1/R², 1]^l.
inline PathScan gamma0_path_scan(const ScalarField& w, double R, const Context& ctx, int resolution) {
  if (resolution < 2) throw ConfigError("path scan resolution must be at least 2");
  if (!(R > 1.0)) throw ConfigError("path scan needs R > 1");
  std::vector<ScalarField> parts;
  for (int j : ctx.selection.wells) parts.push_back(restrict_to(w, ctx.masks.wells[std::size_t(j)]));
  const NehariCoefficients c = component_coeffs(parts, ctx, FunctionalKind::penalized);
  const std::size_t l = c.l;
  const double lo = 1.0 / (R * R);

  auto value = [&](const std::vector<double>& t) {
    std::vector<double> s(l);
    for (std::size_t i = 0; i < l; ++i) s[i] = t[i] * R;
    return fibering_energy(c, s);
  };

  PathScan out;
  out.b_hat = -INFINITY;
  out.boundary_max = -INFINITY;
  std::vector<int> idx(l, 0);
  std::vector<double> t(l);
  for (;;) {
    bool boundary = false;
    for (std::size_t i = 0; i < l; ++i) {
      t[i] = idx[i] == resolution - 1 ? 1.0 : lo + (1.0 - lo) * double(idx[i]) / double(resolution - 1);
      boundary = boundary || idx[i] == 0 || idx[i] == resolution - 1;
    }
    const double v = value(t);
    if (v > out.b_hat) {
      out.b_hat = v;
      out.argmax = t;
    }
    if (boundary) out.boundary_max = std::max(out.boundary_max, v);
    std::size_t d = 0;
    while (d < l && ++idx[d] == resolution) idx[d++] = 0;
    if (d == l) break;
  }
  const std::vector<double> nehari(l, 1.0 / R);
  out.nehari_value = value(nehari);
  if (out.nehari_value > out.b_hat) {
    out.b_hat = out.nehari_value;
    out.argmax = nehari;
  }
  return out;
}

struct Membership {
  bool member = false;
  bool norms_ok = false;
  bool energy_ok = false;
  double floor = 0.0;       // τ/8R − 2δ_θ
  double delta_theta = 0.0; // τ/48R
  double energy = 0.0;
  std::vector<double> norms;  // ‖u‖_{λ,Ω'_j}
};

// u ∈ A_μ^λ: every ‖u‖_{λ,Ω'_j} above τ/8R − 2δ_θ and |φ_λ(u) − c_Υ| ≤ μ.
inline Membership a_mu_membership(const ScalarField& u, const Context& ctx, double c_upsilon, double mu, double tau,
                                  double R) {
  Membership m;
  m.delta_theta = tau / (48.0 * R);
  m.floor = tau / (8.0 * R) - 2.0 * m.delta_theta;
  m.norms_ok = true;
  for (int j : ctx.selection.wells) {
    const double nj = norm_lambda(u, ctx.a, ctx.lambda(), &ctx.masks.enlarged[std::size_t(j)]);
    m.norms.push_back(nj);
    m.norms_ok = m.norms_ok && nj > m.floor;
  }
  m.energy = energy_phi_lambda(u, ctx).total;
  m.energy_ok = std::abs(m.energy - c_upsilon) <= mu;
  m.member = m.norms_ok && m.energy_ok;
  return m;
}

// r = R²(1/2 − 1/θ)^{-1} c_Υ.
inline double reference_radius(double R, double theta, double c_upsilon) {
  return R * R * c_upsilon / (0.5 - 1.0 / theta);
}

}  // namespace spwells
