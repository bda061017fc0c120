#pragma once

// Multi-component Nehari machinery.
//
// A field is split into l scaled components u_j (disjoint masks P_j) and an
// unscaled remainder r. Along the fibre t ↦ Σ t_j u_j + r the energy of a
// functional of the shape in functionals.hpp is a polynomial plus powers:
//
//   h(t) = ½[Σ A_ij t_i t_j + 2 Σ E_j t_j + Q_r]
//        + ¼[Σ B_ij t_i² t_j² + 2 Σ D_j t_j² + B_r]
//        - Σ C_j t_j^{q+1}/(q+1) - G_r
//
// with A_ij = <u_i, K u_j>, E_j = <u_j, K r>, B_ij = ∫φ_{u_j} u_i²,
// D_j = ∫φ_r u_j², C_j = ∫(u_j⁺)^{q+1}. Components must lie where the
// nonlinearity is the pure power f. Projection onto the Nehari set solves
// ∂h/∂t = 0, and since the projected energy is max_t h, its gradient is E'(u)
// itself; the descent engine below minimizes that reduced energy.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "spwells/error.hpp"
#include "spwells/functionals.hpp"
#include "spwells/grid.hpp"

namespace spwells {

struct NehariCoefficients {
  std::size_t l = 0;
  std::vector<double> A;  // A_ii = ‖u_i‖²
  std::vector<double> B;  // l×l row-major, B_ij = ∫ φ_{u_j} u_i²
  std::vector<double> C;  // ∫ (u_i⁺)^{q+1}
  double q = 4.0;

  // Extensions, zero for the plain system.
  std::vector<double> A_cross;  // l×l off-diagonal <u_i, K u_j>, zero diagonal
  std::vector<double> E;        // <u_j, K r>
  std::vector<double> D;        // ∫ φ_r u_j²
  double quad_rest = 0.0;       // <r, K r>
  double quartic_rest = 0.0;    // ∫ φ_r r²
  double primitive_rest = 0.0;  // ∫ G(x, r)

  double b(std::size_t i, std::size_t j) const { return B[i * l + j]; }
  double a(std::size_t i, std::size_t j) const { return i == j ? A[i] : A_cross[i * l + j]; }

  static NehariCoefficients zeros(std::size_t l, double q) {
    NehariCoefficients c;
    c.l = l;
    c.q = q;
    c.A.assign(l, 0.0);
    c.C.assign(l, 0.0);
    c.E.assign(l, 0.0);
    c.D.assign(l, 0.0);
    c.B.assign(l * l, 0.0);
    c.A_cross.assign(l * l, 0.0);
    return c;
  }
};

// h(t).
inline double fibering_energy(const NehariCoefficients& c, const std::vector<double>& t) {
  double quad = c.quad_rest, quart = c.quartic_rest, pot = c.primitive_rest;
  for (std::size_t i = 0; i < c.l; ++i) {
    quad += 2.0 * c.E[i] * t[i];
    quart += 2.0 * c.D[i] * t[i] * t[i];
    pot += c.C[i] * std::pow(t[i], c.q + 1.0) / (c.q + 1.0);
    for (std::size_t j = 0; j < c.l; ++j) {
      quad += c.a(i, j) * t[i] * t[j];
      quart += c.b(i, j) * t[i] * t[i] * t[j] * t[j];
    }
  }
  return 0.5 * quad + 0.25 * quart - pot;
}

// ∂h/∂t_i.
inline std::vector<double> fibering_gradient(const NehariCoefficients& c, const std::vector<double>& t) {
  std::vector<double> g(c.l);
  for (std::size_t i = 0; i < c.l; ++i) {
    double lin = c.E[i], cub = c.D[i];
    for (std::size_t j = 0; j < c.l; ++j) {
      lin += c.a(i, j) * t[j];
      cub += c.b(i, j) * t[j] * t[j];
    }
    g[i] = lin + t[i] * cub - c.C[i] * std::pow(t[i], c.q);
  }
  return g;
}

namespace detail {

// F_i(t) = ∂h/∂t_i / t_i, and the scale of its terms for relative residuals.
inline void reduced_system(const NehariCoefficients& c, const std::vector<double>& t, std::vector<double>& F,
                           std::vector<double>& scale) {
  F.assign(c.l, 0.0);
  scale.assign(c.l, 0.0);
  for (std::size_t i = 0; i < c.l; ++i) {
    double lin = c.E[i], cub = c.D[i], mag = std::abs(c.E[i]) / t[i] + std::abs(c.D[i]);
    for (std::size_t j = 0; j < c.l; ++j) {
      lin += c.a(i, j) * t[j];
      cub += c.b(i, j) * t[j] * t[j];
      mag += std::abs(c.a(i, j) * t[j]) / t[i] + std::abs(c.b(i, j)) * t[j] * t[j];
    }
    const double sup = c.C[i] * std::pow(t[i], c.q - 1.0);
    F[i] = lin / t[i] + cub - sup;
    scale[i] = mag + sup;
  }
}

inline double max_relative(const std::vector<double>& F, const std::vector<double>& scale) {
  double m = 0.0;
  for (std::size_t i = 0; i < F.size(); ++i) m = std::max(m, std::abs(F[i]) / std::max(scale[i], 1e-300));
  return m;
}

inline std::vector<double> reduced_jacobian(const NehariCoefficients& c, const std::vector<double>& t) {
  const std::size_t l = c.l;
  std::vector<double> J(l * l, 0.0);
  for (std::size_t i = 0; i < l; ++i) {
    double off = c.E[i];
    for (std::size_t j = 0; j < l; ++j)
      if (j != i) off += c.a(i, j) * t[j];
    for (std::size_t k = 0; k < l; ++k) {
      double v = 2.0 * c.b(i, k) * t[k];
      if (k == i)
        v += -off / (t[i] * t[i]) - (c.q - 1.0) * c.C[i] * std::pow(t[i], c.q - 2.0);
      else
        v += c.a(i, k) / t[i];
      J[i * l + k] = v;
    }
  }
  return J;
}

// Dense solve with partial pivoting; returns false on a singular matrix.
inline bool dense_solve(std::vector<double> M, std::vector<double> rhs, std::size_t l, std::vector<double>& x) {
  for (std::size_t col = 0; col < l; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < l; ++r)
      if (std::abs(M[r * l + col]) > std::abs(M[piv * l + col])) piv = r;
    if (!(std::abs(M[piv * l + col]) > 0.0)) return false;
    if (piv != col) {
      for (std::size_t k = 0; k < l; ++k) std::swap(M[col * l + k], M[piv * l + k]);
      std::swap(rhs[col], rhs[piv]);
    }
    for (std::size_t r = col + 1; r < l; ++r) {
      const double f = M[r * l + col] / M[col * l + col];
      for (std::size_t k = col; k < l; ++k) M[r * l + k] -= f * M[col * l + k];
      rhs[r] -= f * rhs[col];
    }
  }
  x.assign(l, 0.0);
  for (std::size_t r = l; r-- > 0;) {
    double s = rhs[r];
    for (std::size_t k = r + 1; k < l; ++k) s -= M[r * l + k] * x[k];
    x[r] = s / M[r * l + r];
  }
  return true;
}

// Damped Newton on F(t) = 0 with multiplicative positivity safeguard.
inline bool newton_t(const NehariCoefficients& c, std::vector<double>& t, double target, int max_iter = 100) {
  std::vector<double> F, scale, step;
  reduced_system(c, t, F, scale);
  double res = max_relative(F, scale);
  for (int it = 0; it < max_iter && res > target; ++it) {
    std::vector<double> rhs(c.l);
    for (std::size_t i = 0; i < c.l; ++i) rhs[i] = -F[i];
    if (!dense_solve(reduced_jacobian(c, t), rhs, c.l, step)) return false;
    double damp = 1.0;
    for (std::size_t i = 0; i < c.l; ++i)
      if (t[i] + step[i] < 0.25 * t[i]) damp = std::min(damp, -0.75 * t[i] / step[i]);
    bool improved = false;
    for (int ls = 0; ls < 40; ++ls, damp *= 0.5) {
      std::vector<double> trial(c.l);
      for (std::size_t i = 0; i < c.l; ++i) trial[i] = t[i] + damp * step[i];
      std::vector<double> Ft, st;
      reduced_system(c, trial, Ft, st);
      const double r = max_relative(Ft, st);
      if (std::isfinite(r) && r < res) {
        t = trial;
        F = Ft;
        res = r;
        improved = true;
        break;
      }
    }
    if (!improved) break;
  }
  return res <= target;
}

// Nonlinear Gauss-Seidel: each t_i by bisection on [lo, hi] with the others fixed.
inline bool gauss_seidel_t(const NehariCoefficients& c, std::vector<double>& t, double lo, double hi) {
  auto Fi = [&](std::size_t i, double ti) {
    std::vector<double> tt = t;
    tt[i] = ti;
    std::vector<double> F, s;
    reduced_system(c, tt, F, s);
    return F[i];
  };
  for (int sweep = 0; sweep < 200; ++sweep) {
    double moved = 0.0;
    for (std::size_t i = 0; i < c.l; ++i) {
      double a = lo, b = hi, fa = Fi(i, a), fb = Fi(i, b);
      if (!(fa > 0.0 && fb < 0.0)) return false;
      for (int k = 0; k < 200 && b - a > 1e-15 * b; ++k) {
        const double m = 0.5 * (a + b);
        (Fi(i, m) > 0.0 ? a : b) = m;
      }
      const double ti = 0.5 * (a + b);
      moved = std::max(moved, std::abs(ti - t[i]) / ti);
      t[i] = ti;
    }
    if (moved < 1e-13) return true;
  }
  return true;
}

}  // namespace detail

inline constexpr double kTSystemTolerance = 1e-12;
inline constexpr double kTScanLow = 1.0 / 256.0;
inline constexpr double kTScanHigh = 256.0;

inline double t_system_residual(const NehariCoefficients& c, const std::vector<double>& t) {
  std::vector<double> F, scale;
  detail::reduced_system(c, t, F, scale);
  return detail::max_relative(F, scale);
}

// Positive root of ∂h/∂t = 0 (for the plain system: A_i + Σ_j t_j² B_ij = t_i^{q-1} C_i).
// Newton from `start` (default (A_i/C_i)^{1/(q-1)}), then a bisection fallback on
// [2^-8, 2^8]^l followed by Newton polishing.
inline std::vector<double> solve_t_system(const NehariCoefficients& c, std::vector<double> start = {}) {
  if (c.l == 0) return {};
  for (std::size_t i = 0; i < c.l; ++i)
    if (!(c.A[i] > 0.0) || !(c.C[i] > 0.0))
      throw ConfigError("t-system needs A_i > 0 and C_i > 0 (component " + std::to_string(i) + ")");
  std::vector<double> t = start;
  if (t.size() != c.l) {
    t.resize(c.l);
    for (std::size_t i = 0; i < c.l; ++i) t[i] = std::pow(c.A[i] / c.C[i], 1.0 / (c.q - 1.0));
  }
  if (detail::newton_t(c, t, 1e-15)) return t;
  if (t_system_residual(c, t) <= kTSystemTolerance) return t;

  std::vector<double> fb(c.l, 1.0);
  if (!detail::gauss_seidel_t(c, fb, kTScanLow, kTScanHigh))
    throw ConvergenceError("t-system: no sign change found in the box [2^-8, 2^8]^" + std::to_string(c.l));
  detail::newton_t(c, fb, 1e-15);
  if (t_system_residual(c, fb) > kTSystemTolerance)
    throw ConvergenceError("t-system: residual " + std::to_string(t_system_residual(c, fb)) +
                           " above tolerance after bisection fallback on [2^-8, 2^8]");
  return fb;
}

// ---------------------------------------------------------------------------
// Coefficients from fields.

struct FieldParts {
  std::vector<ScalarField> u, Ku, phi;
  ScalarField rest, K_rest, phi_rest;
  bool has_rest = false;
};

namespace detail {

inline double dot(const ScalarField& a, const ScalarField& b) {
  double s = 0.0;
  for (std::size_t p = 0; p < a.size(); ++p) s += a[p] * b[p];
  return s * a.grid.cell_volume();
}

inline double weighted_square(const ScalarField& phi, const ScalarField& u) {
  double s = 0.0;
  for (std::size_t p = 0; p < u.size(); ++p) s += phi[p] * u[p] * u[p];
  return s * u.grid.cell_volume();
}

inline double power_moment(const ScalarField& u, double q) {
  double s = 0.0;
  for (double v : u.values)
    if (v > 0.0) s += std::pow(v, q + 1.0);
  return s * u.grid.cell_volume();
}

}  // namespace detail

inline NehariCoefficients coefficients_of(const FieldParts& parts, const Functional& fn) {
  const std::size_t l = parts.u.size();
  NehariCoefficients c = NehariCoefficients::zeros(l, fn.params().q);
  for (std::size_t i = 0; i < l; ++i) {
    c.C[i] = detail::power_moment(parts.u[i], c.q);
    for (std::size_t j = 0; j < l; ++j) {
      const double aij = detail::dot(parts.u[i], parts.Ku[j]);
      if (i == j)
        c.A[i] = aij;
      else
        c.A_cross[i * l + j] = aij;
      c.B[i * l + j] = detail::weighted_square(parts.phi[j], parts.u[i]);
    }
    if (parts.has_rest) {
      c.E[i] = detail::dot(parts.u[i], parts.K_rest);
      c.D[i] = detail::weighted_square(parts.phi_rest, parts.u[i]);
    }
  }
  if (parts.has_rest) {
    c.quad_rest = detail::dot(parts.rest, parts.K_rest);
    c.quartic_rest = detail::weighted_square(parts.phi_rest, parts.rest);
    c.primitive_rest = fn.primitive_sum(parts.rest);
  }
  // Exact symmetry of the cross terms (they are equal up to quadrature rounding).
  for (std::size_t i = 0; i < l; ++i)
    for (std::size_t j = i + 1; j < l; ++j) {
      const double a = 0.5 * (c.A_cross[i * l + j] + c.A_cross[j * l + i]);
      c.A_cross[i * l + j] = c.A_cross[j * l + i] = a;
    }
  return c;
}

// A, B, C of pairwise disjoint parts under a functional (default: the limit functional J).
inline NehariCoefficients component_coeffs(const std::vector<ScalarField>& parts, const Functional& fn) {
  for (std::size_t i = 0; i < parts.size(); ++i)
    for (std::size_t j = i + 1; j < parts.size(); ++j) {
      require_same_grid(parts[i].grid, parts[j].grid);
      for (std::size_t p = 0; p < parts[i].size(); ++p)
        if (parts[i][p] != 0.0 && parts[j][p] != 0.0)
          throw ConfigError("component_coeffs: parts " + std::to_string(i) + " and " + std::to_string(j) +
                            " have overlapping supports");
    }
  FieldParts fp;
  for (const ScalarField& u : parts) {
    const ScalarField r = fn.restrict(u);
    fp.Ku.push_back(fn.stiffness(r));
    fp.phi.push_back(fn.coulomb().poisson_fft(r));
    fp.u.push_back(r);
  }
  return coefficients_of(fp, fn);
}

inline NehariCoefficients component_coeffs(const std::vector<ScalarField>& parts, const Context& ctx,
                                           FunctionalKind kind = FunctionalKind::limit) {
  return component_coeffs(parts, Functional(ctx, kind));
}

// ---------------------------------------------------------------------------
// Problems: a functional plus the component partition of its support.

struct NehariProblem {
  Functional functional;
  std::vector<RegionMask> components;
  RegionMask remainder;  // unscaled part of the support; may be empty
  bool has_remainder = false;
};

// J on Ω_Υ with components Ω_j.
inline NehariProblem limit_problem(const Context& ctx) {
  NehariProblem p{Functional(ctx, FunctionalKind::limit), {}, RegionMask(ctx.grid), false};
  for (int j : ctx.selection.wells) p.components.push_back(ctx.masks.wells[std::size_t(j)]);
  return p;
}

// φ_{λ,Υ} on Ω'_Υ with components Ω'_j.
inline NehariProblem neumann_problem(const Context& ctx) {
  NehariProblem p{Functional(ctx, FunctionalKind::neumann), {}, RegionMask(ctx.grid), false};
  for (int j : ctx.selection.wells) p.components.push_back(ctx.masks.enlarged[std::size_t(j)]);
  return p;
}

// φ_λ on the box: components Ω'_j (j ∈ Υ) are rescaled, the rest of the box is not.
inline NehariProblem penalized_problem(const Context& ctx) {
  NehariProblem p{Functional(ctx, FunctionalKind::penalized), {}, complement(ctx.masks.selected_enlarged), true};
  for (int j : ctx.selection.wells) p.components.push_back(ctx.masks.enlarged[std::size_t(j)]);
  return p;
}

inline FieldParts split_field(const ScalarField& u, const NehariProblem& pb) {
  const Functional& fn = pb.functional;
  FieldParts fp;
  for (const RegionMask& m : pb.components) {
    ScalarField part = restrict_to(u, m);
    fp.Ku.push_back(fn.stiffness(part));
    fp.phi.push_back(fn.coulomb().poisson_fft(part));
    fp.u.push_back(std::move(part));
  }
  if (pb.has_remainder) {
    fp.has_rest = true;
    fp.rest = restrict_to(u, pb.remainder);
    fp.K_rest = fn.stiffness(fp.rest);
    fp.phi_rest = fn.coulomb().poisson_fft(fp.rest);
  }
  return fp;
}

inline constexpr double kComponentFloor = 1e-6;

struct ProjectionResult {
  std::vector<double> t;
  ScalarField field;
  std::vector<double> residuals;  // <E'(field), field_j>
  int iterations = 0;
  EnergyBreakdown energy;
  ScalarField gradient;
  ScalarField stiffness;  // K field
  ScalarField potential;  // φ_field
};

inline ProjectionResult project_parts(const FieldParts& fp, const NehariProblem& pb) {
  const Functional& fn = pb.functional;
  const NehariCoefficients c = coefficients_of(fp, fn);

  double total = c.quad_rest;
  for (std::size_t i = 0; i < c.l; ++i) {
    total += 2.0 * c.E[i];
    for (std::size_t j = 0; j < c.l; ++j) total += c.a(i, j);
  }
  const double norm = std::sqrt(std::max(total, 0.0));
  for (std::size_t j = 0; j < c.l; ++j)
    if (!(std::sqrt(std::max(c.A[j], 0.0)) >= kComponentFloor * norm) || !(c.C[j] > 0.0))
      throw ComponentCollapse(j, "component norm below the floor 1e-6·‖u‖ (the u_j != 0 requirement)");

  // Warm start at t = 1 unless the closed-form start is better.
  std::vector<double> ones(c.l, 1.0), guess(c.l);
  for (std::size_t i = 0; i < c.l; ++i) guess[i] = std::pow(c.A[i] / c.C[i], 1.0 / (c.q - 1.0));
  const std::vector<double> start = t_system_residual(c, ones) <= t_system_residual(c, guess) ? ones : guess;

  ProjectionResult pr;
  pr.t = solve_t_system(c, start);
  pr.iterations = 1;
  const Grid3& g = fn.grid();
  pr.field = ScalarField(g);
  pr.stiffness = ScalarField(g);
  pr.potential = ScalarField(g);
  for (std::size_t j = 0; j < c.l; ++j) {
    const double t = pr.t[j], t2 = t * t;
    for (std::size_t p = 0; p < g.size(); ++p) {
      pr.field[p] += t * fp.u[j][p];
      pr.stiffness[p] += t * fp.Ku[j][p];
      pr.potential[p] += t2 * fp.phi[j][p];
    }
  }
  if (fp.has_rest)
    for (std::size_t p = 0; p < g.size(); ++p) {
      pr.field[p] += fp.rest[p];
      pr.stiffness[p] += fp.K_rest[p];
      pr.potential[p] += fp.phi_rest[p];
    }
  Functional::Evaluation ev = fn.assemble(pr.field, pr.stiffness, pr.potential);
  pr.energy = ev.energy;
  pr.gradient = std::move(ev.gradient);
  for (const RegionMask& m : pb.components) {
    double s = 0.0;
    for (std::size_t p = 0; p < g.size(); ++p)
      if (m.inside[p]) s += pr.gradient[p] * pr.field[p];
    pr.residuals.push_back(s * g.cell_volume());
  }
  return pr;
}

// Field Σ t_j u_j (+ r) on the Nehari set of the problem.
inline ProjectionResult project_to_M(const ScalarField& u, const NehariProblem& pb) {
  require_same_grid(u.grid, pb.functional.grid());
  if (!all_finite(u)) throw ConfigError("project_to_M: non-finite input");
  return project_parts(split_field(pb.functional.restrict(u), pb), pb);
}

inline ProjectionResult project_to_M(const ScalarField& u, const std::vector<RegionMask>& partition,
                                     const Functional& fn) {
  if (!pairwise_disjoint(partition)) throw ConfigError("project_to_M: partition masks overlap");
  return project_to_M(u, NehariProblem{fn, partition, RegionMask(fn.grid()), false});
}

// ---------------------------------------------------------------------------
// Descent on the Nehari set.

struct DescentOptions {
  double tol = 1e-8;  // on ‖grad‖_{L²} / ‖u‖_{L²}
  int max_iterations = 5000;
  double armijo = 1e-4;
  double step_min = 1e-4;
  double step_max = 1e2;
  double initial_step = 0.5;
};

struct DescentResult {
  ScalarField u;
  EnergyBreakdown energy;
  double residual = 0.0;           // ‖grad‖_{L²}, sign-constrained at zero entries
  double relative_residual = 0.0;  // residual / ‖u‖_{L²}
  int iterations = 0;
  std::vector<double> t;              // last projection scalings
  std::vector<double> history;        // energy after each accepted step
  std::vector<double> residual_trace;
};

namespace detail {

// L² norm of the gradient, ignoring entries where u = 0 and the gradient points into u < 0.
inline double projected_residual(const ScalarField& grad, const ScalarField& u) {
  double s = 0.0;
  for (std::size_t p = 0; p < u.size(); ++p) {
    const double gp = (u[p] <= 0.0 && grad[p] > 0.0) ? 0.0 : grad[p];
    s += gp * gp;
  }
  return std::sqrt(s * u.grid.cell_volume());
}

inline constexpr double kFlushBelow = 1e-100;

}  // namespace detail

inline DescentResult minimize_on_M(const NehariProblem& pb, const ScalarField& init, const DescentOptions& opt = {}) {
  const Functional& fn = pb.functional;
  const Grid3& g = fn.grid();
  const ScalarField diag = fn.stiffness_diagonal();

  auto clip = [&](ScalarField v) {
    for (std::size_t p = 0; p < v.size(); ++p) {
      if (!fn.support().inside[p] || v[p] < detail::kFlushBelow) v[p] = 0.0;
    }
    return v;
  };

  ProjectionResult cur = project_to_M(clip(init), pb);
  DescentResult out;
  out.history.push_back(cur.energy.total);
  double alpha = opt.initial_step;

  for (int it = 0;; ++it) {
    const double unorm = l2_norm(cur.field);
    const double res = detail::projected_residual(cur.gradient, cur.field);
    out.residual_trace.push_back(res / unorm);
    if (res <= opt.tol * unorm) {
      out.iterations = it;
      out.residual = res;
      out.relative_residual = res / unorm;
      break;
    }
    if (it >= opt.max_iterations)
      throw ConvergenceError("Nehari descent: no convergence after " + std::to_string(it) +
                             " iterations (relative residual " + std::to_string(res / unorm) + ")");

    ScalarField dir(g);
    double gd = 0.0;
    for (std::size_t p = 0; p < g.size(); ++p) {
      dir[p] = cur.gradient[p] / diag[p];
      gd += cur.gradient[p] * dir[p];
    }
    gd *= g.cell_volume();

    const double e0 = cur.energy.total;
    const double slack = 1e-13 * std::abs(e0);
    bool accepted = false;
    ProjectionResult next;
    for (int ls = 0; ls < 50; ++ls) {
      ScalarField trial(g);
      for (std::size_t p = 0; p < g.size(); ++p) trial[p] = cur.field[p] - alpha * dir[p];
      try {
        next = project_to_M(clip(std::move(trial)), pb);
      } catch (const ComponentCollapse&) {
        if (ls == 49) throw;
        alpha *= 0.5;
        continue;
      } catch (const ConvergenceError&) {
        if (ls == 49) throw;
        alpha *= 0.5;
        continue;
      }
      if (next.energy.total <= e0 - opt.armijo * alpha * gd + slack) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted)
      throw ConvergenceError("Nehari descent: line search failed at iteration " + std::to_string(it) +
                             " (relative residual " + std::to_string(res / unorm) + ")");

    // Preconditioned Barzilai-Borwein step for the next iteration.
    double sPs = 0.0, sy = 0.0;
    for (std::size_t p = 0; p < g.size(); ++p) {
      const double s = next.field[p] - cur.field[p];
      sPs += s * diag[p] * s;
      sy += s * (next.gradient[p] - cur.gradient[p]);
    }
    alpha = sy > 0.0 ? sPs / sy : 2.0 * alpha;
    alpha = std::clamp(alpha, opt.step_min, opt.step_max);

    cur = std::move(next);
    out.history.push_back(cur.energy.total);
  }
  out.u = std::move(cur.field);
  out.energy = cur.energy;
  out.t = cur.t;
  return out;
}

// ---------------------------------------------------------------------------

struct LevelResult {
  ScalarField w;   // minimizer
  double c = 0.0;  // its energy
  DescentResult descent;
};

// w_Υ and c_Υ.
inline LevelResult minimize_limit(const Context& ctx, const ScalarField& init, const DescentOptions& opt = {}) {
  DescentResult d = minimize_on_M(limit_problem(ctx), init, opt);
  LevelResult r{d.u, d.energy.total, std::move(d)};
  return r;
}

// w_{λ,Υ} and c_{λ,Υ}; warm-start from w_Υ for the level ordering c_{λ,Υ} ≤ c_Υ.
inline LevelResult minimize_neumann(const Context& ctx, const ScalarField& init, const DescentOptions& opt = {}) {
  DescentResult d = minimize_on_M(neumann_problem(ctx), init, opt);
  LevelResult r{d.u, d.energy.total, std::move(d)};
  return r;
}

struct TauR {
  double tau = 0.0;
  double R = 0.0;
  std::vector<double> component_norms;  // ‖w_j‖_j
};

// Single-well fibering derivative I'_j(s w_j)(s w_j)/s² = A + s²B - s^{q-1}C.
struct SingleWellFibre {
  double A = 0.0, B = 0.0, C = 0.0, q = 4.0;
  double reduced_derivative(double s) const { return A + s * s * B - std::pow(s, q - 1.0) * C; }
};

inline SingleWellFibre single_well_fibre(const Context& ctx, const ScalarField& w, int j) {
  const Functional fn = Functional::single_well(ctx, j);
  const NehariCoefficients c = component_coeffs({fn.restrict(w)}, fn);
  return {c.A[0], c.B[0], c.C[0], c.q};
}

inline TauR estimate_tau_R(const ScalarField& w, const Context& ctx, double safety = 0.9) {
  TauR out;
  std::vector<SingleWellFibre> fibres;
  for (int j : ctx.selection.wells) {
    fibres.push_back(single_well_fibre(ctx, w, j));
    out.component_norms.push_back(std::sqrt(fibres.back().A));
  }
  out.tau = safety * *std::min_element(out.component_norms.begin(), out.component_norms.end());
  for (int e = 1; e <= 10; ++e) {
    const double R = std::ldexp(1.0, e);
    bool ok = true;
    for (const SingleWellFibre& f : fibres)
      ok = ok && f.reduced_derivative(1.0 / R) > 0.0 && f.reduced_derivative(R) < 0.0;
    if (ok) {
      out.R = R;
      return out;
    }
  }
  throw ConvergenceError("estimate_tau_R: sign conditions not met for any R = 2^e, e ≤ 10");
}

}  // namespace spwells
