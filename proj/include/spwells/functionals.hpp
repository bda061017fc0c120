#pragma once

// Energy functionals of the penalized, limit and Neumann problems.
//
// All three share one shape on a support set S:
//     E(u) = ½ <u, K u> + ¼ ∫ φ_ũ ũ² - ∫_S G(x, u),      ũ = u·1_S,
// where K = (graph Laplacian of the edge mode) + weight. They differ only in S,
// the edge mode, the weight and where the nonlinearity is capped:
//
//   penalized φ_λ   S = box,  Dirichlet edges, weight λa+1, f̃ off Ω'_Υ
//   limit J = I_Υ   S = Ω_Υ,  Dirichlet edges, weight 1,    f everywhere
//   Neumann φ_λ,Υ   S = Ω'_Υ, Neumann edges,   weight λa+1, f everywhere
//
// The L² gradient is K u + φ_ũ u - g(x, u) on S and zero off S. Note the
// quartic term ¼∫φ_u u² differentiates to φ_u u (no ½).

#include <cmath>
#include <memory>
#include <vector>

#include "spwells/coulomb.hpp"
#include "spwells/error.hpp"
#include "spwells/grid.hpp"
#include "spwells/model.hpp"
#include "spwells/wells.hpp"

namespace spwells {

struct Context {
  Grid3 grid;
  WellGeometry geometry;
  Selection selection;
  ModelParams params;
  ScalarField a;
  WellMasks masks;
  std::shared_ptr<const CoulombSolver> coulomb;

  double lambda() const noexcept { return params.lambda; }
};

inline Context make_context(const Grid3& grid, WellGeometry geometry, Selection selection, ModelParams params,
                            std::shared_ptr<const CoulombSolver> coulomb = nullptr) {
  for (int j : selection.wells)
    if (j < 0 || std::size_t(j) >= geometry.k()) throw ConfigError("selection refers to a missing well");
  if (!coulomb) coulomb = std::make_shared<CoulombSolver>(grid);
  require_same_grid(coulomb->grid(), grid);
  Context ctx{grid, geometry, selection, params, sample_potential(geometry, grid), {}, std::move(coulomb)};
  ctx.masks = masks(ctx.geometry, grid, ctx.selection);
  return ctx;
}

inline Context with_lambda(Context ctx, double lambda) {
  ctx.params = with_lambda(ctx.params, lambda);
  return ctx;
}

// Same grid, geometry and solver; different selection Υ.
inline Context with_selection(Context ctx, Selection selection) {
  ctx.selection = std::move(selection);
  ctx.masks = masks(ctx.geometry, ctx.grid, ctx.selection);
  return ctx;
}

struct EnergyBreakdown {
  double quadratic = 0.0;  // ½ ‖u‖² of the functional's Dirichlet form
  double nonlocal = 0.0;   // ¼ ∫ φ_u u²
  double potential = 0.0;  // ∫ G(x, u)
  double total = 0.0;      // quadratic + nonlocal - potential
};

enum class FunctionalKind { penalized, limit, neumann };

class Functional {
 public:
  Functional(const Context& ctx, FunctionalKind kind) : params_(ctx.params), coulomb_(ctx.coulomb), kind_(kind) {
    const Grid3& g = ctx.grid;
    switch (kind) {
      case FunctionalKind::penalized:
        support_ = RegionMask(g, true);
        mode_ = EdgeMode::dirichlet;
        weight_ = lambda_weight(ctx);
        capped_.assign(g.size(), 0);
        for (std::size_t p = 0; p < g.size(); ++p) capped_[p] = ctx.masks.selected_enlarged.inside[p] ? 0 : 1;
        break;
      case FunctionalKind::limit:
        support_ = ctx.masks.selected;
        mode_ = EdgeMode::dirichlet;
        weight_ = ScalarField(g, 1.0);
        capped_.assign(g.size(), 0);
        break;
      case FunctionalKind::neumann:
        support_ = ctx.masks.selected_enlarged;
        mode_ = EdgeMode::neumann;
        weight_ = lambda_weight(ctx);
        capped_.assign(g.size(), 0);
        break;
    }
    degree_ = stiffness_degree(support_, mode_);
  }

  // I_j: the limit functional on a single well Ω_j (nonlocal term from that component alone).
  static Functional single_well(const Context& ctx, int j) {
    Functional f(ctx, FunctionalKind::limit);
    f.support_ = ctx.masks.wells.at(std::size_t(j));
    f.degree_ = stiffness_degree(f.support_, f.mode_);
    return f;
  }

  FunctionalKind kind() const noexcept { return kind_; }
  const RegionMask& support() const noexcept { return support_; }
  const Grid3& grid() const noexcept { return support_.grid; }
  const ModelParams& params() const noexcept { return params_; }
  const CoulombSolver& coulomb() const noexcept { return *coulomb_; }
  bool capped(std::size_t p) const noexcept { return capped_[p] != 0; }

  ScalarField restrict(const ScalarField& u) const { return restrict_to(u, support_); }

  ScalarField stiffness(const ScalarField& u) const { return apply_stiffness(u, support_, degree_, weight_); }

  // φ_ũ for ũ = u restricted to the support.
  ScalarField potential(const ScalarField& u) const { return coulomb_->poisson_fft(restrict(u)); }

  // Diagonal of K, used as a preconditioner.
  ScalarField stiffness_diagonal() const {
    ScalarField d(grid());
    const double ih2 = 1.0 / (grid().h * grid().h);
    for (std::size_t p = 0; p < d.size(); ++p) d[p] = support_.inside[p] ? degree_[p] * ih2 + weight_[p] : 1.0;
    return d;
  }

  double primitive_sum(const ScalarField& u) const {
    double s = 0.0;
    for (std::size_t p = 0; p < u.size(); ++p)
      if (support_.inside[p]) s += params_.G(!capped_[p], u[p]);
    return s * grid().cell_volume();
  }

  // Energy and gradient of u (zero off the support) from precomputed K u and φ_u.
  struct Evaluation {
    EnergyBreakdown energy;
    ScalarField gradient;
  };

  Evaluation assemble(const ScalarField& u, const ScalarField& Ku, const ScalarField& phi) const {
    Evaluation ev{{}, ScalarField(grid())};
    double quad = 0.0, nonloc = 0.0, pot = 0.0;
    for (std::size_t p = 0; p < u.size(); ++p) {
      if (!support_.inside[p]) continue;
      const double v = u[p];
      const bool inside = !capped_[p];
      quad += v * Ku[p];
      nonloc += phi[p] * v * v;
      pot += params_.G(inside, v);
      ev.gradient[p] = Ku[p] + phi[p] * v - params_.g(inside, v);
    }
    const double w = grid().cell_volume();
    ev.energy.quadratic = 0.5 * quad * w;
    ev.energy.nonlocal = 0.25 * nonloc * w;
    ev.energy.potential = pot * w;
    ev.energy.total = ev.energy.quadratic + ev.energy.nonlocal - ev.energy.potential;
    return ev;
  }

  Evaluation evaluate(const ScalarField& u) const {
    const ScalarField r = restrict(u);
    return assemble(r, stiffness(r), coulomb_->poisson_fft(r));
  }

  EnergyBreakdown energy(const ScalarField& u) const { return evaluate(u).energy; }
  ScalarField gradient(const ScalarField& u) const { return evaluate(u).gradient; }

 private:
  static ScalarField lambda_weight(const Context& ctx) {
    ScalarField w(ctx.grid);
    for (std::size_t p = 0; p < w.size(); ++p) w[p] = ctx.params.lambda * ctx.a[p] + 1.0;
    return w;
  }

  ModelParams params_;
  std::shared_ptr<const CoulombSolver> coulomb_;
  FunctionalKind kind_;
  RegionMask support_;
  EdgeMode mode_ = EdgeMode::dirichlet;
  std::vector<double> degree_;
  ScalarField weight_;
  std::vector<std::uint8_t> capped_;
};

namespace detail {

// Rejects fields carrying more than a rounding-level share of their L² mass off the mask.
inline void require_supported(const ScalarField& u, const RegionMask& mask, const char* what) {
  require_same_grid(u.grid, mask.grid);
  double in = 0.0, out = 0.0;
  for (std::size_t p = 0; p < u.size(); ++p) (mask.inside[p] ? in : out) += u[p] * u[p];
  if (out > 1e-24 * (in + out) && out > 0.0)
    throw ConfigError(std::string(what) + ": field has mass outside its admissible region");
}

}  // namespace detail

inline EnergyBreakdown energy_phi_lambda(const ScalarField& u, const Context& ctx) {
  require_same_grid(u.grid, ctx.grid);
  return Functional(ctx, FunctionalKind::penalized).energy(u);
}

inline ScalarField grad_phi_lambda(const ScalarField& u, const Context& ctx) {
  require_same_grid(u.grid, ctx.grid);
  return Functional(ctx, FunctionalKind::penalized).gradient(u);
}

inline EnergyBreakdown energy_J_limit(const ScalarField& u, const Context& ctx) {
  detail::require_supported(u, ctx.masks.selected, "limit functional");
  return Functional(ctx, FunctionalKind::limit).energy(u);
}

inline ScalarField grad_J_limit(const ScalarField& u, const Context& ctx) {
  detail::require_supported(u, ctx.masks.selected, "limit functional");
  return Functional(ctx, FunctionalKind::limit).gradient(u);
}

inline EnergyBreakdown energy_phi_lambda_upsilon(const ScalarField& u, const Context& ctx) {
  detail::require_supported(u, ctx.masks.selected_enlarged, "Neumann functional");
  return Functional(ctx, FunctionalKind::neumann).energy(u);
}

inline ScalarField grad_phi_lambda_upsilon(const ScalarField& u, const Context& ctx) {
  detail::require_supported(u, ctx.masks.selected_enlarged, "Neumann functional");
  return Functional(ctx, FunctionalKind::neumann).gradient(u);
}

// Per-component Nehari residuals <E'(u), u·1_{P_j}>.
inline std::vector<double> constraint_values(const ScalarField& u, const std::vector<RegionMask>& partition,
                                             const Functional& functional) {
  if (!pairwise_disjoint(partition)) throw ConfigError("constraint_values: partition masks overlap");
  const ScalarField grad = functional.gradient(u);
  std::vector<double> out;
  out.reserve(partition.size());
  for (const RegionMask& m : partition) {
    require_same_grid(m.grid, u.grid);
    double s = 0.0;
    for (std::size_t p = 0; p < u.size(); ++p)
      if (m.inside[p]) s += grad[p] * u[p];
    out.push_back(s * u.grid.cell_volume());
  }
  return out;
}

inline std::vector<double> constraint_values(const ScalarField& u, const std::vector<RegionMask>& partition,
                                             const Context& ctx, FunctionalKind kind) {
  return constraint_values(u, partition, Functional(ctx, kind));
}

}  // namespace spwells
