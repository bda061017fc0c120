#pragma once

// Orchestration of one experiment: limit level, τ and R, λ-continuation,
// Neumann levels, the γ₀ bound, and the convergence trends along λ.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "spwells/config.hpp"
#include "spwells/functionals.hpp"
#include "spwells/io.hpp"
#include "spwells/nehari.hpp"
#include "spwells/solver.hpp"

namespace spwells {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitConvergence = 3;

// ---------------------------------------------------------------------------
// Trend verdict along an increasing λ schedule.

struct TrendItem {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct TrendVerdict {
  bool pass = false;
  std::string reason;  // set when the rows cannot support a trend test at all
  std::vector<TrendItem> items;

  const TrendItem* item(const std::string& name) const {
    for (const TrendItem& i : items)
      if (i.name == name) return &i;
    return nullptr;
  }
};

namespace detail {

inline TrendItem trend_item(const std::string& name, const std::vector<double>& values, double noise) {
  TrendItem it{name, true, "non-increasing"};
  for (std::size_t i = 1; i < values.size(); ++i)
    if (!(values[i] <= values[i - 1] * (1.0 + noise))) {
      it.pass = false;
      std::ostringstream os;
      os << "increases at row " << i << ": " << values[i - 1] << " -> " << values[i];
      it.detail = os.str();
      break;
    }
  return it;
}

}  // namespace detail

// Penalty mass λ∫a u², tail mass and |φ_λ(u) − c_Υ| must each decrease row to row
// (up to `noise` relative slack).
inline TrendVerdict ps_infty_report(const std::vector<DiagnosticsRow>& rows, double c_upsilon, double noise = 0.05) {
  if (rows.size() < 3) throw ConfigError("trend report needs at least 3 rows, got " + std::to_string(rows.size()));
  TrendVerdict v;
  bool constant = true, increasing = true;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    constant = constant && rows[i].lambda == rows[0].lambda;
    increasing = increasing && rows[i].lambda > rows[i - 1].lambda;
  }
  if (constant) {
    v.reason = "insufficient λ spread: all rows share λ = " + format_real(rows[0].lambda);
    return v;
  }
  if (!increasing) {
    v.reason = "rows are not ordered by strictly increasing λ";
    return v;
  }
  std::vector<double> pen, tail, gap;
  for (const DiagnosticsRow& r : rows) {
    pen.push_back(r.penalty_mass);
    tail.push_back(r.tail_mass);
    gap.push_back(std::abs(r.energy - c_upsilon));
  }
  v.items.push_back(detail::trend_item("penalty_mass", pen, noise));
  v.items.push_back(detail::trend_item("tail_mass", tail, noise));
  v.items.push_back(detail::trend_item("energy_gap", gap, noise));
  v.pass = true;
  for (const TrendItem& i : v.items) v.pass = v.pass && i.pass;
  return v;
}

inline nlohmann::json to_json(const TrendVerdict& v) {
  nlohmann::json items = nlohmann::json::array();
  for (const TrendItem& i : v.items) items.push_back({{"name", i.name}, {"pass", i.pass}, {"detail", i.detail}});
  nlohmann::json j = {{"pass", v.pass}, {"items", items}};
  if (!v.reason.empty()) j["reason"] = v.reason;
  return j;
}

// ---------------------------------------------------------------------------

struct LimitSummary {
  ScalarField w;
  double c_upsilon = 0.0;
  TauR tau_R;
  double mu = 0.0;
  double delta_theta = 0.0;
  double r = 0.0;
  int iterations = 0;
  double relative_residual = 0.0;
};

struct ExperimentOutcome {
  int exit_code = kExitOk;
  std::string message;
  std::vector<DiagnosticsRow> rows;
  LimitSummary limit;
  std::vector<SolveResult> results;
  nlohmann::json summary;
};

inline Context context_for(const ExperimentConfig& cfg, const std::vector<int>& selection,
                           std::shared_ptr<const CoulombSolver> coulomb = nullptr) {
  const WellGeometry geo = cfg.geometry();
  return make_context(cfg.grid(), geo, make_selection(selection, geo.k()), cfg.params(cfg.lambdas.front()),
                      std::move(coulomb));
}

inline std::string selection_label(const std::vector<int>& s) {
  std::string out = "upsilon";
  for (int j : s) out += "_" + std::to_string(j);
  return out;
}

inline LimitSummary solve_limit(const ExperimentConfig& cfg, const Context& ctx) {
  SolverOptions opt{cfg.tol, cfg.max_iterations};
  LevelResult lr = minimize_limit(ctx, initial_guess(ctx, cfg.seed, cfg.perturbation), descent_options(opt));
  LimitSummary s;
  s.w = std::move(lr.w);
  s.c_upsilon = lr.c;
  s.iterations = lr.descent.iterations;
  s.relative_residual = lr.descent.relative_residual;
  s.tau_R = estimate_tau_R(s.w, ctx, cfg.tau_safety);
  s.mu = cfg.mu_factor * s.c_upsilon;
  s.delta_theta = s.tau_R.tau / (48.0 * s.tau_R.R);
  s.r = reference_radius(s.tau_R.R, ctx.params.theta, s.c_upsilon);
  return s;
}

inline nlohmann::json to_json(const LimitSummary& s) {
  return {{"c_upsilon", s.c_upsilon},
          {"tau", s.tau_R.tau},
          {"R", s.tau_R.R},
          {"component_norms", s.tau_R.component_norms},
          {"mu", s.mu},
          {"delta_theta", s.delta_theta},
          {"r", s.r},
          {"iterations", s.iterations},
          {"relative_residual", s.relative_residual}};
}

inline nlohmann::json config_metadata(const ExperimentConfig& cfg, const std::vector<int>& selection) {
  return {{"version", kVersion},
          {"n", cfg.n},
          {"half_width", cfg.half_width},
          {"q", cfg.q},
          {"delta_coercivity", cfg.delta_coercivity},
          {"upsilon", selection},
          {"lambda_schedule", cfg.lambdas},
          {"tol", cfg.tol},
          {"seed", cfg.seed},
          {"mu_factor", cfg.mu_factor},
          {"tau_safety", cfg.tau_safety},
          {"path_resolution", cfg.path_resolution},
          {"trend_noise", cfg.trend_noise}};
}

// One selection Υ. Writes into `out_dir` when it is non-empty.
inline ExperimentOutcome run_selection(const ExperimentConfig& cfg, const std::vector<int>& selection,
                                       const std::filesystem::path& out_dir,
                                       std::shared_ptr<const CoulombSolver> coulomb = nullptr) {
  ExperimentOutcome oc;
  const Context ctx = context_for(cfg, selection, std::move(coulomb));
  const SolverOptions opt{cfg.tol, cfg.max_iterations};
  const bool write = !out_dir.empty();
  if (write) std::filesystem::create_directories(out_dir / "fields");

  try {
    oc.limit = solve_limit(cfg, ctx);
  } catch (const ConvergenceError& e) {
    oc.exit_code = kExitConvergence;
    oc.message = std::string("limit problem: ") + e.what();
    return oc;
  } catch (const ComponentCollapse& e) {
    oc.exit_code = kExitConvergence;
    oc.message = std::string("limit problem: ") + e.what();
    return oc;
  }
  if (write) write_field(out_dir / "fields" / "w_upsilon", oc.limit.w);

  const ContinuationResult cr =
      continuation(make_schedule(cfg.lambdas), ctx, initial_guess(ctx, cfg.seed, cfg.perturbation), opt);
  nlohmann::json per_lambda = nlohmann::json::array();
  std::optional<double> lambda_star;
  for (std::size_t i = 0; i < cr.results.size(); ++i) {
    const SolveResult& r = cr.results[i];
    const Context c = with_lambda(ctx, r.lambda);
    DiagnosticsRow row;
    row.lambda = r.lambda;
    row.energy = r.energy.total;
    row.residual = r.residual;
    row.tail_mass = r.diagnostics.tail_mass;
    row.penalty_mass = r.diagnostics.penalty_mass;
    row.outside_sup = r.diagnostics.outside_sup;
    row.classification = to_string(r.classification);
    row.c_gap = r.energy.total - oc.limit.c_upsilon;
    nlohmann::json extra = {{"lambda", r.lambda}, {"iterations", r.iterations},
                            {"relative_residual", r.relative_residual}, {"tail_norm_sq", r.diagnostics.tail_norm_sq}};
    if (cfg.neumann_levels) {
      try {
        row.c_lambda_upsilon = minimize_neumann(c, oc.limit.w, descent_options(opt)).c;
      } catch (const std::exception& e) {
        extra["neumann_error"] = e.what();
      }
    }
    const PathScan ps = gamma0_path_scan(oc.limit.w, oc.limit.tau_R.R, c, cfg.path_resolution);
    row.b_hat = ps.b_hat;
    extra["boundary_max"] = ps.boundary_max;
    extra["argmax_t"] = ps.argmax;
    const Membership m = a_mu_membership(r.u, c, oc.limit.c_upsilon, oc.limit.mu, oc.limit.tau_R.tau,
                                         oc.limit.tau_R.R);
    extra["a_mu_member"] = m.member;
    extra["theta_floor"] = m.floor;
    extra["component_norms"] = m.norms;
    if (!lambda_star && r.classification == Classification::original) lambda_star = r.lambda;
    per_lambda.push_back(extra);
    oc.rows.push_back(row);
    if (write) write_field(out_dir / "fields" / ("u_lambda_" + std::to_string(i)), r.u);
  }
  oc.results = cr.results;

  nlohmann::json summary = {{"metadata", config_metadata(cfg, selection)},
                            {"limit", to_json(oc.limit)},
                            {"per_lambda", per_lambda},
                            {"converged", cr.ok()}};
  summary["lambda_star"] = lambda_star ? nlohmann::json(*lambda_star) : nlohmann::json(nullptr);
  if (oc.rows.size() >= 3)
    summary["trend"] = to_json(ps_infty_report(oc.rows, oc.limit.c_upsilon, cfg.trend_noise));
  if (!cr.ok()) {
    summary["failed_index"] = *cr.failed_index;
    summary["failure"] = cr.failure;
    oc.exit_code = kExitConvergence;
    oc.message = "continuation failed at λ = " + format_real(cfg.lambdas[*cr.failed_index]) + ": " + cr.failure;
  }
  oc.summary = summary;
  if (write) {
    write_csv(out_dir / "diagnostics.csv", oc.rows);
    std::ofstream(out_dir / "summary.json") << summary.dump(2) << '\n';
  }
  return oc;
}

// All selections of the config; batch selections run concurrently into per-Υ subdirectories.
inline std::vector<ExperimentOutcome> run(const ExperimentConfig& cfg, const std::filesystem::path& out_dir) {
  if (!cfg.batch) return {run_selection(cfg, cfg.selections.front(), out_dir)};
  auto coulomb = std::make_shared<const CoulombSolver>(cfg.grid());
  std::vector<std::future<ExperimentOutcome>> jobs;
  for (const auto& s : cfg.selections) {
    const std::filesystem::path sub = out_dir.empty() ? out_dir : out_dir / selection_label(s);
    jobs.push_back(std::async(std::launch::async, [&cfg, s, sub, coulomb] { return run_selection(cfg, s, sub, coulomb); }));
  }
  std::vector<ExperimentOutcome> out;
  for (auto& j : jobs) out.push_back(j.get());
  return out;
}

inline int exit_code(const std::vector<ExperimentOutcome>& outcomes) {
  int code = kExitOk;
  for (const auto& o : outcomes) code = std::max(code, o.exit_code);
  return code;
}

}  // namespace spwells
