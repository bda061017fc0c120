#pragma once

// Experiment configuration: one JSON document.
//
// {
//   "grid":     {"n": 48, "half_width": 8.0},            half_width defaults to 4 × largest radius
//   "geometry": {"wells": [{"center": [-4,0,0], "radius": 2}, ...],
//                "margin": 0.75, "plateau": 1.0, "ramp_width": 0.5},
//   "model":    {"q": 4.0, "delta_coercivity": 0.5},
//   "upsilon":  [0],                                      0-based well indices
//   "batch":    [[0], [1], [0, 1]],                       optional, overrides "upsilon"
//   "lambda_schedule": [10, 100, 1000],
//   "solver":   {"tol": 1e-8, "max_iterations": 5000, "seed": 1, "perturbation": 0.05},
//   "diagnostics": {"mu_factor": 0.1, "tau_safety": 0.9, "path_resolution": 61,
//                   "trend_noise": 0.05, "neumann_levels": true},
//   "output_dir": "out"
// }

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "spwells/error.hpp"
#include "spwells/grid.hpp"
#include "spwells/model.hpp"
#include "spwells/wells.hpp"

namespace spwells {

struct ExperimentConfig {
  int n = 48;
  double half_width = 0.0;
  std::vector<Ball> wells;
  double margin = 0.75;
  double plateau = 1.0;
  double ramp_width = 0.5;
  double q = 4.0;
  double delta_coercivity = 0.5;
  std::vector<std::vector<int>> selections;  // one entry unless batch mode
  bool batch = false;
  std::vector<double> lambdas;
  double tol = 1e-8;
  int max_iterations = 5000;
  std::uint64_t seed = 1;
  double perturbation = 0.05;
  double mu_factor = 0.1;
  double tau_safety = 0.9;
  int path_resolution = 61;
  double trend_noise = 0.05;
  bool neumann_levels = true;
  std::string output_dir = "out";

  Grid3 grid() const { return build_grid(n, half_width); }
  WellGeometry geometry() const { return build_geometry(wells, margin, plateau, ramp_width); }
  ModelParams params(double lambda = 1.0) const { return make_params(q, delta_coercivity, lambda); }
};

namespace detail {

using json = nlohmann::json;

inline void reject_unknown(const json& j, const std::string& where, std::set<std::string> known) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!known.count(it.key())) throw ConfigError("unknown config key '" + where + it.key() + "'");
}

template <class T>
T get_or(const json& j, const char* key, T fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config key '" + where + key + "' has the wrong type");
  }
}

inline const json& section(const json& j, const char* key) {
  static const json empty = json::object();
  if (!j.contains(key)) return empty;
  if (!j.at(key).is_object()) throw ConfigError(std::string("config section '") + key + "' must be an object");
  return j.at(key);
}

inline std::vector<int> parse_selection(const json& j, const std::string& where) {
  if (!j.is_array()) throw ConfigError("'" + where + "' must be an array of well indices");
  std::vector<int> out;
  for (const json& v : j) {
    if (!v.is_number_integer()) throw ConfigError("'" + where + "' must contain integer well indices");
    out.push_back(v.get<int>());
  }
  return out;
}

}  // namespace detail

inline ExperimentConfig parse_config(const nlohmann::json& j) {
  using detail::get_or;
  using detail::section;
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  detail::reject_unknown(j, "", {"grid", "geometry", "model", "upsilon", "batch", "lambda_schedule", "solver",
                                 "diagnostics", "output_dir"});
  ExperimentConfig c;

  const auto& geo = section(j, "geometry");
  detail::reject_unknown(geo, "geometry.", {"wells", "margin", "plateau", "ramp_width"});
  if (!geo.contains("wells") || !geo.at("wells").is_array()) throw ConfigError("geometry.wells must be an array");
  for (const auto& w : geo.at("wells")) {
    detail::reject_unknown(w, "geometry.wells[].", {"center", "radius"});
    Ball b;
    try {
      const auto ctr = w.at("center").get<std::vector<double>>();
      if (ctr.size() != 3) throw ConfigError("well center must have 3 coordinates");
      b.center = {ctr[0], ctr[1], ctr[2]};
      b.radius = w.at("radius").get<double>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError("each well needs a numeric 'center' [x,y,z] and 'radius'");
    }
    c.wells.push_back(b);
  }
  c.margin = get_or(geo, "margin", c.margin, "geometry.");
  c.plateau = get_or(geo, "plateau", c.plateau, "geometry.");
  c.ramp_width = get_or(geo, "ramp_width", c.ramp_width, "geometry.");
  const WellGeometry geometry = c.geometry();

  const auto& grid = section(j, "grid");
  detail::reject_unknown(grid, "grid.", {"n", "half_width"});
  c.n = get_or(grid, "n", c.n, "grid.");
  double rmax = 0.0;
  for (const Ball& b : c.wells) rmax = std::max(rmax, b.radius);
  c.half_width = get_or(grid, "half_width", 4.0 * rmax, "grid.");
  c.grid();
  for (std::size_t i = 0; i < c.wells.size(); ++i)
    for (int ax = 0; ax < 3; ++ax)
      if (std::abs(c.wells[i].center[ax]) + c.wells[i].radius + c.margin >= c.half_width)
        throw ConfigError("enlarged neighbourhood of well " + std::to_string(i) + " leaves the box [-L, L]^3");

  const auto& model = section(j, "model");
  detail::reject_unknown(model, "model.", {"q", "delta_coercivity"});
  c.q = get_or(model, "q", c.q, "model.");
  c.delta_coercivity = get_or(model, "delta_coercivity", c.delta_coercivity, "model.");
  c.params();

  if (j.contains("batch")) {
    if (!j.at("batch").is_array() || j.at("batch").empty())
      throw ConfigError("'batch' must be a non-empty array of selections");
    c.batch = true;
    for (const auto& s : j.at("batch")) c.selections.push_back(detail::parse_selection(s, "batch[]"));
  } else {
    c.selections.push_back(detail::parse_selection(j.value("upsilon", nlohmann::json::array()), "upsilon"));
  }
  for (auto& s : c.selections) s = make_selection(s, geometry.k()).wells;

  if (!j.contains("lambda_schedule")) throw ConfigError("config needs a 'lambda_schedule'");
  c.lambdas = get_or(j, "lambda_schedule", c.lambdas, "");
  if (c.lambdas.empty()) throw ConfigError("λ schedule is empty");
  for (std::size_t i = 0; i < c.lambdas.size(); ++i) {
    if (!(c.lambdas[i] >= 1.0)) throw ConfigError("λ schedule values must be ≥ 1");
    if (i > 0 && !(c.lambdas[i] > c.lambdas[i - 1])) throw ConfigError("λ schedule must be strictly increasing");
  }

  const auto& solver = section(j, "solver");
  detail::reject_unknown(solver, "solver.", {"tol", "max_iterations", "seed", "perturbation"});
  c.tol = get_or(solver, "tol", c.tol, "solver.");
  c.max_iterations = get_or(solver, "max_iterations", c.max_iterations, "solver.");
  c.seed = get_or(solver, "seed", c.seed, "solver.");
  c.perturbation = get_or(solver, "perturbation", c.perturbation, "solver.");
  if (!(c.tol > 0.0)) throw ConfigError("solver.tol must be positive");
  if (c.max_iterations < 1) throw ConfigError("solver.max_iterations must be positive");
  if (!(c.perturbation >= 0.0 && c.perturbation < 1.0)) throw ConfigError("solver.perturbation must lie in [0, 1)");

  const auto& diag = section(j, "diagnostics");
  detail::reject_unknown(diag, "diagnostics.",
                         {"mu_factor", "tau_safety", "path_resolution", "trend_noise", "neumann_levels"});
  c.mu_factor = get_or(diag, "mu_factor", c.mu_factor, "diagnostics.");
  c.tau_safety = get_or(diag, "tau_safety", c.tau_safety, "diagnostics.");
  c.path_resolution = get_or(diag, "path_resolution", c.path_resolution, "diagnostics.");
  c.trend_noise = get_or(diag, "trend_noise", c.trend_noise, "diagnostics.");
  c.neumann_levels = get_or(diag, "neumann_levels", c.neumann_levels, "diagnostics.");
  if (!(c.mu_factor > 0.0)) throw ConfigError("diagnostics.mu_factor must be positive");
  if (!(c.tau_safety > 0.0 && c.tau_safety <= 1.0)) throw ConfigError("diagnostics.tau_safety must lie in (0, 1]");
  if (c.path_resolution < 2) throw ConfigError("diagnostics.path_resolution must be at least 2");
  if (!(c.trend_noise >= 0.0)) throw ConfigError("diagnostics.trend_noise must be nonnegative");

  c.output_dir = get_or(j, "output_dir", c.output_dir, "");
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
  }
  return parse_config(j);
}

}  // namespace spwells
