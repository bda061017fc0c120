// Command-line front end: solve, limit, sweep-lambda, check.

#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "spwells/check.hpp"
#include "spwells/experiment.hpp"

using namespace spwells;

namespace {

void report(const ExperimentOutcome& oc, const std::vector<int>& selection) {
  std::cout << "selection";
  for (int j : selection) std::cout << ' ' << j;
  std::cout << ": c_upsilon = " << format_real(oc.limit.c_upsilon) << ", tau = " << format_real(oc.limit.tau_R.tau)
            << ", R = " << oc.limit.tau_R.R << '\n';
  for (const DiagnosticsRow& r : oc.rows)
    std::cout << "  lambda " << format_real(r.lambda) << "  energy " << format_real(r.energy) << "  gap "
              << format_real(r.c_gap) << "  outside_sup " << format_real(r.outside_sup) << "  " << r.classification
              << '\n';
  if (!oc.message.empty()) std::cerr << "error: " << oc.message << '\n';
}

int cmd_solve(const std::string& config_path, const std::string& out) {
  const ExperimentConfig cfg = load_config(config_path);
  const std::filesystem::path dir = out.empty() ? std::filesystem::path(cfg.output_dir) : std::filesystem::path(out);
  const auto outcomes = run(cfg, dir);
  for (std::size_t i = 0; i < outcomes.size(); ++i) report(outcomes[i], cfg.selections[i]);
  std::cout << "outputs in " << dir.string() << '\n';
  return exit_code(outcomes);
}

int cmd_limit(const std::string& config_path, const std::string& out) {
  const ExperimentConfig cfg = load_config(config_path);
  int code = kExitOk;
  for (const auto& s : cfg.selections) {
    const Context ctx = context_for(cfg, s);
    try {
      const LimitSummary ls = solve_limit(cfg, ctx);
      std::cout << to_json(ls).dump(2) << '\n';
      if (!out.empty()) {
        const std::filesystem::path dir = cfg.batch ? std::filesystem::path(out) / selection_label(s) : std::filesystem::path(out);
        std::filesystem::create_directories(dir);
        write_field(dir / "w_upsilon", ls.w);
        std::ofstream(dir / "limit.json") << to_json(ls).dump(2) << '\n';
      }
    } catch (const ConvergenceError& e) {
      std::cerr << "error: " << e.what() << '\n';
      code = kExitConvergence;
    } catch (const ComponentCollapse& e) {
      std::cerr << "error: " << e.what() << '\n';
      code = kExitConvergence;
    }
  }
  return code;
}

int cmd_sweep(const std::string& config_path) {
  const ExperimentConfig cfg = load_config(config_path);
  int code = kExitOk;
  for (const auto& s : cfg.selections) {
    const ExperimentOutcome oc = run_selection(cfg, s, {});
    if (cfg.batch) std::cout << "# " << selection_label(s) << '\n';
    write_csv(std::cout, oc.rows);
    if (!oc.message.empty()) std::cerr << "error: " << oc.message << '\n';
    code = std::max(code, oc.exit_code);
  }
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-bump solutions of a Schrodinger-Poisson system with potential wells"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  std::string config, out;
  auto* solve = app.add_subcommand("solve", "limit level, continuation in lambda, diagnostics and field dumps");
  solve->add_option("--config", config, "experiment config (JSON)")->required();
  solve->add_option("--out", out, "output directory (default: output_dir of the config)");

  auto* limit = app.add_subcommand("limit", "limit problem only: w_upsilon, c_upsilon, tau, R");
  limit->add_option("--config", config, "experiment config (JSON)")->required();
  limit->add_option("--out", out, "directory for the w_upsilon dump");

  auto* sweep = app.add_subcommand("sweep-lambda", "continuation along the schedule; CSV on stdout");
  sweep->add_option("--config", config, "experiment config (JSON)")->required();

  CheckOptions copt;
  auto* check = app.add_subcommand("check", "invariant suite on small grids");
  check->add_option("--grid", copt.n, "points per axis")->check(CLI::Range(8, 64));
  check->add_option("--kernel-scale", copt.kernel_scale, "scale the Coulomb kernel (fault injection)");
  check->add_option("--seed", copt.seed, "random seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (*solve) return cmd_solve(config, out);
    if (*limit) return cmd_limit(config, out);
    if (*sweep) return cmd_sweep(config);
    if (*check) return check_suite(copt, std::cout);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const GridMismatch& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ConvergenceError& e) {
    std::cerr << "convergence failure: " << e.what() << '\n';
    return kExitConvergence;
  }
  return 0;
}
