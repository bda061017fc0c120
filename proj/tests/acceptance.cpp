// Acceptance harness: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "spwells/check.hpp"
#include "spwells/experiment.hpp"

using namespace spwells;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Line {
  int id;
  bool pass;
  std::string detail;
};

std::vector<Line> lines;

void report(int id, bool pass, const std::string& detail) {
  lines.push_back({id, pass, detail});
  std::printf("criterion %d: %s  %s\n", id, pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, double a) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double max_rel(const ScalarField& a, const ScalarField& b) {
  double worst = 0.0, scale = 0.0;
  for (std::size_t p = 0; p < a.size(); ++p) {
    worst = std::max(worst, std::abs(a[p] - b[p]));
    scale = std::max(scale, std::abs(b[p]));
  }
  return worst / scale;
}

double l2_distance(const ScalarField& a, const ScalarField& b) {
  ScalarField d(a.grid);
  for (std::size_t p = 0; p < a.size(); ++p) d[p] = a[p] - b[p];
  return l2_norm(d);
}

ScalarField mirror_x(const ScalarField& u) {
  const Grid3& g = u.grid;
  ScalarField r(g);
  for (int k = 0; k < g.n; ++k)
    for (int j = 0; j < g.n; ++j)
      for (int i = 0; i < g.n; ++i) r[g.index(i, j, k)] = u[g.index(g.n - 1 - i, j, k)];
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void criterion1() {
  const Grid3 g = build_grid(16, 4.0);
  std::mt19937_64 rng(101);
  const ScalarField u = oracle::random_field(g, rng);
  const auto t0 = Clock::now();
  const CoulombSolver s(g);
  const ScalarField fft = s.poisson_fft(u);
  const ScalarField direct = poisson_direct(u);
  const double t = seconds_since(t0);
  const double err = max_rel(fft, direct);
  report(1, err < 1e-6 && t < 5.0, fmt("16^3 FFT vs direct max rel error %.3e", err) + fmt(", %.2f s", t));
}

void criterion2() {
  const Grid3 g = build_grid(16, 4.0);
  const CoulombSolver s(g);
  std::mt19937_64 rng(102);
  double min_phi = INFINITY;
  for (int k = 0; k < 100; ++k)
    for (double v : s.poisson_fft(oracle::random_field(g, rng)).values) min_phi = std::min(min_phi, v);
  double scaling = 0.0;
  const ScalarField u = oracle::random_field(g, rng);
  const ScalarField phi = s.poisson_fft(u);
  for (double t : {0.5, 2.0, 3.0}) {
    ScalarField tu(g);
    for (std::size_t p = 0; p < u.size(); ++p) tu[p] = t * u[p];
    const ScalarField pt = s.poisson_fft(tu);
    for (std::size_t p = 0; p < u.size(); ++p)
      scaling = std::max(scaling, std::abs(pt[p] - t * t * phi[p]) / std::abs(t * t * phi[p]));
  }
  const Grid3 g24 = build_grid(24, 6.0);
  const CoulombSolver s24(g24);
  double identity = 0.0;
  for (int k = 0; k < 5; ++k) {
    const ScalarField w = oracle::smooth_random_field(g24, rng);
    const double lhs = potential_field_energy(w), rhs = nonlocal_energy(s24, w);
    identity = std::max(identity, std::abs(lhs - rhs) / rhs);
  }
  report(2, min_phi >= 0.0 && scaling < 1e-13 && identity < 1e-4,
         fmt("min phi %.3e", min_phi) + fmt(", scaling rel %.2e", scaling) +
             fmt(", 24^3 field-energy identity rel %.3e", identity));
}

void criterion3() {
  const Context ctx = check_context(16, {});
  std::mt19937_64 rng(103);
  const Functional fp(ctx, FunctionalKind::penalized), fl(ctx, FunctionalKind::limit),
      fn(ctx, FunctionalKind::neumann);
  double worst[3] = {0, 0, 0};
  for (int k = 0; k < 10; ++k) {
    const ScalarField u = oracle::random_field(ctx.grid, rng, 0.0, 1.5);
    const ScalarField v = oracle::random_field(ctx.grid, rng);
    int idx = 0;
    for (const Functional* f : {&fp, &fl, &fn}) {
      const ScalarField ur = f->restrict(u), vr = f->restrict(v);
      worst[idx] = std::max(worst[idx], oracle::directional_error([&](const ScalarField& w) { return f->energy(w).total; },
                                                                  f->gradient(ur), ur, vr));
      ++idx;
    }
  }
  report(3, worst[0] < 1e-5 && worst[1] < 1e-5 && worst[2] < 1e-5,
         fmt("FD rel errors: phi_lambda %.2e", worst[0]) + fmt(", J %.2e", worst[1]) +
             fmt(", phi_lambda,Y %.2e", worst[2]));
}

void criterion4() {
  NehariCoefficients c = NehariCoefficients::zeros(1, 4.0);
  c.A = {1.0};
  c.C = {1.0};
  const double closed = std::abs(solve_t_system(c)[0] - 1.0);
  c.B = {1.0};
  const double root = oracle::bisect([](double t) { return t * t * t - t * t - 1.0; }, 1.0, 2.0);
  const double cubic = std::abs(solve_t_system(c)[0] - root);
  std::mt19937_64 rng(104);
  std::uniform_real_distribution<double> ac(0.1, 10.0), bd(0.0, 5.0);
  double worst = 0.0;
  for (int k = 0; k < 50; ++k) {
    NehariCoefficients s = NehariCoefficients::zeros(2, 4.0);
    s.A = {ac(rng), ac(rng)};
    s.C = {ac(rng), ac(rng)};
    const double b01 = bd(rng);
    s.B = {bd(rng), b01, b01, bd(rng)};
    const std::vector<double> t = solve_t_system(s);
    const auto o = oracle::grid_search_t2({s.A[0], s.A[1]}, {s.B[0], s.B[1], s.B[2], s.B[3]}, {s.C[0], s.C[1]}, 4.0);
    worst = std::max({worst, std::abs(t[0] - o[0]) / o[0], std::abs(t[1] - o[1]) / o[1]});
  }
  report(4, closed < 1e-12 && cubic < 1e-10 && std::abs(root - 1.46557) < 1e-5 && worst < 1e-6,
         fmt("closed form err %.1e", closed) + fmt(", cubic root %.12f", root) + fmt(" err %.1e", cubic) +
             fmt(", 50 random l=2 max rel %.2e", worst));
}

void criterion5() {
  const Context ctx = check_context(16, {});
  const NehariProblem pb = limit_problem(ctx);
  std::mt19937_64 rng(105);
  double worst_gap = INFINITY, floor = INFINITY;
  for (int k = 0; k < 100; ++k) {
    const ProjectionResult pr = project_to_M(oracle::random_field(ctx.grid, rng, 0.0, 1.0), pb);
    const double norm2 = 2.0 * pr.energy.quadratic;
    worst_gap = std::min(worst_gap, pr.energy.total - 0.25 * norm2);
    for (const RegionMask& m : pb.components)
      floor = std::min(floor, std::sqrt(2.0 * pb.functional.energy(restrict_to(pr.field, m)).quadratic));
  }
  report(5, worst_gap >= -1e-8 && floor > 0.0,
         fmt("min J(u) - |u|^2/4 = %.4e", worst_gap) + fmt(", component norm floor %.4e", floor));
}

struct Standard {
  ExperimentConfig cfg;
  ExperimentOutcome first;
  std::string csv_a, csv_b;
};

void criterion6(const Standard& st) {
  const Context ctx = context_for(st.cfg, {0});
  const double c_up = st.first.limit.c_upsilon;
  const double R = st.first.limit.tau_R.R;
  bool ok = true;
  double prev_gap = INFINITY;
  std::ostringstream os;
  os.precision(10);
  os << "c_Y " << c_up;
  for (double lam : {1.0, 10.0, 100.0}) {
    const Context c = with_lambda(ctx, lam);
    const double level = minimize_neumann(c, st.first.limit.w, descent_options({st.cfg.tol, st.cfg.max_iterations})).c;
    const double b_hat = gamma0_path_scan(st.first.limit.w, R, c, st.cfg.path_resolution).b_hat;
    const double gap = c_up - level;
    ok = ok && level <= b_hat && b_hat <= c_up + 1e-6 && gap < prev_gap;
    prev_gap = gap;
    os << "; lambda " << lam << ": c_lY " << level << " b_hat " << b_hat << " gap " << gap;
  }
  report(6, ok, os.str());
}

struct Run {
  std::vector<int> sel;
  ExperimentOutcome oc;
};

void criterion7(const std::vector<Run>& runs, const ExperimentConfig& cfg, double seconds) {
  bool ok = true;
  std::ostringstream os;
  os.precision(4);
  for (const Run& r : runs) {
    const ExperimentOutcome& oc = r.oc;
    const bool converged = oc.exit_code == kExitOk && oc.results.size() == 3;
    bool good = converged;
    if (converged) {
      const SolveResult& last = oc.results.back();
      const double rel = std::abs(last.energy.total - oc.limit.c_upsilon) / oc.limit.c_upsilon;
      bool pen = true;
      for (std::size_t i = 1; i < oc.rows.size(); ++i) pen = pen && oc.rows[i].penalty_mass < oc.rows[i - 1].penalty_mass;
      const bool sup = last.diagnostics.outside_sup <= cfg.params().a_cut;
      good = sup && last.diagnostics.tail_mass < 0.02 && pen && rel < 0.05;
      os << selection_label(r.sel) << ": sup " << last.diagnostics.outside_sup << " tail " << last.diagnostics.tail_mass
         << " rel gap " << rel << (pen ? " pen-mono" : " pen-NOT-mono") << "; ";
    } else {
      os << selection_label(r.sel) << ": " << oc.message << "; ";
    }
    ok = ok && good;
  }
  double min_dist = INFINITY;
  for (std::size_t i = 0; i < runs.size(); ++i)
    for (std::size_t j = i + 1; j < runs.size(); ++j)
      if (!runs[i].oc.results.empty() && !runs[j].oc.results.empty())
        min_dist = std::min(min_dist, l2_distance(runs[i].oc.results.back().u, runs[j].oc.results.back().u));
  ok = ok && min_dist > 10.0 * cfg.tol;
  os << "min pairwise L2 distance " << min_dist << "; " << fmt("%.0f s", seconds);
  report(7, ok && seconds <= 1800.0, os.str());
}

void criterion8(const Run& a, const Run& b) {
  if (a.oc.results.empty() || b.oc.results.empty()) {
    report(8, false, "missing solutions");
    return;
  }
  double worst_field = 0.0, worst_energy = 0.0;
  for (std::size_t i = 0; i < std::min(a.oc.results.size(), b.oc.results.size()); ++i) {
    const ScalarField& ua = a.oc.results[i].u;
    const ScalarField mb = mirror_x(b.oc.results[i].u);
    worst_field = std::max(worst_field, l2_distance(ua, mb) / l2_norm(ua));
    const double ea = a.oc.results[i].energy.total, eb = b.oc.results[i].energy.total;
    worst_energy = std::max(worst_energy, std::abs(ea - eb) / std::abs(ea));
  }
  report(8, worst_field < 1e-6 && worst_energy < 1e-8,
         fmt("mirror L2 rel %.3e", worst_field) + fmt(", energy rel %.3e", worst_energy));
}

}  // namespace

int main() {
  const auto t_all = Clock::now();
  criterion1();
  criterion2();
  criterion3();
  criterion4();
  criterion5();

  Standard st;
  st.cfg = load_config(std::string(SPWELLS_SOURCE_DIR) + "/configs/two_well.json");
  const fs::path base = fs::temp_directory_path() / "spwells_acceptance";
  fs::remove_all(base);
  const auto t7 = Clock::now();
  st.first = run_selection(st.cfg, st.cfg.selections.front(), base / "a");
  std::vector<Run> runs;
  runs.push_back({{0}, st.first});
  for (std::vector<int> sel : {std::vector<int>{1}, std::vector<int>{0, 1}}) {
    ExperimentConfig c = st.cfg;
    c.neumann_levels = false;
    runs.push_back({sel, run_selection(c, sel, {})});
  }
  const double t7s = seconds_since(t7);

  criterion6(st);
  criterion7(runs, st.cfg, t7s);
  criterion8(runs[0], runs[1]);

  run_selection(st.cfg, st.cfg.selections.front(), base / "b");
  const std::string a = slurp(base / "a" / "diagnostics.csv"), b = slurp(base / "b" / "diagnostics.csv");
  report(9, !a.empty() && a == b,
         std::string("diagnostics.csv ") + (a == b ? "bit-identical" : "differs") + fmt(" (%.0f bytes)", double(a.size())));

  int failed = 0;
  for (const Line& l : lines) failed += l.pass ? 0 : 1;
  std::printf("%d/%zu criteria passed in %.0f s\n", int(lines.size()) - failed, lines.size(), seconds_since(t_all));
  return failed == 0 ? 0 : 1;
}
