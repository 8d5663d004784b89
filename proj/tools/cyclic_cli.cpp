// Command-line front end for the cyclic game toolkit.
//
// Exit codes: 0 success, 2 usage, 3 integration failure, 4 non-convergence.

#include "cyclic/experiments.hpp"
#include "cyclic/io.hpp"
#include "cyclic/quasilinear.hpp"
#include "cyclic/replicator.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdlib>
#include <iostream>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace cyclic;

namespace {

constexpr int kOk = 0, kUsage = 2, kIntegration = 3, kNonConvergence = 4;

struct UsageError : Error {
  using Error::Error;
};

Vector parse_vector(const std::string& s, const char* flag) {
  std::vector<double> v;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError(std::string(flag) + ": cannot parse '" + item + "'");
    }
  }
  if (v.empty()) throw UsageError(std::string(flag) + ": empty list");
  return Eigen::Map<Vector>(v.data(), Eigen::Index(v.size()));
}

int n_from_N(int N) {
  if (N < 3 || N % 2 == 0) throw UsageError("--N must be odd and >= 3");
  return (N - 1) / 2;
}

struct Common {
  double rtol = SolverConfig{}.rel_tol;
  double atol = SolverConfig{}.abs_tol;
  int points = SolverConfig{}.output_points;

  SolverConfig config() const {
    SolverConfig c;
    c.rel_tol = rtol;
    c.abs_tol = atol;
    c.output_points = points;
    c.validate();
    return c;
  }
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--rtol", c.rtol, "relative integration tolerance");
  cmd->add_option("--atol", c.atol, "absolute integration tolerance");
  cmd->add_option("--points", c.points, "output grid size");
}

void emit(const std::string& out, const CsvTable& table, const Json& summary) {
  if (out.empty()) {
    std::cout << summary.dump(2) << "\n";
    return;
  }
  write_atomic(out + ".csv", table.str());
  write_atomic(out + ".json", summary.dump(2) + "\n");
}

Json num(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

// game ---------------------------------------------------------------------

struct GameArgs {
  int n = 0;
  std::optional<double> gamma;
  bool allow_reversed = false;
};

int run_game(const GameArgs& a) {
  if (a.n < 1) throw UsageError("--n must be >= 1");
  const GameSpec g = build_game(a.n);
  Json j{{"game", to_json(g)}};
  const double gamma = a.gamma.value_or(0.0);
  if (a.gamma) j["A"] = to_json(payoff_matrix(g, gamma, a.allow_reversed));
  j["gamma"] = gamma;
  j["stability"] = to_json(stability_report(g, gamma));
  std::cout << j.dump(2) << "\n";
  return kOk;
}

// simulate -----------------------------------------------------------------

struct SimArgs {
  int N = 0;
  double gamma = 0.0;
  std::string u0;
  std::optional<std::uint64_t> seed;
  double tf = 0.0;
  std::string out;
  Common common;
};

Vector random_interior(int N, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::gamma_distribution<double> d(1.0, 1.0);
  Vector u(N);
  for (int i = 0; i < N; ++i) u[i] = d(rng);
  return u / u.sum();
}

int run_simulate(const SimArgs& a) {
  const GameSpec g = build_game(n_from_N(a.N));
  if (!(a.tf > 0)) throw UsageError("--tf must be positive");
  if (a.u0.empty() == !a.seed.has_value())
    throw UsageError("give exactly one of --u0 and --seed");
  const Vector u0 = a.seed ? random_interior(a.N, *a.seed) : parse_vector(a.u0, "--u0");
  try {
    validate_simplex_state(u0, a.N);
  } catch (const InvalidInput& e) {
    throw UsageError(std::string("--u0: ") + e.what());
  }
  const SolverConfig cfg = a.common.config();
  Json side{{"command", "simulate"}, {"N", a.N},        {"gamma", a.gamma},
            {"t_f", a.tf},           {"u0", to_json(u0)}, {"rtol", cfg.rel_tol},
            {"atol", cfg.abs_tol}};
  if (a.seed) side["seed"] = *a.seed;

  int code = kOk;
  Trajectory tr;
  try {
    tr = integrate(g, u0, GammaSchedule(a.gamma), 0.0, a.tf, cfg);
  } catch (const IntegrationFailure& e) {
    std::cerr << "integration failure at t=" << e.t_fail() << ": " << e.what() << "\n";
    tr.N = a.N;
    const DenseSolution& p = e.partial();
    for (double t : linspace(p.t_min(), p.t_max(), cfg.output_points)) {
      tr.times.push_back(t);
      tr.states.push_back(p(t));
      tr.gamma.push_back(a.gamma);
    }
    side["failure"] = e.what();
    code = kIntegration;
  }
  side["max_renormalization"] = tr.max_renormalization;
  side["accepted_steps"] = tr.accepted_steps;
  const CsvTable table = trajectory_table(tr);
  if (a.out.empty()) {
    std::cout << table.str();
  } else {
    write_atomic(a.out + ".csv", table.str());
    write_atomic(a.out + ".json", side.dump(2) + "\n");
  }
  return code;
}

// solve --------------------------------------------------------------------

struct SolveArgs {
  std::string mode;
  int N = 0;
  double r = 0.2;
  double tf = 6.0;
  std::string u0;
  std::string certify;
  bool renormalize = false;
  std::string repair;
  std::string c_source = "solve";
  std::string out;
  Common common;
};

QuasiLinearProblem problem_from(const SolveArgs& a) {
  const GameSpec g = build_game(n_from_N(a.N));
  if (a.u0.empty()) throw UsageError("--u0 is required");
  const Vector u0 = parse_vector(a.u0, "--u0");
  if (u0.size() != a.N) throw UsageError("--u0 must have N entries");
  SimplexRepair repair = SimplexRepair::none;
  if (a.repair == "project")
    repair = SimplexRepair::project;
  else if (a.repair == "rescale" || a.renormalize)
    repair = SimplexRepair::rescale;
  else if (!a.repair.empty())
    throw UsageError("--repair must be rescale or project");
  const double dev = std::abs(u0.sum() - 1.0);
  if (repair == SimplexRepair::none && dev > 1e-6 && dev <= 1e-3) {
    // Values quoted to four or five digits; rescale and say so.
    std::cerr << "note: --u0 sums to " << format_double(u0.sum())
              << "; rescaled to 1\n";
    repair = SimplexRepair::rescale;
  }
  try {
    return build_quasilinear(g, a.r, a.tf, u0, repair);
  } catch (const InvalidInput& e) {
    throw UsageError(std::string(e.what()) + " (see --renormalize / --repair)");
  }
}

Json problem_json(const SolveArgs& a, const QuasiLinearProblem& p,
                  const SolverConfig& cfg) {
  return Json{{"command", "solve"},
              {"mode", a.mode},
              {"N", a.N},
              {"r", a.r},
              {"t_f", a.tf},
              {"u0_input", a.u0},
              {"u0", to_json(p.u0)},
              {"simplex_repair", to_string(p.repair_applied)},
              {"rtol", cfg.rel_tol},
              {"atol", cfg.abs_tol}};
}

int run_solve(const SolveArgs& a) {
  const SolverConfig cfg = a.common.config();
  const QuasiLinearProblem p = problem_from(a);
  if (!a.certify.empty() && a.certify != "cholesky" && a.certify != "riccati")
    throw UsageError("--certify must be cholesky or riccati");
  Json summary{{"parameters", problem_json(a, p, cfg)}};
  bool converged = true;

  if (a.mode == "quasilinear" || a.mode == "nonlinear") {
    const bool ql = a.mode == "quasilinear";
    if (!ql && a.certify == "cholesky")
      throw UsageError("the Cholesky test applies to --mode quasilinear only");
    const ControlProblem cp = ql ? to_control_problem(p)
                                 : nonlinear_game_problem(p.game, p.r, p.t_f, p.u0);
    const ControlSolution sol = ql ? solve_quasilinear(p, cfg) : solve_el(cp, cfg);
    converged = sol.diagnostics.converged;
    summary["objective"] = num(sol.objective_value);
    summary["gamma0"] = num(sol.gamma[0]);
    summary["gamma_tf"] = num(sol.gamma[sol.gamma.size() - 1]);
    if (ql) {
      const ClosedLoopReport cl = closed_loop_constant(p, sol);
      summary["C"] = num(cl.C);
      summary["closed_loop_max_violation"] = num(cl.max_violation);
      summary["kappa"] = num(limit_kappa_heuristic(p).kappa);
    }
    summary["diagnostics"] = to_json(sol.diagnostics);
    if (a.certify == "cholesky") {
      summary["certificate"] = to_json(cholesky_sufficiency(p, sol));
    } else if (a.certify == "riccati") {
      summary["certificate"] = to_json(riccati_certificate(cp, sol, cfg));
    }
    emit(a.out, solution_table(sol), summary);
  } else if (a.mode == "gamma-ode") {
    if (!a.certify.empty()) throw UsageError("--certify needs a co-state (quasilinear or nonlinear)");
    double C = 0.0;
    if (a.c_source == "solve") {
      const ControlSolution sol = solve_quasilinear(p, cfg);
      converged = sol.diagnostics.converged;
      C = closed_loop_constant(p, sol).C;
    } else if (a.c_source == "fixed-point") {
      const GammaOdeClosure cl = close_gamma_ode(p, cfg);
      converged = cl.converged;
      C = cl.C;
      summary["fixed_point_iterations"] = cl.iterations;
    } else {
      throw UsageError("--C-source must be solve or fixed-point");
    }
    const ScalarTrajectory g = solve_gamma_ode(make_gamma_ode_problem(p, C), cfg);
    converged = converged && g.converged;
    summary["C"] = num(C);
    summary["C_source"] = a.c_source;
    summary["gamma0"] = num(g.value[0]);
    summary["gamma_dot_0"] = num(gamma_slope_at_zero(p));
    summary["shooting"] = {{"converged", g.converged},
                           {"residual", num(g.residual)},
                           {"iterations", g.iterations}};
    emit(a.out, scalar_table(g, "gamma"), summary);
  } else if (a.mode == "limit") {
    if (!a.certify.empty()) throw UsageError("--certify needs a co-state (quasilinear or nonlinear)");
    const double slope = gamma_slope_at_zero(p);
    const ScalarTrajectory z = solve_limit_ode(slope, p.t_f, p.r, cfg);
    converged = z.converged;
    const KappaEstimate k = limit_kappa_heuristic(p);
    const double kappa = -slope;
    summary["kappa_heuristic_r1"] = num(k.kappa);
    summary["kappa"] = num(kappa);
    summary["degenerate"] = k.degenerate;
    summary["zeta0"] = num(z.value[0]);
    std::optional<LimitClosedForm> cf;
    if (!k.degenerate) {
      try {
        cf = closed_form_limit(kappa, p.t_f);
      } catch (const DomainError& e) {
        summary["closed_form_error"] = e.what();
      }
    }
    CsvTable t({"t", "zeta", "zeta_dot", "zeta_closed_form", "zeta_dot_closed_form"});
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t i = 0; i < z.times.size(); ++i) {
      const double ti = z.times[i];
      t.add_row({ti, z.value[Eigen::Index(i)], z.derivative[Eigen::Index(i)],
                 cf ? cf->zeta(ti) : (k.degenerate ? 0.0 : nan),
                 cf ? cf->zeta_dot(ti) : (k.degenerate ? 0.0 : nan)});
    }
    summary["shooting"] = {{"converged", z.converged},
                           {"residual", num(z.residual)},
                           {"iterations", z.iterations}};
    emit(a.out, t, summary);
  } else {
    throw UsageError("--mode must be nonlinear, quasilinear, gamma-ode or limit");
  }
  if (!converged) {
    std::cerr << "solver did not converge; best iterate written\n";
    return kNonConvergence;
  }
  return kOk;
}

// reproduce ----------------------------------------------------------------

struct ReproArgs {
  std::string which;
  std::string out_dir;
  Common common;
};

int run_reproduce(const ReproArgs& a) {
  const CasePreset preset = [&] {
    try {
      return case_preset(a.which);
    } catch (const InvalidInput& e) {
      throw UsageError(e.what());
    }
  }();
  const std::string dir = a.out_dir.empty() ? "reproduce_" + a.which : a.out_dir;
  const CaseResult res = run_case(preset, a.common.config());
  write_case_artifacts(res, dir);
  std::cout << case_report(res).dump(2) << "\n";
  if (!res.all_converged) {
    std::cerr << "some sub-solves did not converge; artifacts kept in " << dir << "\n";
    return kNonConvergence;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Complete odd circulant games: simulation and optimal control"};
  app.require_subcommand(1);

  Common defaults;
  if (const char* env = std::getenv("CYCLIC_RTOL")) {
    try {
      defaults.rtol = std::stod(env);
    } catch (const std::exception&) {
      std::cerr << "CYCLIC_RTOL is not a number\n";
      return kUsage;
    }
  }

  GameArgs ga;
  auto* game = app.add_subcommand("game", "build a game and report its spectrum");
  game->add_option("--n", ga.n, "count parameter, N = 2n + 1")->required();
  game->add_option("--gamma", ga.gamma, "control value");
  game->add_flag("--allow-reversed", ga.allow_reversed, "permit gamma <= -1");

  SimArgs sa;
  sa.common = defaults;
  auto* sim = app.add_subcommand("simulate", "integrate the replicator dynamics");
  sim->add_option("--N", sa.N, "number of strategies")->required();
  sim->add_option("--gamma", sa.gamma, "constant control")->required();
  sim->add_option("--u0", sa.u0, "initial shares, comma separated");
  sim->add_option("--seed", sa.seed, "random interior start");
  sim->add_option("--tf", sa.tf, "horizon")->required();
  sim->add_option("--out", sa.out, "output prefix for .csv and .json");
  add_common(sim, sa.common);

  SolveArgs so;
  so.common = defaults;
  auto* solve = app.add_subcommand("solve", "solve the optimal control problem");
  solve->add_option("--mode", so.mode, "nonlinear|quasilinear|gamma-ode|limit")->required();
  solve->add_option("--N", so.N, "number of strategies")->required();
  solve->add_option("--r", so.r, "control weight");
  solve->add_option("--tf", so.tf, "horizon");
  solve->add_option("--u0", so.u0, "initial shares, comma separated")->required();
  solve->add_option("--certify", so.certify, "cholesky|riccati");
  solve->add_flag("--renormalize", so.renormalize, "rescale u0 to sum 1");
  solve->add_option("--repair", so.repair, "rescale|project an off-simplex u0");
  solve->add_option("--C-source", so.c_source, "solve|fixed-point (gamma-ode mode)");
  solve->add_option("--out", so.out, "output prefix for .csv and .json");
  add_common(solve, so.common);

  ReproArgs ra;
  ra.common = defaults;
  auto* repro = app.add_subcommand("reproduce", "run a named example end to end");
  repro->add_option("case", ra.which, "n3|n5|n7|n9|riccati")->required();
  repro->add_option("--out-dir", ra.out_dir, "artifact directory");
  add_common(repro, ra.common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*game) return run_game(ga);
    if (*sim) return run_simulate(sa);
    if (*solve) return run_solve(so);
    if (*repro) return run_reproduce(ra);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const InvalidGame& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const InvalidInput& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const PreconditionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const IntegrationFailure& e) {
    std::cerr << "integration failure: " << e.what() << "\n";
    return kIntegration;
  } catch (const Error& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return kNonConvergence;
  }
  return kUsage;
}
