#include "cyclic/experiments.hpp"

#include "cyclic/replicator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cyclic {

Vector alternating_preset(int N, double delta) {
  Vector u = Vector::Constant(N, 1.0 / N);
  double sign = 1.0;
  for (int i = 0; i < N; ++i) {
    if (i == 2) continue;
    u[i] += sign * delta;
    sign = -sign;
  }
  return u;
}

std::vector<std::string> case_names() { return {"n3", "n5", "n7", "n9", "riccati"}; }

CasePreset case_preset(const std::string& name) {
  CasePreset p;
  p.name = name;
  if (name == "n3") {
    p.n = 1;
    // 0.2333.., 0.3333.., 0.4333.. read as the exact fractions.
    p.u0 = (Vector(3) << 7.0 / 30, 1.0 / 3, 13.0 / 30).finished();
  } else if (name == "n5") {
    p.n = 2;
    p.u0 = (Vector(5) << 0.1, 0.3, 0.0, 0.1, 0.3).finished();
    p.repair = SimplexRepair::project;
    p.note = "u0 sums to 0.8; projected orthogonally onto the simplex";
  } else if (name == "n7" || name == "n9") {
    p.n = name == "n7" ? 3 : 4;
    p.u0 = alternating_preset(2 * p.n + 1);
    p.note = "+/-0.05 alternation from u*, third strategy kept at 1/N";
  } else if (name == "riccati") {
    p.n = 1;
    p.t_f = 15.0;
    p.u0 = (Vector(3) << 0.8, 0.1, 0.1).finished();
  } else {
    throw InvalidInput("unknown case '" + name + "' (expected n3, n5, n7, n9 or riccati)");
  }
  return p;
}

namespace {

double sup_gap(const Vector& a, const Vector& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

}  // namespace

CaseResult run_case(const CasePreset& preset, const SolverConfig& cfg) {
  CaseResult res;
  res.preset = preset;
  const GameSpec game = build_game(preset.n);
  res.problem = build_quasilinear(game, preset.r, preset.t_f, preset.u0, preset.repair);
  const QuasiLinearProblem& p = res.problem;
  const ControlProblem cp = to_control_problem(p);

  res.quasilinear = solve_quasilinear(p, cfg);
  res.el_quasilinear = solve_el(cp, cfg);
  res.closed_loop = closed_loop_constant(p, res.quasilinear);
  res.C = res.closed_loop.C;
  res.gamma_ode = solve_gamma_ode(make_gamma_ode_problem(p, res.C), cfg);
  res.closure = close_gamma_ode(p, cfg);
  res.all_converged = res.quasilinear.diagnostics.converged &&
                      res.el_quasilinear.diagnostics.converged &&
                      res.gamma_ode.converged && res.closure.converged;

  res.gap_el_vs_gamma_ode = sup_gap(res.el_quasilinear.gamma, res.gamma_ode.value);
  res.gap_el_vs_reduced = sup_gap(res.el_quasilinear.gamma, res.quasilinear.gamma);
  res.gap_reduced_vs_gamma_ode = sup_gap(res.quasilinear.gamma, res.gamma_ode.value);
  res.gap_closure_vs_gamma_ode = sup_gap(res.closure.gamma.value, res.gamma_ode.value);
  res.gamma0_quasilinear = res.el_quasilinear.gamma[0];
  res.max_gamma_dot = -std::numeric_limits<double>::infinity();
  for (double t : res.quasilinear.times)
    res.max_gamma_dot = std::max(res.max_gamma_dot, res.quasilinear.gamma_dot_at(t));

  // Limit approximation.
  const double slope = gamma_slope_at_zero(p);
  res.kappa_heuristic = limit_kappa_heuristic(p);
  res.kappa_folded = -slope;
  res.limit_ode = solve_limit_ode(slope, p.t_f, p.r, cfg);
  res.all_converged = res.all_converged && res.limit_ode.converged;
  if (!res.kappa_heuristic.degenerate) {
    try {
      res.closed_form = closed_form_limit(res.kappa_folded, p.t_f);
      double e = 0.0;
      for (std::size_t k = 0; k < res.gamma_ode.times.size(); ++k)
        e = std::max(e, std::abs(res.closed_form->zeta(res.gamma_ode.times[k]) -
                                 res.gamma_ode.value[Eigen::Index(k)]));
      res.limit_error = e;
    } catch (const DomainError& e) {
      res.closed_form_error = e.what();
      res.limit_error = std::numeric_limits<double>::quiet_NaN();
    }
    const LimitClosedForm exact(kappa_from_initial_slope(slope, p.t_f), p.t_f);
    double e = 0.0;
    for (std::size_t k = 0; k < res.limit_ode.times.size(); ++k)
      e = std::max(e, std::abs(exact.zeta(res.limit_ode.times[k]) -
                               res.limit_ode.value[Eigen::Index(k)]));
    res.limit_ode_vs_closed_form = e;
  }

  res.cholesky = cholesky_sufficiency(p, res.quasilinear);
  if (preset.name == "riccati")
    res.riccati = riccati_certificate(cp, res.quasilinear, cfg);

  // Full replicator control problem on the repaired u0.
  try {
    const ControlProblem np = nonlinear_game_problem(game, p.r, p.t_f, p.u0);
    ControlSolution nl = solve_el(np, cfg);
    res.gamma0_nonlinear = nl.gamma[0];
    res.nonlinear_rel_gap = std::abs(res.gamma0_nonlinear - res.gamma0_quasilinear) /
                            std::abs(res.gamma0_quasilinear);
    if (!nl.diagnostics.converged) {
      res.all_converged = false;
      res.nonlinear_error = "shooting did not converge";
    } else if (preset.name == "riccati") {
      res.riccati_nonlinear = riccati_certificate(np, nl, cfg);
    }
    res.nonlinear = std::move(nl);
  } catch (const Error& e) {
    res.all_converged = false;
    res.nonlinear_error = e.what();
    res.nonlinear_rel_gap = std::numeric_limits<double>::quiet_NaN();
  }
  return res;
}

Json case_report(const CaseResult& res) {
  const CasePreset& c = res.preset;
  const QuasiLinearProblem& p = res.problem;
  Json params{{"case", c.name},
              {"N", p.game.N},
              {"r", c.r},
              {"t_f", c.t_f},
              {"u0_input", to_json(c.u0)},
              {"u0", to_json(p.u0)},
              {"simplex_repair", to_string(p.repair_applied)},
              {"input_sum", p.input_sum}};
  if (!c.note.empty()) params["note"] = c.note;

  auto num = [](double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); };
  Json rep;
  rep["parameters"] = params;
  rep["converged"] = res.all_converged;
  rep["gamma0"] = {{"quasilinear_el", num(res.gamma0_quasilinear)},
                   {"reduced", num(res.quasilinear.gamma[0])},
                   {"gamma_ode", num(res.gamma_ode.value[0])},
                   {"nonlinear_el", res.nonlinear ? num(res.gamma0_nonlinear) : Json(nullptr)}};
  rep["C"] = num(res.C);
  rep["C_fixed_point"] = {{"C", num(res.closure.C)},
                          {"iterations", res.closure.iterations},
                          {"converged", res.closure.converged}};
  rep["kappa"] = {{"heuristic_r1", num(res.kappa_heuristic.kappa)},
                  {"folded", num(res.kappa_folded)},
                  {"degenerate", res.kappa_heuristic.degenerate}};
  rep["gaps"] = {{"el_vs_gamma_ode", num(res.gap_el_vs_gamma_ode)},
                 {"el_vs_reduced", num(res.gap_el_vs_reduced)},
                 {"reduced_vs_gamma_ode", num(res.gap_reduced_vs_gamma_ode)},
                 {"fixed_point_vs_gamma_ode", num(res.gap_closure_vs_gamma_ode)},
                 {"nonlinear_gamma0_relative", num(res.nonlinear_rel_gap)},
                 {"limit_closed_form_vs_gamma_ode", num(res.limit_error)},
                 {"limit_ode_vs_closed_form", num(res.limit_ode_vs_closed_form)}};
  if (!res.closed_form_error.empty()) rep["closed_form_error"] = res.closed_form_error;
  rep["closed_loop_max_violation"] = num(res.closed_loop.max_violation);
  rep["max_gamma_dot"] = num(res.max_gamma_dot);
  rep["objective"] = {{"quasilinear", num(res.quasilinear.objective_value)},
                      {"nonlinear", res.nonlinear ? num(res.nonlinear->objective_value)
                                                  : Json(nullptr)}};
  Json certs{{"cholesky", to_json(res.cholesky)}};
  if (res.riccati) certs["riccati"] = to_json(*res.riccati);
  if (res.riccati_nonlinear) certs["riccati_nonlinear"] = to_json(*res.riccati_nonlinear);
  rep["certificates"] = certs;
  rep["solvers"] = {{"reduced", to_json(res.quasilinear.diagnostics)},
                    {"quasilinear_el", to_json(res.el_quasilinear.diagnostics)}};
  if (res.nonlinear) rep["solvers"]["nonlinear_el"] = to_json(res.nonlinear->diagnostics);
  if (!res.nonlinear_error.empty()) rep["nonlinear_error"] = res.nonlinear_error;
  return rep;
}

void write_case_artifacts(const CaseResult& res, const std::filesystem::path& dir) {
  const Json report = case_report(res);
  auto emit = [&](const std::string& stem, const CsvTable& t, const std::string& what) {
    write_atomic(dir / (stem + ".csv"), t.str());
    Json side{{"file", stem + ".csv"}, {"content", what}, {"parameters", report["parameters"]}};
    write_atomic(dir / (stem + ".json"), side.dump(2) + "\n");
  };
  emit("quasilinear_reduced", solution_table(res.quasilinear),
       "quasi-linear reduced solve with reconstructed co-state");
  emit("quasilinear_el", solution_table(res.el_quasilinear),
       "quasi-linear state/co-state shooting");
  if (res.nonlinear)
    emit("nonlinear_el", solution_table(*res.nonlinear), "replicator state/co-state shooting");
  emit("gamma_ode", scalar_table(res.gamma_ode, "gamma"), "second-order gamma ODE");
  emit("limit_ode", scalar_table(res.limit_ode, "zeta"), "limiting zeta ODE");
  emit("cholesky", certificate_table(res.cholesky), "Cholesky margin r - |H^T lambda|^2");
  if (res.riccati) emit("riccati", certificate_table(*res.riccati), "Riccati sweep max |S|");
  if (res.riccati_nonlinear)
    emit("riccati_nonlinear", certificate_table(*res.riccati_nonlinear),
         "Riccati sweep max |S| along the replicator extremal");

  std::vector<std::string> h{"t", "gamma_reduced", "gamma_el", "gamma_ode", "zeta_limit_ode",
                             "zeta_closed_form", "gamma_nonlinear"};
  CsvTable cmp(h);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t k = 0; k < res.quasilinear.times.size(); ++k) {
    const Eigen::Index i = Eigen::Index(k);
    const double t = res.quasilinear.times[k];
    cmp.add_row({t, res.quasilinear.gamma[i], res.el_quasilinear.gamma[i],
                 res.gamma_ode.value[i], res.limit_ode.value[i],
                 res.closed_form ? res.closed_form->zeta(t) : nan,
                 res.nonlinear ? res.nonlinear->gamma[i] : nan});
  }
  emit("comparison", cmp, "gamma from every solver on a shared grid");
  write_atomic(dir / "report.json", report.dump(2) + "\n");
}

}  // namespace cyclic
