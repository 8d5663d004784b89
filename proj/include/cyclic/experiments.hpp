#pragma once

#include "cyclic/io.hpp"
#include "cyclic/quasilinear.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace cyclic {

struct CasePreset {
  std::string name;
  int n = 1;
  double r = 0.2;
  double t_f = 6.0;
  Vector u0;  // as supplied, before any simplex repair
  SimplexRepair repair = SimplexRepair::none;
  std::string note;
};

/// u* with +delta, -delta alternating over the indices, skipping the third
/// index (zero-based 2), which stays at 1/N.
Vector alternating_preset(int N, double delta = 0.05);

/// One of n3, n5, n7, n9, riccati. Throws InvalidInput for other names.
CasePreset case_preset(const std::string& name);
std::vector<std::string> case_names();

struct CaseResult {
  CasePreset preset;
  QuasiLinearProblem problem;
  ControlSolution quasilinear;     // reduced solve with rebuilt co-state
  ControlSolution el_quasilinear;  // full state/co-state shooting
  std::optional<ControlSolution> nonlinear;
  std::string nonlinear_error;
  ScalarTrajectory gamma_ode;  // C from the quasi-linear solve
  GammaOdeClosure closure;     // C by fixed-point iteration
  ScalarTrajectory limit_ode;
  double C = 0.0;
  ClosedLoopReport closed_loop;
  KappaEstimate kappa_heuristic;  // -x0^T H x0 (r = 1 convention)
  double kappa_folded = 0.0;      // -gamma'(0), r folded in
  std::optional<LimitClosedForm> closed_form;  // at kappa_folded
  std::string closed_form_error;

  double gap_el_vs_gamma_ode = 0.0;
  double gap_el_vs_reduced = 0.0;
  double gap_reduced_vs_gamma_ode = 0.0;
  double gap_closure_vs_gamma_ode = 0.0;
  double gamma0_quasilinear = 0.0;
  double gamma0_nonlinear = 0.0;
  double nonlinear_rel_gap = 0.0;
  double limit_error = 0.0;  // closed form vs gamma ODE, sup norm
  double limit_ode_vs_closed_form = 0.0;
  double max_gamma_dot = 0.0;  // over the quasi-linear grid

  CertificateReport cholesky;
  std::optional<CertificateReport> riccati;
  std::optional<CertificateReport> riccati_nonlinear;

  bool all_converged = true;
};

/// Runs every solver on the preset and cross-checks them.
CaseResult run_case(const CasePreset& preset, const SolverConfig& cfg = {});

Json case_report(const CaseResult& res);

/// Per-solver CSVs, a comparison CSV and report.json under dir. Each CSV has
/// a JSON sidecar with the case parameters.
void write_case_artifacts(const CaseResult& res, const std::filesystem::path& dir);

}  // namespace cyclic
