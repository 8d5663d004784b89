#pragma once

#include "cyclic/circulant_game.hpp"
#include "cyclic/general_control.hpp"

#include <functional>
#include <vector>

namespace cyclic {

// How build_quasilinear treats an initial population whose sum is off by more
// than 1e-6.
enum class SimplexRepair {
  none,     // reject
  rescale,  // u0 / sum(u0)
  project,  // orthogonal projection onto sum(u) = 1
};

const char* to_string(SimplexRepair r);

/// Control of x = u - u* under x' = (J + gamma H) x with running cost
/// x^T Q x / 2 + r gamma^2 / 2 and no terminal cost.
struct QuasiLinearProblem {
  GameSpec game;
  LinearizedPair pair;
  Matrix Q;
  Matrix K;  // Q H
  double r = 0.0;
  double t_f = 0.0;
  Vector u0;              // after any repair
  Vector x0;
  double input_sum = 1.0;  // sum of the u0 supplied by the caller
  SimplexRepair repair_applied = SimplexRepair::none;
};

QuasiLinearProblem build_quasilinear(const GameSpec& game, double r, double t_f,
                                     const Vector& u0,
                                     SimplexRepair repair = SimplexRepair::none);

ControlProblem to_control_problem(const QuasiLinearProblem& p);

/// gamma'(0) = x0^T H x0 / r.
double gamma_slope_at_zero(const QuasiLinearProblem& p);

/// Reduced solve plus co-state reconstruction. Records the closed-loop
/// violation in the diagnostics.
ControlSolution solve_quasilinear(const QuasiLinearProblem& p,
                                  const SolverConfig& cfg = {});

struct ClosedLoopReport {
  double C = 0.0;
  double max_violation = 0.0;
};

/// C = |x(tf)|^2 and sup_t |x^T Q x - r gamma^2 - C| over the solution grid.
ClosedLoopReport closed_loop_constant(const QuasiLinearProblem& p,
                                      const ControlSolution& sol);

/// x^T (H^T H + H H + H) x + (n / N^2) |x|^2. Identically zero.
double h_algebra_identity_check(const GameSpec& game, const Vector& x);

struct GammaOdeProblem {
  int n = 0;
  int N = 0;
  double r = 0.0;
  double C = 0.0;
  double t_f = 0.0;
  double gamma_tf = 0.0;
  double gamma_dot_0 = 0.0;
};

GammaOdeProblem make_gamma_ode_problem(const QuasiLinearProblem& p, double C);

struct ScalarTrajectory {
  std::vector<double> times;
  Vector value;
  Vector derivative;
  bool converged = false;
  double residual = 0.0;
  int iterations = 0;
  std::function<double(double)> value_at;
  std::function<double(double)> derivative_at;
};

/// r g'' + r g g' + (n / N^2) g (r g^2 + C) = 0 with g(tf) = gamma_tf and
/// g'(0) = gamma_dot_0, shooting on g(0).
ScalarTrajectory solve_gamma_ode(const GammaOdeProblem& p,
                                 const SolverConfig& cfg = {});

struct GammaOdeClosure {
  double C = 0.0;
  int iterations = 0;
  bool converged = false;
  ScalarTrajectory gamma;
};

/// Finds C without a prior quasi-linear solve: starting from C = 0, solve the
/// gamma ODE, replay gamma through x' = (J + gamma H) x, update C with
/// relaxation 0.5 until the change drops below 1e-6 (at most 30 rounds).
/// Not converged when the final gamma fails to decrease monotonically.
GammaOdeClosure close_gamma_ode(const QuasiLinearProblem& p,
                                const SolverConfig& cfg = {});

/// z'' + z z' = 0 (the r factor cancels) with z(tf) = 0, z'(0) = gamma_dot_0.
ScalarTrajectory solve_limit_ode(double gamma_dot_0, double t_f, double r,
                                 const SolverConfig& cfg = {});

/// Decreasing solution of z'' + z z' = 0 with z(tf) = 0 and z'(tf) = -kappa:
/// z(t) = sqrt(2 kappa) tan(sqrt(kappa / 2) (tf - t)).
/// Requires sqrt(kappa / 2) tf < pi / 2 so the branch stays finite.
class LimitClosedForm {
 public:
  LimitClosedForm(double kappa, double t_f);

  double kappa() const { return kappa_; }
  double t_f() const { return t_f_; }
  double zeta(double t) const;
  double zeta_dot(double t) const;

 private:
  void check(double t) const;
  double kappa_, t_f_, w_;
};

LimitClosedForm closed_form_limit(double kappa, double t_f);

/// The kappa for which the closed form has zeta'(0) = gamma_dot_0 < 0.
double kappa_from_initial_slope(double gamma_dot_0, double t_f);

struct KappaEstimate {
  double kappa = 0.0;
  bool degenerate = false;  // x0 = 0, the closed form collapses to zero
};

/// kappa = -x0^T H x0.
KappaEstimate limit_kappa_heuristic(const QuasiLinearProblem& p);

/// margin(t) = r - |H^T lambda(t)|^2; sufficient iff the minimum is positive.
CertificateReport cholesky_sufficiency(const QuasiLinearProblem& p,
                                       const ControlSolution& sol);

}  // namespace cyclic
