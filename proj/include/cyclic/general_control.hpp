#pragma once

#include "cyclic/ode.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace cyclic {

using VectorField = std::function<Vector(const Vector&)>;
using JacobianField = std::function<Matrix(const Vector&)>;
using ScalarField = std::function<double(const Vector&)>;
// Hessian in x of F0 + gamma G0 + lambda^T (F + gamma G).
using HamiltonianHessian =
    std::function<Matrix(const Vector& x, const Vector& lambda, double gamma)>;

/// min  int_0^tf F0(x) + gamma G0(x) + (r/2) gamma^2 dt + Psi(x(tf))
/// s.t. x' = F(x) + gamma G(x),  x(0) = x0.
///
/// Jacobians, the Hamiltonian Hessian and all terminal-cost members are
/// optional. Missing Jacobians and Hessians fall back to central differences;
/// a missing Psi is identically zero.
struct ControlProblem {
  VectorField F, G;
  JacobianField DF, DG;
  ScalarField F0, G0;
  VectorField grad_F0, grad_G0;
  ScalarField Psi;
  VectorField grad_Psi;
  JacobianField hess_Psi;
  HamiltonianHessian hess_H;
  double r = 1.0;
  double t_f = 1.0;
  Vector x0;
  // Start of the continuation path used when plain shooting fails. At the
  // anchor the extremal must be the trivial one (lambda = 0, gamma = 0).
  std::optional<Vector> homotopy_anchor;
  double fd_step = 1e-6;

  Eigen::Index dim() const { return x0.size(); }

  Matrix jac_F(const Vector& x) const;
  Matrix jac_G(const Vector& x) const;
  double psi(const Vector& x) const;
  Vector psi_gradient(const Vector& x) const;
  Matrix psi_hessian(const Vector& x) const;
  Matrix hamiltonian_hessian(const Vector& x, const Vector& lambda,
                             double gamma) const;
};

/// Checks r > 0, t_f > 0, dimensions, and that every supplied derivative
/// matches central differences at x0 to 1e-5. Throws InvalidInput.
void validate_problem(const ControlProblem& p);

struct SolveDiagnostics {
  std::string method;
  bool converged = false;
  double residual = 0.0;
  int iterations = 0;
  int homotopy_stages = 0;
  double terminal_gamma_error = 0.0;  // |gamma(tf) - terminal formula|
  double max_stationarity = 0.0;      // sup |r gamma + G0 + lambda^T G|
  // sup |x^T Q x - r gamma^2 - C|, filled by quasi-linear solves only.
  std::optional<double> closed_loop_violation;
  IntegrationStats stats;
};

struct ControlSolution {
  std::vector<double> times;
  Matrix x;  // one row per time
  std::optional<Matrix> lambda;
  Vector gamma;
  double objective_value = 0.0;
  SolveDiagnostics diagnostics;

  std::function<Vector(double)> x_at;
  std::function<Vector(double)> lambda_at;  // empty when lambda is absent
  std::function<double(double)> gamma_at;
  std::function<double(double)> gamma_dot_at;

  bool has_lambda() const { return lambda.has_value(); }
};

enum class CertificateMethod { cholesky, riccati };
enum class CertificateVerdict { sufficient, inconclusive, unbounded };

const char* to_string(CertificateMethod m);
const char* to_string(CertificateVerdict v);

struct CertificateReport {
  CertificateMethod method = CertificateMethod::cholesky;
  std::vector<double> times;
  // r - |H^T lambda|^2 for cholesky, max_ij |S_ij| for riccati.
  std::vector<double> margin_trace;
  CertificateVerdict verdict = CertificateVerdict::inconclusive;
  double min_margin = 0.0;  // cholesky
  double max_abs = 0.0;     // riccati
  std::optional<double> blowup_time;
  double max_asymmetry = 0.0;  // riccati, sup |S - S^T|
};

double hamiltonian(const ControlProblem& p, const Vector& x, double gamma,
                   const Vector& lambda);

/// gamma* = -(lambda^T G(x) + G0(x)) / r.
double optimal_gamma(const ControlProblem& p, const Vector& x,
                     const Vector& lambda);

/// (D_x F) G - (D_x G) F.
Vector lie_bracket(const ControlProblem& p, const Vector& x);

/// Shoots on lambda(0) for the state/co-state system with gamma eliminated.
/// Falls back to continuation in x0 from the homotopy anchor when the plain
/// solve fails.
ControlSolution solve_el(const ControlProblem& p, const SolverConfig& cfg = {});

/// Co-state free system x' = F + gamma G,
/// gamma' = ((grad F0)^T G - (grad G0)^T F) / r, shooting on gamma(0).
/// Throws BracketNonvanishing unless [F, G] vanishes (< 1e-8) at 20 points
/// along the initial iterate.
ControlSolution solve_reduced(const ControlProblem& p,
                              const SolverConfig& cfg = {});

/// Integrates the co-state backward from lambda(tf) = grad Psi along the
/// stored x and gamma, filling sol.lambda and sol.lambda_at.
void reconstruct_costate(const ControlProblem& p, ControlSolution& sol,
                         const SolverConfig& cfg = {});

/// Backward sweep of the matrix Riccati equation along sol.
CertificateReport riccati_certificate(const ControlProblem& p,
                                      const ControlSolution& sol,
                                      const SolverConfig& cfg = {},
                                      double bound = 1e6);

/// Running cost by the trapezoid rule on sol.times plus Psi(x(tf)).
double objective_value(const ControlProblem& p, const ControlSolution& sol);

}  // namespace cyclic
