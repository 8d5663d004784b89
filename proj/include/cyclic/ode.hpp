#pragma once

#include "cyclic/types.hpp"

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace cyclic {

struct SolverConfig {
  double rel_tol = 1e-8;
  double abs_tol = 1e-10;
  std::size_t max_steps = 1000000;
  double shooting_tol = 1e-7;
  int shooting_max_iters = 50;
  double fd_step = 1e-6;
  int output_points = 601;
  // Upper bound on |h| as a fraction of the integration span. Keeps the
  // Hermite interpolant accurate on very smooth solutions.
  double max_step_fraction = 0.02;

  void validate() const;  // throws InvalidInput
};

struct IntegrationStats {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::size_t rhs_evals = 0;
};

/// Piecewise cubic Hermite interpolant over the accepted steps of a run.
/// Nodes are stored in increasing time regardless of integration direction.
class DenseSolution {
 public:
  DenseSolution() = default;

  void push(double t, const Vector& y, const Vector& dy);
  // Reverses node order. Used after a backward run.
  void finalize();

  Vector operator()(double t) const;
  Vector derivative(double t) const;

  double t_min() const { return ts_.front(); }
  double t_max() const { return ts_.back(); }
  bool empty() const { return ts_.empty(); }
  std::size_t size() const { return ts_.size(); }
  Eigen::Index dim() const { return ys_.empty() ? 0 : ys_.front().size(); }

  const std::vector<double>& node_times() const { return ts_; }
  const std::vector<Vector>& node_states() const { return ys_; }
  const Vector& front() const { return ys_.front(); }
  const Vector& back() const { return ys_.back(); }

  // Value at the final time of integration (t1 of the run).
  const Vector& final_state() const { return backward_ ? ys_.front() : ys_.back(); }

  IntegrationStats stats;

 private:
  std::size_t locate(double t) const;

  std::vector<double> ts_;
  std::vector<Vector> ys_;
  std::vector<Vector> fs_;
  bool backward_ = false;
};

class IntegrationFailure : public Error {
 public:
  IntegrationFailure(const std::string& what, double t_fail,
                     DenseSolution partial)
      : Error(what), t_fail_(t_fail), partial_(std::move(partial)) {}

  double t_fail() const { return t_fail_; }
  const DenseSolution& partial() const { return partial_; }

 private:
  double t_fail_;
  DenseSolution partial_;
};

using OdeRhs = std::function<Vector(double, const Vector&)>;

struct IntegrationHooks {
  // Called on every accepted step; may modify y in place. A non-empty return
  // value aborts the run with that message.
  std::function<std::string(double, Vector&)> post_step;
};

/// Adaptive Dormand-Prince 5(4). t1 may be below t0.
DenseSolution rk_integrate(const OdeRhs& f, const Vector& y0, double t0,
                           double t1, const SolverConfig& cfg = {},
                           const IntegrationHooks& hooks = {});

/// Central finite-difference Jacobian of f at x.
Matrix fd_jacobian(const std::function<Vector(const Vector&)>& f,
                   const Vector& x, double h);
Vector fd_gradient(const std::function<double(const Vector&)>& f,
                   const Vector& x, double h);

struct ShootingResult {
  Vector unknowns_at_0;
  double residual = 0.0;  // max-norm of the terminal residual
  int iterations = 0;
  bool converged = false;
  DenseSolution solution;
};

using BoundaryFn = std::function<Vector(const Vector&)>;

/// Single shooting. The initial state is [known_at_0; unknowns]; boundary
/// maps the state at t_f to a residual of the same size as the unknowns.
/// Newton steps use a central finite-difference sensitivity and are halved up
/// to 8 times while the residual does not decrease.
ShootingResult shoot(const OdeRhs& dynamics, const Vector& known_at_0,
                     const Vector& unknown_guess, const BoundaryFn& boundary,
                     double t_f, const SolverConfig& cfg = {});

enum class SweepVerdict { bounded, unbounded };

const char* to_string(SweepVerdict v);

struct SweepResult {
  DenseSolution solution;  // column-major flattening of S
  SweepVerdict verdict = SweepVerdict::bounded;
  double max_abs = 0.0;
  std::optional<double> blowup_time;
  Eigen::Index rows = 0;

  Matrix at(double t) const;
};

using MatrixField = std::function<Matrix(double, const Matrix&)>;

/// Integrates dS/dt = field(t, S) from t_f back to t_0. The sweep is
/// unbounded when any |S_ij| reaches bound or the integration fails.
SweepResult backward_sweep(const MatrixField& field, const Matrix& S_tf,
                           double t_f, double t_0, const SolverConfig& cfg = {},
                           double bound = 1e6);

/// n uniformly spaced points covering [a, b].
std::vector<double> linspace(double a, double b, int n);

}  // namespace cyclic
