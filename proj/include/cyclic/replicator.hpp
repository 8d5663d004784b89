#pragma once

#include "cyclic/circulant_game.hpp"
#include "cyclic/general_control.hpp"
#include "cyclic/ode.hpp"

#include <vector>

namespace cyclic {

// Replicator vector fields. They are written against Eigen::MatrixBase so
// they accept expressions and any scalar type the matrices can be cast to.

/// F_i(u) = u_i (e_i - u)^T L u.
template <typename Derived>
auto field_F(const GameSpec& game, const Eigen::MatrixBase<Derived>& u)
    -> Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> {
  using Scalar = typename Derived::Scalar;
  if (u.size() != game.N) throw InvalidInput("field_F: dimension mismatch");
  const auto L = game.L.template cast<Scalar>();
  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> Lu = L * u;
  const Scalar uLu = u.dot(Lu);
  return (u.array() * (Lu.array() - uLu)).matrix();
}

/// G_i(u) = u_i (e_i - u)^T M u.
template <typename Derived>
auto field_G(const GameSpec& game, const Eigen::MatrixBase<Derived>& u)
    -> Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> {
  using Scalar = typename Derived::Scalar;
  if (u.size() != game.N) throw InvalidInput("field_G: dimension mismatch");
  const auto M = game.M.template cast<Scalar>();
  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> Mu = M * u;
  const Scalar uMu = u.dot(Mu);
  return (u.array() * (Mu.array() - uMu)).matrix();
}

template <typename Derived>
auto controlled_field(const GameSpec& game, const Eigen::MatrixBase<Derived>& u,
                      typename Derived::Scalar gamma)
    -> Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> {
  return field_F(game, u) + gamma * field_G(game, u);
}

// Analytic Jacobians of F and G on all of R^N.
Matrix jacobian_F(const GameSpec& game, const Vector& u);
Matrix jacobian_G(const GameSpec& game, const Vector& u);

/// Hessian in u of lambda^T F(u).
Matrix weighted_hessian_F(const GameSpec& game, const Vector& u,
                          const Vector& lambda);
/// Hessian in u of lambda^T G(u).
Matrix weighted_hessian_G(const GameSpec& game, const Vector& u,
                          const Vector& lambda);

/// Piecewise-linear control profile used to replay open-loop controls.
class GammaSchedule {
 public:
  GammaSchedule(double constant);  // NOLINT(google-explicit-constructor)
  GammaSchedule(std::vector<double> times, std::vector<double> values);

  double operator()(double t) const;
  bool is_constant() const { return times_.empty(); }
  double constant_value() const { return constant_; }

 private:
  double constant_ = 0.0;
  std::vector<double> times_;
  std::vector<double> values_;
};

struct Trajectory {
  int N = 0;
  std::vector<double> times;
  std::vector<Vector> states;
  std::vector<double> gamma;
  std::size_t accepted_steps = 0;
  std::size_t rejected_steps = 0;
  double max_renormalization = 0.0;  // largest |1 - sum u| corrected
};

/// Integrates u' = F(u) + gamma(t) G(u) on the simplex.
///
/// The sum of u is projected back to 1 after every accepted step. A component
/// below -1e-9 aborts the run with IntegrationFailure; smaller negative drift
/// is clamped to 0 in the returned samples, which are cfg.output_points
/// uniformly spaced times over [t0, t1].
Trajectory integrate(const GameSpec& game, const Vector& u0,
                     const GammaSchedule& gamma, double t0, double t1,
                     const SolverConfig& cfg = {});

/// Validates u against the simplex (sum within 1e-9, no component below
/// -1e-12). Throws InvalidInput.
void validate_simplex_state(const Vector& u, int N, double sum_tol = 1e-9);

/// Steering the full replicator dynamics toward u* with running cost
/// |u - u*|^2 / 2 + r gamma^2 / 2 and no terminal cost. Analytic Jacobians and
/// Hamiltonian Hessian; the continuation anchor is u*.
ControlProblem nonlinear_game_problem(const GameSpec& game, double r, double t_f,
                                      const Vector& u0);

}  // namespace cyclic
