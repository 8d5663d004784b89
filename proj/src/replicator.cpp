#include "cyclic/replicator.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace cyclic {

Matrix jacobian_F(const GameSpec& game, const Vector& u) {
  if (u.size() != game.N) throw InvalidInput("jacobian_F: dimension mismatch");
  const Matrix L = game.L.cast<double>();
  const Vector Lu = L * u;
  const double q = u.dot(Lu);
  const Vector dq = (L + L.transpose()) * u;
  Matrix D = u.asDiagonal() * (L - Vector::Ones(game.N) * dq.transpose());
  D.diagonal().array() += Lu.array() - q;
  return D;
}

Matrix jacobian_G(const GameSpec& game, const Vector& u) {
  if (u.size() != game.N) throw InvalidInput("jacobian_G: dimension mismatch");
  const Matrix M = game.M.cast<double>();
  const Vector Mu = M * u;
  const double q = u.dot(Mu);
  const Vector dq = (M + M.transpose()) * u;
  Matrix D = u.asDiagonal() * (M - Vector::Ones(game.N) * dq.transpose());
  D.diagonal().array() += Mu.array() - q;
  return D;
}

Matrix weighted_hessian_F(const GameSpec& game, const Vector& u,
                          const Vector& lambda) {
  (void)u;
  const Matrix L = game.L.cast<double>();
  // u^T L u vanishes identically, leaving sum_i lambda_i u_i (L u)_i.
  return lambda.asDiagonal() * L + (lambda.asDiagonal() * L).transpose();
}

Matrix weighted_hessian_G(const GameSpec& game, const Vector& u,
                          const Vector& lambda) {
  const Matrix M = game.M.cast<double>();
  const Matrix Ms = M + M.transpose();
  const Vector dq = Ms * u;
  const Matrix A = lambda.asDiagonal() * M;
  return A + A.transpose() - lambda * dq.transpose() - dq * lambda.transpose() -
         lambda.dot(u) * Ms;
}

GammaSchedule::GammaSchedule(double constant) : constant_(constant) {}

GammaSchedule::GammaSchedule(std::vector<double> times, std::vector<double> values)
    : times_(std::move(times)), values_(std::move(values)) {
  if (times_.size() < 2 || times_.size() != values_.size())
    throw InvalidInput("gamma series needs matching times and values (>= 2)");
  for (std::size_t i = 1; i < times_.size(); ++i)
    if (!(times_[i] > times_[i - 1]))
      throw InvalidInput("gamma series times must be strictly increasing");
}

double GammaSchedule::operator()(double t) const {
  if (times_.empty()) return constant_;
  if (t <= times_.front()) return values_.front();
  if (t >= times_.back()) return values_.back();
  const auto it = std::upper_bound(times_.begin(), times_.end(), t);
  const std::size_t k = std::size_t(it - times_.begin()) - 1;
  const double s = (t - times_[k]) / (times_[k + 1] - times_[k]);
  return (1 - s) * values_[k] + s * values_[k + 1];
}

void validate_simplex_state(const Vector& u, int N, double sum_tol) {
  if (u.size() != N) throw InvalidInput("state has the wrong dimension");
  if (!u.allFinite()) throw InvalidInput("state has non-finite entries");
  if (std::abs(u.sum() - 1.0) > sum_tol)
    throw InvalidInput("state does not sum to 1");
  if (u.minCoeff() < -1e-12) throw InvalidInput("state has negative entries");
}

Trajectory integrate(const GameSpec& game, const Vector& u0,
                     const GammaSchedule& gamma, double t0, double t1,
                     const SolverConfig& cfg) {
  validate_simplex_state(u0, game.N);
  Trajectory tr;
  tr.N = game.N;
  const OdeRhs rhs = [&](double t, const Vector& u) -> Vector {
    return controlled_field(game, u, gamma(t));
  };
  IntegrationHooks hooks;
  hooks.post_step = [&](double t, Vector& u) -> std::string {
    if (u.minCoeff() < -1e-9)
      return "population share dropped below -1e-9 at t=" + std::to_string(t);
    const double drift = 1.0 - u.sum();
    tr.max_renormalization = std::max(tr.max_renormalization, std::abs(drift));
    u.array() += drift / game.N;
    return "";
  };
  const DenseSolution sol = rk_integrate(rhs, u0, t0, t1, cfg, hooks);
  tr.accepted_steps = sol.stats.accepted;
  tr.rejected_steps = sol.stats.rejected;
  tr.times = linspace(t0, t1, cfg.output_points);
  for (double t : tr.times) {
    tr.states.push_back(sol(t).cwiseMax(0.0));
    tr.gamma.push_back(gamma(t));
  }
  return tr;
}

ControlProblem nonlinear_game_problem(const GameSpec& game, double r, double t_f,
                                      const Vector& u0) {
  validate_simplex_state(u0, game.N);
  const Vector ustar = Vector::Constant(game.N, 1.0 / game.N);
  ControlProblem c;
  c.F = [game](const Vector& u) -> Vector { return field_F(game, u); };
  c.G = [game](const Vector& u) -> Vector { return field_G(game, u); };
  c.DF = [game](const Vector& u) { return jacobian_F(game, u); };
  c.DG = [game](const Vector& u) { return jacobian_G(game, u); };
  c.F0 = [ustar](const Vector& u) { return 0.5 * (u - ustar).squaredNorm(); };
  c.grad_F0 = [ustar](const Vector& u) -> Vector { return u - ustar; };
  c.hess_H = [game](const Vector& u, const Vector& lambda, double gamma) -> Matrix {
    return Matrix::Identity(game.N, game.N) + weighted_hessian_F(game, u, lambda) +
           gamma * weighted_hessian_G(game, u, lambda);
  };
  c.r = r;
  c.t_f = t_f;
  c.x0 = u0;
  c.homotopy_anchor = ustar;
  return c;
}

}  // namespace cyclic
