#include "cyclic/quasilinear.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>

namespace cyclic {

const char* to_string(SimplexRepair r) {
  switch (r) {
    case SimplexRepair::none:
      return "none";
    case SimplexRepair::rescale:
      return "rescale";
    case SimplexRepair::project:
      return "project";
  }
  return "unknown";
}

QuasiLinearProblem build_quasilinear(const GameSpec& game, double r, double t_f,
                                     const Vector& u0, SimplexRepair repair) {
  validate_game(game);
  if (!(r > 0) || !std::isfinite(r)) throw InvalidInput("r must be positive");
  if (!(t_f > 0) || !std::isfinite(t_f)) throw InvalidInput("t_f must be positive");
  if (u0.size() != game.N) throw InvalidInput("u0 has the wrong dimension");
  if (!u0.allFinite()) throw InvalidInput("u0 has non-finite entries");

  QuasiLinearProblem p;
  p.game = game;
  p.pair = linearize_at_center(game);
  p.r = r;
  p.t_f = t_f;
  p.input_sum = u0.sum();
  p.u0 = u0;
  const double dev = p.input_sum - 1.0;
  if (std::abs(dev) > 1e-6) {
    switch (repair) {
      case SimplexRepair::none:
        throw InvalidInput("u0 sums to " + std::to_string(p.input_sum) +
                           ", not 1 (a repair mode must be requested)");
      case SimplexRepair::rescale:
        if (!(p.input_sum > 0)) throw InvalidInput("u0 cannot be rescaled");
        p.u0 = u0 / p.input_sum;
        break;
      case SimplexRepair::project:
        p.u0 = u0.array() - dev / game.N;
        break;
    }
    p.repair_applied = repair;
  }
  if (p.u0.minCoeff() < -1e-12) throw InvalidInput("u0 has negative entries");

  const Vector ustar = Vector::Constant(game.N, 1.0 / game.N);
  p.x0 = p.u0 - ustar;
  // Remove the residual offset so x0 lies in the tangent hyperplane.
  p.x0.array() -= p.x0.mean();
  p.Q = Matrix::Identity(game.N, game.N);
  p.K = p.Q * p.pair.H;

  const Matrix& J = p.pair.J;
  const Matrix& H = p.pair.H;
  if ((J * H - H * J).cwiseAbs().maxCoeff() > 1e-13 ||
      (J * p.Q - p.Q * J).cwiseAbs().maxCoeff() > 1e-13)
    throw InvalidGame("J must commute with H and Q");
  if (std::abs(p.x0.sum()) > 1e-12) throw InvalidInput("x0 leaves the tangent plane");
  return p;
}

ControlProblem to_control_problem(const QuasiLinearProblem& p) {
  const Matrix J = p.pair.J, H = p.pair.H, Q = p.Q;
  ControlProblem c;
  c.F = [J](const Vector& x) -> Vector { return J * x; };
  c.G = [H](const Vector& x) -> Vector { return H * x; };
  c.DF = [J](const Vector&) -> Matrix { return J; };
  c.DG = [H](const Vector&) -> Matrix { return H; };
  c.F0 = [Q](const Vector& x) { return 0.5 * x.dot(Q * x); };
  c.grad_F0 = [Q](const Vector& x) -> Vector { return Q * x; };
  c.hess_H = [Q](const Vector&, const Vector&, double) -> Matrix { return Q; };
  c.r = p.r;
  c.t_f = p.t_f;
  c.x0 = p.x0;
  c.homotopy_anchor = Vector::Zero(p.x0.size());
  return c;
}

double gamma_slope_at_zero(const QuasiLinearProblem& p) {
  return p.x0.dot(p.pair.H * p.x0) / p.r;
}

ClosedLoopReport closed_loop_constant(const QuasiLinearProblem& p,
                                      const ControlSolution& sol) {
  ClosedLoopReport rep;
  const Eigen::Index last = sol.x.rows() - 1;
  if (last < 0) return rep;
  const Vector xf = sol.x.row(last).transpose();
  rep.C = xf.dot(p.Q * xf);
  for (Eigen::Index k = 0; k <= last; ++k) {
    const Vector xk = sol.x.row(k).transpose();
    const double g = sol.gamma[k];
    rep.max_violation =
        std::max(rep.max_violation, std::abs(xk.dot(p.Q * xk) - p.r * g * g - rep.C));
  }
  return rep;
}

ControlSolution solve_quasilinear(const QuasiLinearProblem& p,
                                  const SolverConfig& cfg) {
  const ControlProblem c = to_control_problem(p);
  ControlSolution sol = solve_reduced(c, cfg);
  reconstruct_costate(c, sol, cfg);
  sol.diagnostics.closed_loop_violation = closed_loop_constant(p, sol).max_violation;
  return sol;
}

double h_algebra_identity_check(const GameSpec& game, const Vector& x) {
  if (x.size() != game.N) throw InvalidInput("x has the wrong dimension");
  const Matrix H = linearize_at_center(game).H;
  const double N = game.N;
  const Matrix A = H.transpose() * H + H * H + H;
  return x.dot(A * x) + (game.n / (N * N)) * x.squaredNorm();
}

GammaOdeProblem make_gamma_ode_problem(const QuasiLinearProblem& p, double C) {
  GammaOdeProblem g;
  g.n = p.game.n;
  g.N = p.game.N;
  g.r = p.r;
  g.C = C;
  g.t_f = p.t_f;
  g.gamma_tf = 0.0;
  g.gamma_dot_0 = gamma_slope_at_zero(p);
  return g;
}

namespace {

// State layout [g'; g]: the known initial slope first, the unknown value last.
ScalarTrajectory scalar_bvp(const OdeRhs& rhs, double slope0, double target,
                            double t_f, const SolverConfig& cfg) {
  const Vector known = Vector::Constant(1, slope0);
  const Vector guess = Vector::Constant(1, target - slope0 * t_f);
  const BoundaryFn bc = [target](const Vector& yf) -> Vector {
    return Vector::Constant(1, yf[1] - target);
  };
  ShootingResult sr = shoot(rhs, known, guess, bc, t_f, cfg);
  auto dense = std::make_shared<const DenseSolution>(std::move(sr.solution));

  ScalarTrajectory out;
  out.times = linspace(0.0, t_f, cfg.output_points);
  const Eigen::Index T = Eigen::Index(out.times.size());
  out.value.resize(T);
  out.derivative.resize(T);
  for (Eigen::Index k = 0; k < T; ++k) {
    const Vector y = (*dense)(out.times[std::size_t(k)]);
    out.value[k] = y[1];
    out.derivative[k] = y[0];
  }
  out.converged = sr.converged;
  out.residual = sr.residual;
  out.iterations = sr.iterations;
  out.value_at = [dense](double t) { return (*dense)(t)[1]; };
  out.derivative_at = [dense](double t) { return (*dense)(t)[0]; };
  return out;
}

}  // namespace

ScalarTrajectory solve_gamma_ode(const GammaOdeProblem& p, const SolverConfig& cfg) {
  if (!(p.r > 0)) throw InvalidInput("gamma ODE: r must be positive");
  if (!(p.t_f > 0)) throw InvalidInput("gamma ODE: t_f must be positive");
  if (p.C < 0) throw InvalidInput("gamma ODE: C must be nonnegative");
  if (p.N != 2 * p.n + 1 || p.n < 1) throw InvalidGame("gamma ODE: bad (n, N)");
  const double a = double(p.n) / (double(p.N) * p.N);
  const double r = p.r, C = p.C;
  const OdeRhs rhs = [a, r, C](double, const Vector& y) -> Vector {
    const double v = y[0], g = y[1];
    Vector dy(2);
    dy[0] = -(r * g * v + a * g * (r * g * g + C)) / r;
    dy[1] = v;
    return dy;
  };
  return scalar_bvp(rhs, p.gamma_dot_0, p.gamma_tf, p.t_f, cfg);
}

GammaOdeClosure close_gamma_ode(const QuasiLinearProblem& p, const SolverConfig& cfg) {
  const Matrix J = p.pair.J, H = p.pair.H;
  GammaOdeClosure out;
  // Start from the lower bound. Large C pulls the shooting onto branches
  // where gamma is not monotone, which are not extremals.
  double C = 0.0;
  bool valid = true;
  for (int it = 1; it <= 30; ++it) {
    out.gamma = solve_gamma_ode(make_gamma_ode_problem(p, C), cfg);
    valid = out.gamma.converged && out.gamma.derivative.maxCoeff() <= 1e-10;
    const auto g = out.gamma.value_at;
    const OdeRhs rhs = [&](double t, const Vector& x) -> Vector {
      return J * x + g(t) * (H * x);
    };
    const Vector xf = rk_integrate(rhs, p.x0, 0.0, p.t_f, cfg).final_state();
    const double C_new = xf.dot(p.Q * xf);
    out.iterations = it;
    const double change = C_new - C;
    C += 0.5 * change;
    if (std::abs(change) < 1e-6) {
      out.converged = valid;
      break;
    }
  }
  out.C = C;
  out.gamma = solve_gamma_ode(make_gamma_ode_problem(p, C), cfg);
  out.converged = out.converged && out.gamma.converged &&
                  out.gamma.derivative.maxCoeff() <= 1e-10;
  return out;
}

ScalarTrajectory solve_limit_ode(double gamma_dot_0, double t_f, double r,
                                 const SolverConfig& cfg) {
  if (!(r > 0)) throw InvalidInput("limit ODE: r must be positive");
  if (!(t_f > 0)) throw InvalidInput("limit ODE: t_f must be positive");
  const OdeRhs rhs = [](double, const Vector& y) -> Vector {
    Vector dy(2);
    dy[0] = -y[1] * y[0];
    dy[1] = y[0];
    return dy;
  };
  return scalar_bvp(rhs, gamma_dot_0, 0.0, t_f, cfg);
}

LimitClosedForm::LimitClosedForm(double kappa, double t_f)
    : kappa_(kappa), t_f_(t_f), w_(std::sqrt(kappa / 2)) {
  if (!(kappa > 0) || !std::isfinite(kappa))
    throw InvalidInput("closed form: kappa must be positive");
  if (!(t_f > 0)) throw InvalidInput("closed form: t_f must be positive");
  if (w_ * t_f >= std::numbers::pi / 2)
    throw DomainError("closed form: sqrt(kappa/2) t_f must stay below pi/2");
}

void LimitClosedForm::check(double t) const {
  const double slack = 1e-12 * std::max(1.0, t_f_);
  if (t < -slack || t > t_f_ + slack)
    throw DomainError("closed form evaluated outside [0, t_f]");
}

double LimitClosedForm::zeta(double t) const {
  check(t);
  return std::sqrt(2 * kappa_) * std::tan(w_ * (t_f_ - t));
}

double LimitClosedForm::zeta_dot(double t) const {
  check(t);
  const double c = std::cos(w_ * (t_f_ - t));
  return -kappa_ / (c * c);
}

LimitClosedForm closed_form_limit(double kappa, double t_f) {
  return LimitClosedForm(kappa, t_f);
}

double kappa_from_initial_slope(double gamma_dot_0, double t_f) {
  if (!(gamma_dot_0 < 0)) throw InvalidInput("initial slope must be negative");
  if (!(t_f > 0)) throw InvalidInput("t_f must be positive");
  // kappa sec^2(sqrt(kappa/2) t_f) increases from 0 to infinity on the branch.
  const double target = -gamma_dot_0;
  const double hi_limit = 2 * std::pow(std::numbers::pi / (2 * t_f), 2);
  auto f = [&](double k) {
    const double c = std::cos(std::sqrt(k / 2) * t_f);
    return k / (c * c) - target;
  };
  double lo = 0.0, hi = hi_limit;
  for (int i = 0; i < 200 && hi - lo > 1e-16 * hi_limit; ++i) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) > 0 ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

KappaEstimate limit_kappa_heuristic(const QuasiLinearProblem& p) {
  KappaEstimate k;
  k.kappa = -p.x0.dot(p.pair.H * p.x0);
  k.degenerate = p.x0.lpNorm<Eigen::Infinity>() == 0.0;
  if (k.degenerate) k.kappa = 0.0;
  return k;
}

CertificateReport cholesky_sufficiency(const QuasiLinearProblem& p,
                                       const ControlSolution& sol) {
  if (!sol.lambda)
    throw PreconditionError("cholesky_sufficiency needs a co-state trajectory");
  CertificateReport rep;
  rep.method = CertificateMethod::cholesky;
  rep.times = sol.times;
  const Matrix Ht = p.pair.H.transpose();
  double mn = std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < sol.lambda->rows(); ++k) {
    const double m = p.r - (Ht * sol.lambda->row(k).transpose()).squaredNorm();
    rep.margin_trace.push_back(m);
    mn = std::min(mn, m);
  }
  rep.min_margin = mn;
  rep.verdict = mn > 0 ? CertificateVerdict::sufficient
                       : CertificateVerdict::inconclusive;
  return rep;
}

}  // namespace cyclic
