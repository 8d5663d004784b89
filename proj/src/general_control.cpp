#include "cyclic/general_control.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

namespace cyclic {

Matrix ControlProblem::jac_F(const Vector& x) const {
  return DF ? DF(x) : fd_jacobian(F, x, fd_step);
}

Matrix ControlProblem::jac_G(const Vector& x) const {
  return DG ? DG(x) : fd_jacobian(G, x, fd_step);
}

double ControlProblem::psi(const Vector& x) const { return Psi ? Psi(x) : 0.0; }

Vector ControlProblem::psi_gradient(const Vector& x) const {
  if (grad_Psi) return grad_Psi(x);
  if (Psi) return fd_gradient(Psi, x, fd_step);
  return Vector::Zero(x.size());
}

Matrix ControlProblem::psi_hessian(const Vector& x) const {
  if (hess_Psi) return hess_Psi(x);
  if (grad_Psi) {
    const Matrix h = fd_jacobian(grad_Psi, x, fd_step);
    return 0.5 * (h + h.transpose());
  }
  if (Psi) {
    // Second differences with a coarser step.
    const double h = std::cbrt(fd_step) * 1e-2;
    const Matrix m = fd_jacobian(
        [&](const Vector& y) { return fd_gradient(Psi, y, h); }, x, h);
    return 0.5 * (m + m.transpose());
  }
  return Matrix::Zero(x.size(), x.size());
}

namespace {

double eval_or_zero(const ScalarField& f, const Vector& x) {
  return f ? f(x) : 0.0;
}

Vector gradient_of(const VectorField& g, const ScalarField& f, const Vector& x,
                   double h) {
  if (g) return g(x);
  if (f) return fd_gradient(f, x, h);
  return Vector::Zero(x.size());
}

Vector hamiltonian_gradient(const ControlProblem& p, const Vector& x,
                            const Vector& lambda, double gamma) {
  return gradient_of(p.grad_F0, p.F0, x, p.fd_step) +
         gamma * gradient_of(p.grad_G0, p.G0, x, p.fd_step) +
         p.jac_F(x).transpose() * lambda +
         gamma * (p.jac_G(x).transpose() * lambda);
}

double max_rel_gap(const Matrix& a, const Matrix& b) {
  return (a - b).cwiseAbs().maxCoeff() / std::max(1.0, b.cwiseAbs().maxCoeff());
}

}  // namespace

Matrix ControlProblem::hamiltonian_hessian(const Vector& x, const Vector& lambda,
                                           double gamma) const {
  if (hess_H) return hess_H(x, lambda, gamma);
  const Matrix h = fd_jacobian(
      [&](const Vector& y) { return hamiltonian_gradient(*this, y, lambda, gamma); },
      x, std::sqrt(fd_step) * 1e-2);
  return 0.5 * (h + h.transpose());
}

void validate_problem(const ControlProblem& p) {
  if (!p.F || !p.G) throw InvalidInput("control problem needs F and G");
  if (!(p.r > 0) || !std::isfinite(p.r)) throw InvalidInput("r must be positive");
  if (!(p.t_f > 0) || !std::isfinite(p.t_f))
    throw InvalidInput("t_f must be positive");
  if (p.x0.size() == 0 || !p.x0.allFinite())
    throw InvalidInput("x0 must be a finite, non-empty vector");
  const Vector& x = p.x0;
  const Eigen::Index n = x.size();
  if (p.F(x).size() != n || p.G(x).size() != n)
    throw InvalidInput("F and G must map R^n to R^n");
  if (p.homotopy_anchor && p.homotopy_anchor->size() != n)
    throw InvalidInput("homotopy anchor has the wrong dimension");

  constexpr double tol = 1e-5;
  const double h = p.fd_step;
  auto check_grad = [&](const VectorField& g, const ScalarField& f,
                        const char* name) {
    if (!g) return;
    if (!f) throw InvalidInput(std::string(name) + " given without its function");
    if (max_rel_gap(g(x), fd_gradient(f, x, h)) > tol)
      throw InvalidInput(std::string(name) + " disagrees with finite differences");
  };
  check_grad(p.grad_F0, p.F0, "grad_F0");
  check_grad(p.grad_G0, p.G0, "grad_G0");
  check_grad(p.grad_Psi, p.Psi, "grad_Psi");
  if (p.DF && max_rel_gap(p.DF(x), fd_jacobian(p.F, x, h)) > tol)
    throw InvalidInput("DF disagrees with finite differences");
  if (p.DG && max_rel_gap(p.DG(x), fd_jacobian(p.G, x, h)) > tol)
    throw InvalidInput("DG disagrees with finite differences");
  if (p.hess_Psi && p.grad_Psi &&
      max_rel_gap(p.hess_Psi(x), fd_jacobian(p.grad_Psi, x, h)) > tol)
    throw InvalidInput("hess_Psi disagrees with finite differences");
}

const char* to_string(CertificateMethod m) {
  return m == CertificateMethod::cholesky ? "cholesky" : "riccati";
}

const char* to_string(CertificateVerdict v) {
  switch (v) {
    case CertificateVerdict::sufficient:
      return "sufficient";
    case CertificateVerdict::inconclusive:
      return "inconclusive";
    case CertificateVerdict::unbounded:
      return "unbounded";
  }
  return "unknown";
}

double hamiltonian(const ControlProblem& p, const Vector& x, double gamma,
                   const Vector& lambda) {
  return eval_or_zero(p.F0, x) + gamma * eval_or_zero(p.G0, x) +
         0.5 * p.r * gamma * gamma + lambda.dot(p.F(x)) +
         gamma * lambda.dot(p.G(x));
}

double optimal_gamma(const ControlProblem& p, const Vector& x,
                     const Vector& lambda) {
  return -(lambda.dot(p.G(x)) + eval_or_zero(p.G0, x)) / p.r;
}

Vector lie_bracket(const ControlProblem& p, const Vector& x) {
  return p.jac_F(x) * p.G(x) - p.jac_G(x) * p.F(x);
}

double objective_value(const ControlProblem& p, const ControlSolution& sol) {
  const std::size_t T = sol.times.size();
  if (T == 0) return 0.0;
  std::vector<double> L(T);
  for (std::size_t k = 0; k < T; ++k) {
    const Vector xk = sol.x.row(Eigen::Index(k)).transpose();
    const double g = sol.gamma[Eigen::Index(k)];
    L[k] = eval_or_zero(p.F0, xk) + g * eval_or_zero(p.G0, xk) + 0.5 * p.r * g * g;
  }
  double J = 0.0;
  for (std::size_t k = 1; k < T; ++k)
    J += 0.5 * (sol.times[k] - sol.times[k - 1]) * (L[k] + L[k - 1]);
  return J + p.psi(sol.x.row(Eigen::Index(T - 1)).transpose());
}

namespace {

double terminal_gamma(const ControlProblem& p, const Vector& x) {
  return -(p.psi_gradient(x).dot(p.G(x)) + eval_or_zero(p.G0, x)) / p.r;
}

void finish_diagnostics(const ControlProblem& p, ControlSolution& sol) {
  const Eigen::Index last = sol.gamma.size() - 1;
  const Vector xf = sol.x.row(last).transpose();
  sol.diagnostics.terminal_gamma_error =
      std::abs(sol.gamma[last] - terminal_gamma(p, xf));
  sol.diagnostics.max_stationarity = 0.0;
  if (sol.lambda) {
    for (Eigen::Index k = 0; k <= last; ++k) {
      const Vector xk = sol.x.row(k).transpose();
      const Vector lk = sol.lambda->row(k).transpose();
      const double s = p.r * sol.gamma[k] + eval_or_zero(p.G0, xk) + lk.dot(p.G(xk));
      sol.diagnostics.max_stationarity =
          std::max(sol.diagnostics.max_stationarity, std::abs(s));
    }
  }
  sol.objective_value = objective_value(p, sol);
}

OdeRhs el_rhs(const ControlProblem& p) {
  const Eigen::Index n = p.dim();
  return [&p, n](double, const Vector& y) -> Vector {
    const Vector x = y.head(n);
    const Vector lam = y.tail(n);
    const double g = optimal_gamma(p, x, lam);
    Vector dy(2 * n);
    dy.head(n) = p.F(x) + g * p.G(x);
    dy.tail(n) = -hamiltonian_gradient(p, x, lam, g);
    return dy;
  };
}

ShootingResult shoot_el(const ControlProblem& p, const Vector& x0,
                        const Vector& guess, const SolverConfig& cfg) {
  const Eigen::Index n = p.dim();
  const BoundaryFn bc = [&p, n](const Vector& yf) -> Vector {
    return yf.tail(n) - p.psi_gradient(yf.head(n));
  };
  return shoot(el_rhs(p), x0, guess, bc, p.t_f, cfg);
}

ControlSolution el_solution(const ControlProblem& p, ShootingResult sr,
                            const SolverConfig& cfg) {
  const Eigen::Index n = p.dim();
  auto dense = std::make_shared<const DenseSolution>(std::move(sr.solution));
  auto prob = std::make_shared<const ControlProblem>(p);

  ControlSolution sol;
  sol.times = linspace(0.0, p.t_f, cfg.output_points);
  const Eigen::Index T = Eigen::Index(sol.times.size());
  sol.x.resize(T, n);
  Matrix lam(T, n);
  sol.gamma.resize(T);
  for (Eigen::Index k = 0; k < T; ++k) {
    const Vector y = (*dense)(sol.times[std::size_t(k)]);
    sol.x.row(k) = y.head(n).transpose();
    lam.row(k) = y.tail(n).transpose();
    sol.gamma[k] = optimal_gamma(p, y.head(n), y.tail(n));
  }
  sol.lambda = std::move(lam);
  sol.x_at = [dense, n](double t) -> Vector { return (*dense)(t).head(n); };
  sol.lambda_at = [dense, n](double t) -> Vector { return (*dense)(t).tail(n); };
  sol.gamma_at = [dense, prob, n](double t) {
    const Vector y = (*dense)(t);
    return optimal_gamma(*prob, y.head(n), y.tail(n));
  };
  sol.gamma_dot_at = [dense, prob, n](double t) {
    const Vector y = (*dense)(t);
    const Vector dy = (*dense).derivative(t);
    const Vector x = y.head(n), lam = y.tail(n);
    const Vector dx = dy.head(n), dlam = dy.tail(n);
    const Vector gG0 = gradient_of(prob->grad_G0, prob->G0, x, prob->fd_step);
    return -(dlam.dot(prob->G(x)) + lam.dot(prob->jac_G(x) * dx) + gG0.dot(dx)) /
           prob->r;
  };
  sol.diagnostics.method = "euler-lagrange";
  sol.diagnostics.converged = sr.converged;
  sol.diagnostics.residual = sr.residual;
  sol.diagnostics.iterations = sr.iterations;
  sol.diagnostics.stats = dense->stats;
  finish_diagnostics(p, sol);
  return sol;
}

}  // namespace

ControlSolution solve_el(const ControlProblem& p, const SolverConfig& cfg) {
  validate_problem(p);
  cfg.validate();
  const Eigen::Index n = p.dim();

  std::optional<ShootingResult> best;
  auto keep_best = [&](ShootingResult&& r) {
    if (!best || r.residual < best->residual) best = std::move(r);
  };

  try {
    ShootingResult direct = shoot_el(p, p.x0, Vector::Zero(n), cfg);
    if (direct.converged) return el_solution(p, std::move(direct), cfg);
    keep_best(std::move(direct));
  } catch (const IllConditioned&) {
  } catch (const IntegrationFailure&) {
  }

  int stages = 0;
  if (p.homotopy_anchor) {
    const Vector& a = *p.homotopy_anchor;
    double s = 0.0, ds = 0.25;
    Vector guess = Vector::Zero(n);
    while (s < 1.0 && ds >= 1.0 / 1024) {
      const double s_try = std::min(1.0, s + ds);
      const Vector x0s = a + s_try * (p.x0 - a);
      bool ok = false;
      try {
        ShootingResult r = shoot_el(p, x0s, guess, cfg);
        ++stages;
        if (r.converged) {
          guess = r.unknowns_at_0;
          s = s_try;
          ok = true;
          if (s >= 1.0) {
            ControlSolution sol = el_solution(p, std::move(r), cfg);
            sol.diagnostics.homotopy_stages = stages;
            return sol;
          }
        } else if (s_try >= 1.0) {
          keep_best(std::move(r));
        }
      } catch (const IllConditioned&) {
      } catch (const IntegrationFailure&) {
      }
      ds = ok ? std::min(0.5, ds * 1.5) : ds * 0.5;
    }
    // Final attempt from the furthest continuation point reached.
    try {
      keep_best(shoot_el(p, p.x0, guess, cfg));
    } catch (const IllConditioned&) {
    } catch (const IntegrationFailure&) {
    }
  }
  if (!best) throw IllConditioned("solve_el: no usable shooting iterate");
  ControlSolution sol = el_solution(p, std::move(*best), cfg);
  sol.diagnostics.homotopy_stages = stages;
  return sol;
}

namespace {

OdeRhs reduced_rhs(const ControlProblem& p) {
  const Eigen::Index n = p.dim();
  return [&p, n](double, const Vector& y) -> Vector {
    const Vector x = y.head(n);
    const double g = y[n];
    const Vector F = p.F(x), G = p.G(x);
    Vector dy(n + 1);
    dy.head(n) = F + g * G;
    dy[n] = (gradient_of(p.grad_F0, p.F0, x, p.fd_step).dot(G) -
             gradient_of(p.grad_G0, p.G0, x, p.fd_step).dot(F)) /
            p.r;
    return dy;
  };
}

}  // namespace

ControlSolution solve_reduced(const ControlProblem& p, const SolverConfig& cfg) {
  validate_problem(p);
  cfg.validate();
  const Eigen::Index n = p.dim();
  const OdeRhs rhs = reduced_rhs(p);

  Vector y0(n + 1);
  y0 << p.x0, 0.0;
  const double slope0 = rhs(0.0, y0)[n];
  const double guess = -slope0 * p.t_f;

  // Bracket gate along the initial iterate.
  y0[n] = guess;
  DenseSolution probe;
  try {
    probe = rk_integrate(rhs, y0, 0.0, p.t_f, cfg);
  } catch (const IntegrationFailure& e) {
    probe = e.partial();
  }
  for (double t : linspace(probe.t_min(), probe.t_max(), 20)) {
    const double b = lie_bracket(p, probe(t).head(n)).norm();
    if (!(b < 1e-8))
      throw BracketNonvanishing("solve_reduced: Lie bracket does not vanish (" +
                                std::to_string(b) + ")");
  }

  const BoundaryFn bc = [&p, n](const Vector& yf) -> Vector {
    Vector r(1);
    r[0] = yf[n] - terminal_gamma(p, yf.head(n));
    return r;
  };
  ShootingResult sr = shoot(rhs, p.x0, Vector::Constant(1, guess), bc, p.t_f, cfg);

  auto dense = std::make_shared<const DenseSolution>(std::move(sr.solution));
  ControlSolution sol;
  sol.times = linspace(0.0, p.t_f, cfg.output_points);
  const Eigen::Index T = Eigen::Index(sol.times.size());
  sol.x.resize(T, n);
  sol.gamma.resize(T);
  for (Eigen::Index k = 0; k < T; ++k) {
    const Vector y = (*dense)(sol.times[std::size_t(k)]);
    sol.x.row(k) = y.head(n).transpose();
    sol.gamma[k] = y[n];
  }
  sol.x_at = [dense, n](double t) -> Vector { return (*dense)(t).head(n); };
  sol.gamma_at = [dense, n](double t) { return (*dense)(t)[n]; };
  sol.gamma_dot_at = [dense, n](double t) { return dense->derivative(t)[n]; };
  sol.diagnostics.method = "reduced";
  sol.diagnostics.converged = sr.converged;
  sol.diagnostics.residual = sr.residual;
  sol.diagnostics.iterations = sr.iterations;
  sol.diagnostics.stats = dense->stats;
  finish_diagnostics(p, sol);
  return sol;
}

void reconstruct_costate(const ControlProblem& p, ControlSolution& sol,
                         const SolverConfig& cfg) {
  if (!sol.x_at || !sol.gamma_at)
    throw PreconditionError("reconstruct_costate needs x and gamma interpolants");
  const auto x_at = sol.x_at;
  const auto gamma_at = sol.gamma_at;
  const OdeRhs rhs = [&p, x_at, gamma_at](double t, const Vector& lam) -> Vector {
    return -hamiltonian_gradient(p, x_at(t), lam, gamma_at(t));
  };
  const Vector lam_tf = p.psi_gradient(x_at(p.t_f));
  auto dense = std::make_shared<const DenseSolution>(
      rk_integrate(rhs, lam_tf, p.t_f, 0.0, cfg));
  Matrix lam(Eigen::Index(sol.times.size()), p.dim());
  for (std::size_t k = 0; k < sol.times.size(); ++k)
    lam.row(Eigen::Index(k)) = (*dense)(sol.times[k]).transpose();
  sol.lambda = std::move(lam);
  sol.lambda_at = [dense](double t) -> Vector { return (*dense)(t); };
  finish_diagnostics(p, sol);
}

CertificateReport riccati_certificate(const ControlProblem& p,
                                      const ControlSolution& sol,
                                      const SolverConfig& cfg, double bound) {
  if (!sol.lambda_at)
    throw PreconditionError("riccati_certificate needs a co-state trajectory");
  const auto x_at = sol.x_at;
  const auto lambda_at = sol.lambda_at;
  const auto gamma_at = sol.gamma_at;
  const MatrixField field = [&](double t, const Matrix& S) -> Matrix {
    const Vector x = x_at(t), lam = lambda_at(t);
    const double g = gamma_at(t);
    const Matrix DG = p.jac_G(x);
    const Matrix A = p.jac_F(x) + g * DG;
    const Vector w = gradient_of(p.grad_G0, p.G0, x, p.fd_step) +
                     DG.transpose() * lam + S * p.G(x);
    const Matrix rhs = p.hamiltonian_hessian(x, lam, g) + A.transpose() * S +
                       S * A - (w * w.transpose()) / p.r;
    return -rhs;
  };
  const Matrix S_tf = p.psi_hessian(x_at(p.t_f));
  const SweepResult sw = backward_sweep(field, S_tf, p.t_f, 0.0, cfg, bound);

  CertificateReport rep;
  rep.method = CertificateMethod::riccati;
  rep.max_abs = sw.max_abs;
  rep.blowup_time = sw.blowup_time;
  rep.verdict = sw.verdict == SweepVerdict::bounded
                    ? CertificateVerdict::sufficient
                    : CertificateVerdict::unbounded;
  rep.times = linspace(sw.solution.t_min(), sw.solution.t_max(), cfg.output_points);
  for (double t : rep.times) {
    const Matrix S = sw.at(t);
    rep.margin_trace.push_back(S.cwiseAbs().maxCoeff());
    rep.max_asymmetry =
        std::max(rep.max_asymmetry, (S - S.transpose()).cwiseAbs().maxCoeff());
  }
  return rep;
}

}  // namespace cyclic
