#include "cyclic/ode.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cyclic {

void SolverConfig::validate() const {
  if (!(rel_tol > 0) || !(abs_tol > 0) || !(shooting_tol > 0) || !(fd_step > 0))
    throw InvalidInput("solver tolerances must be positive");
  if (output_points < 2) throw InvalidInput("output_points must be >= 2");
  if (max_steps == 0) throw InvalidInput("max_steps must be positive");
  if (shooting_max_iters < 1)
    throw InvalidInput("shooting_max_iters must be positive");
  if (!(max_step_fraction > 0) || max_step_fraction > 1)
    throw InvalidInput("max_step_fraction must lie in (0, 1]");
}

void DenseSolution::push(double t, const Vector& y, const Vector& dy) {
  ts_.push_back(t);
  ys_.push_back(y);
  fs_.push_back(dy);
}

void DenseSolution::finalize() {
  if (ts_.size() > 1 && ts_.front() > ts_.back()) {
    std::reverse(ts_.begin(), ts_.end());
    std::reverse(ys_.begin(), ys_.end());
    std::reverse(fs_.begin(), fs_.end());
    backward_ = true;
  }
}

std::size_t DenseSolution::locate(double t) const {
  if (ts_.empty()) throw DomainError("dense solution is empty");
  const double span = std::max(1.0, std::abs(ts_.back() - ts_.front()));
  const double slack = 1e-12 * span;
  if (t < ts_.front() - slack || t > ts_.back() + slack)
    throw DomainError("dense solution evaluated outside its interval");
  if (ts_.size() == 1) return 0;
  auto it = std::upper_bound(ts_.begin(), ts_.end(), t);
  std::size_t k = it == ts_.begin() ? 0 : std::size_t(it - ts_.begin()) - 1;
  return std::min(k, ts_.size() - 2);
}

Vector DenseSolution::operator()(double t) const {
  const std::size_t k = locate(t);
  if (ts_.size() == 1) return ys_[0];
  const double h = ts_[k + 1] - ts_[k];
  const double s = std::clamp((t - ts_[k]) / h, 0.0, 1.0);
  const double s2 = s * s, s3 = s2 * s;
  return (2 * s3 - 3 * s2 + 1) * ys_[k] + (s3 - 2 * s2 + s) * h * fs_[k] +
         (-2 * s3 + 3 * s2) * ys_[k + 1] + (s3 - s2) * h * fs_[k + 1];
}

Vector DenseSolution::derivative(double t) const {
  const std::size_t k = locate(t);
  if (ts_.size() == 1) return fs_[0];
  const double h = ts_[k + 1] - ts_[k];
  const double s = std::clamp((t - ts_[k]) / h, 0.0, 1.0);
  const double s2 = s * s;
  return ((6 * s2 - 6 * s) * ys_[k] + (-6 * s2 + 6 * s) * ys_[k + 1]) / h +
         (3 * s2 - 4 * s + 1) * fs_[k] + (3 * s2 - 2 * s) * fs_[k + 1];
}

namespace {

// Dormand-Prince tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                 a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                 b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

double error_norm(const Vector& err, const Vector& y0, const Vector& y1,
                  const SolverConfig& cfg) {
  if (err.size() == 0) return 0.0;
  const Vector sc =
      (cfg.abs_tol + cfg.rel_tol * y0.cwiseAbs().cwiseMax(y1.cwiseAbs()).array())
          .matrix();
  return std::sqrt((err.array() / sc.array()).square().mean());
}

double initial_step(const OdeRhs& f, double t0, const Vector& y0,
                    const Vector& f0, double dir, double hmax,
                    const SolverConfig& cfg, IntegrationStats& stats) {
  if (y0.size() == 0) return hmax;
  const Vector sc =
      (cfg.abs_tol + cfg.rel_tol * y0.cwiseAbs().array()).matrix();
  const double d0 = std::sqrt((y0.array() / sc.array()).square().mean());
  const double d1 = std::sqrt((f0.array() / sc.array()).square().mean());
  double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
  h0 = std::min(h0, hmax);
  const Vector y1 = y0 + dir * h0 * f0;
  const Vector f1 = f(t0 + dir * h0, y1);
  ++stats.rhs_evals;
  const double d2 =
      std::sqrt(((f1 - f0).array() / sc.array()).square().mean()) / h0;
  const double dm = std::max(d1, d2);
  const double h1 = dm <= 1e-15 ? std::max(1e-6, h0 * 1e-3)
                                : std::pow(0.01 / dm, 1.0 / 5.0);
  return std::min({100 * h0, h1, hmax});
}

}  // namespace

DenseSolution rk_integrate(const OdeRhs& f, const Vector& y0, double t0,
                           double t1, const SolverConfig& cfg,
                           const IntegrationHooks& hooks) {
  cfg.validate();
  if (!std::isfinite(t0) || !std::isfinite(t1))
    throw InvalidInput("rk_integrate: time span must be finite");
  if (!y0.allFinite()) throw InvalidInput("rk_integrate: non-finite y0");

  DenseSolution out;
  Vector y = y0;
  Vector k1 = f(t0, y);
  ++out.stats.rhs_evals;
  out.push(t0, y, k1);
  if (t1 == t0) return out;

  const double dir = t1 > t0 ? 1.0 : -1.0;
  const double span = std::abs(t1 - t0);
  const double hmax = span * cfg.max_step_fraction;
  double h = initial_step(f, t0, y, k1, dir, hmax, cfg, out.stats);
  double t = t0;
  bool last_rejected = false;

  auto fail = [&](const std::string& msg) {
    out.finalize();
    throw IntegrationFailure(msg, t, std::move(out));
  };

  while (dir * (t1 - t) > 0) {
    if (out.stats.accepted + out.stats.rejected >= cfg.max_steps)
      fail("maximum number of steps exceeded");
    const double hmin =
        16 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t));
    if (h < hmin) fail("step size underflow");
    bool final_step = false;
    if (h >= std::abs(t1 - t)) {
      h = std::abs(t1 - t);
      final_step = true;
    }
    const double hs = dir * h;

    const Vector k2 = f(t + c2 * hs, y + hs * (a21 * k1));
    const Vector k3 = f(t + c3 * hs, y + hs * (a31 * k1 + a32 * k2));
    const Vector k4 = f(t + c4 * hs, y + hs * (a41 * k1 + a42 * k2 + a43 * k3));
    const Vector k5 = f(t + c5 * hs,
                        y + hs * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    const Vector k6 = f(t + hs, y + hs * (a61 * k1 + a62 * k2 + a63 * k3 +
                                          a64 * k4 + a65 * k5));
    const Vector ynew =
        y + hs * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    const Vector k7 = f(t + hs, ynew);
    out.stats.rhs_evals += 6;

    const Vector err =
        hs * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    const double en = ynew.allFinite() ? error_norm(err, y, ynew, cfg)
                                       : std::numeric_limits<double>::infinity();

    if (en <= 1.0) {
      ++out.stats.accepted;
      t = final_step ? t1 : t + hs;
      y = ynew;
      k1 = k7;
      if (hooks.post_step) {
        const std::string msg = hooks.post_step(t, y);
        if (!msg.empty()) {
          out.push(t, y, k1);
          fail(msg);
        }
        k1 = f(t, y);
        ++out.stats.rhs_evals;
      }
      out.push(t, y, k1);
      double fac = en == 0.0 ? 5.0 : 0.9 * std::pow(en, -0.2);
      fac = std::clamp(fac, 0.2, last_rejected ? 1.0 : 5.0);
      h = std::min(h * fac, hmax);
      last_rejected = false;
    } else {
      ++out.stats.rejected;
      const double fac =
          std::isfinite(en) ? std::max(0.2, 0.9 * std::pow(en, -0.2)) : 0.1;
      h *= fac;
      last_rejected = true;
    }
  }
  out.finalize();
  return out;
}

Matrix fd_jacobian(const std::function<Vector(const Vector&)>& f,
                   const Vector& x, double h) {
  const Vector f0 = f(x);
  Matrix J(f0.size(), x.size());
  Vector xp = x, xm = x;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double hj = h * std::max(1.0, std::abs(x[j]));
    xp[j] = x[j] + hj;
    xm[j] = x[j] - hj;
    J.col(j) = (f(xp) - f(xm)) / (2 * hj);
    xp[j] = xm[j] = x[j];
  }
  return J;
}

Vector fd_gradient(const std::function<double(const Vector&)>& f,
                   const Vector& x, double h) {
  Vector g(x.size());
  Vector xp = x, xm = x;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double hj = h * std::max(1.0, std::abs(x[j]));
    xp[j] = x[j] + hj;
    xm[j] = x[j] - hj;
    g[j] = (f(xp) - f(xm)) / (2 * hj);
    xp[j] = xm[j] = x[j];
  }
  return g;
}

ShootingResult shoot(const OdeRhs& dynamics, const Vector& known_at_0,
                     const Vector& unknown_guess, const BoundaryFn& boundary,
                     double t_f, const SolverConfig& cfg) {
  cfg.validate();
  const Eigen::Index nk = known_at_0.size();
  const Eigen::Index nu = unknown_guess.size();

  auto initial = [&](const Vector& z) {
    Vector y0(nk + nu);
    y0 << known_at_0, z;
    return y0;
  };
  auto run = [&](const Vector& z, DenseSolution* keep) {
    DenseSolution sol = rk_integrate(dynamics, initial(z), 0.0, t_f, cfg);
    Vector res = boundary(sol.final_state());
    if (res.size() != nu)
      throw InvalidInput("shoot: residual and unknown dimensions differ");
    if (keep) *keep = std::move(sol);
    return res;
  };
  auto norm = [](const Vector& v) {
    return v.allFinite() ? v.lpNorm<Eigen::Infinity>()
                         : std::numeric_limits<double>::infinity();
  };
  auto try_run = [&](const Vector& z, Vector& res, DenseSolution* keep) {
    try {
      res = run(z, keep);
      return norm(res);
    } catch (const IntegrationFailure&) {
      return std::numeric_limits<double>::infinity();
    }
  };

  ShootingResult result;
  Vector z = unknown_guess;
  DenseSolution sol;
  Vector res = run(z, &sol);
  double rn = norm(res);

  int it = 0;
  while (rn > cfg.shooting_tol && it < cfg.shooting_max_iters) {
    ++it;
    Matrix S(nu, nu);
    for (Eigen::Index j = 0; j < nu; ++j) {
      const double hj = cfg.fd_step * std::max(1.0, std::abs(z[j]));
      Vector zp = z, zm = z;
      zp[j] += hj;
      zm[j] -= hj;
      S.col(j) = (run(zp, nullptr) - run(zm, nullptr)) / (2 * hj);
    }
    Eigen::JacobiSVD<Matrix> svd(S, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const double smax = sv.size() ? sv(0) : 0.0;
    const double smin = sv.size() ? sv(sv.size() - 1) : 0.0;
    if (!(smin > 0) || smax / smin > 1e12)
      throw IllConditioned("shoot: sensitivity matrix is ill-conditioned");
    const Vector dz = -svd.solve(res);

    double alpha = 1.0;
    bool improved = false;
    for (int halvings = 0; halvings <= 8; ++halvings) {
      const Vector zt = z + alpha * dz;
      Vector rt;
      DenseSolution st;
      const double rtn = try_run(zt, rt, &st);
      if (rtn < rn) {
        z = zt;
        res = rt;
        rn = rtn;
        sol = std::move(st);
        improved = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!improved) break;
  }

  result.unknowns_at_0 = z;
  result.residual = rn;
  result.iterations = it;
  result.converged = rn <= cfg.shooting_tol;
  result.solution = std::move(sol);
  return result;
}

const char* to_string(SweepVerdict v) {
  return v == SweepVerdict::bounded ? "bounded" : "unbounded";
}

Matrix SweepResult::at(double t) const {
  const Vector v = solution(t);
  return Eigen::Map<const Matrix>(v.data(), rows, v.size() / rows);
}

SweepResult backward_sweep(const MatrixField& field, const Matrix& S_tf,
                           double t_f, double t_0, const SolverConfig& cfg,
                           double bound) {
  if (S_tf.rows() != S_tf.cols())
    throw InvalidInput("backward_sweep: terminal matrix must be square");
  const Eigen::Index n = S_tf.rows();
  auto rhs = [&](double t, const Vector& y) -> Vector {
    const Matrix S = Eigen::Map<const Matrix>(y.data(), n, n);
    const Matrix dS = field(t, S);
    return Eigen::Map<const Vector>(dS.data(), n * n);
  };
  SweepResult out;
  out.rows = n;
  double max_abs = S_tf.cwiseAbs().maxCoeff();
  IntegrationHooks hooks;
  hooks.post_step = [&](double, Vector& y) -> std::string {
    max_abs = std::max(max_abs, y.cwiseAbs().maxCoeff());
    return max_abs >= bound ? "Riccati solution exceeded bound" : "";
  };
  const Vector y0 = Eigen::Map<const Vector>(S_tf.data(), n * n);
  try {
    out.solution = rk_integrate(rhs, y0, t_f, t_0, cfg, hooks);
    out.verdict = SweepVerdict::bounded;
  } catch (const IntegrationFailure& e) {
    out.solution = e.partial();
    out.verdict = SweepVerdict::unbounded;
    out.blowup_time = e.t_fail();
  }
  out.max_abs = max_abs;
  return out;
}

std::vector<double> linspace(double a, double b, int n) {
  if (n < 2) throw InvalidInput("linspace needs at least two points");
  std::vector<double> v(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    v[static_cast<std::size_t>(i)] = a + (b - a) * i / (n - 1);
  v.back() = b;
  return v;
}

}  // namespace cyclic
