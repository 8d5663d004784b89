#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "cyclic/quasilinear.hpp"
#include "oracles.hpp"

#include <cmath>
#include <random>

using namespace cyclic;

namespace {

Vector v3(double a, double b, double c) { return (Vector(3) << a, b, c).finished(); }

const Vector kN3 = v3(7.0 / 30, 1.0 / 3, 13.0 / 30);

}  // namespace

TEST_CASE("build_quasilinear") {
  const GameSpec g = build_game(1);
  const QuasiLinearProblem a = build_quasilinear(g, 0.2, 6.0, v3(0.2333, 0.3333, 0.4334));
  CHECK(a.x0.isApprox(v3(-0.1, 0.0, 0.1), 1e-3));
  CHECK(build_quasilinear(g, 0.2, 6.0, Vector::Constant(3, 1.0 / 3)).x0.norm() < 1e-16);
  const QuasiLinearProblem b = build_quasilinear(g, 0.2, 15.0, v3(0.8, 0.1, 0.1));
  CHECK(b.x0.isApprox(v3(0.8 - 1.0 / 3, 0.1 - 1.0 / 3, 0.1 - 1.0 / 3)));
  CHECK(b.x0[0] == doctest::Approx(0.4667).epsilon(1e-4));
  CHECK((b.K - b.Q * b.pair.H).norm() == 0.0);

  const Vector off = (Vector(5) << 0.1, 0.3, 0.0, 0.1, 0.3).finished();
  CHECK_THROWS_AS(build_quasilinear(build_game(2), 0.2, 6.0, off), InvalidInput);
  const QuasiLinearProblem rs = build_quasilinear(build_game(2), 0.2, 6.0, off, SimplexRepair::rescale);
  CHECK(rs.u0.isApprox(off / 0.8));
  CHECK(rs.input_sum == doctest::Approx(0.8));
  const QuasiLinearProblem pr = build_quasilinear(build_game(2), 0.2, 6.0, off, SimplexRepair::project);
  CHECK(pr.u0.isApprox(off + Vector::Constant(5, 0.04)));
  CHECK(pr.repair_applied == SimplexRepair::project);
  CHECK_THROWS_AS(build_quasilinear(g, -0.2, 6.0, kN3), InvalidInput);
}

TEST_CASE("initial slope") {
  const GameSpec g = build_game(1);
  CHECK(gamma_slope_at_zero(build_quasilinear(g, 0.2, 6.0, Vector::Constant(3, 1.0 / 3))) == 0.0);
  const QuasiLinearProblem p = build_quasilinear(g, 0.2, 6.0, kN3);
  CHECK(gamma_slope_at_zero(p) == doctest::Approx(-1.0 / 60));
  CHECK(oracle::quadratic_expansion(p.x0) / 0.2 == doctest::Approx(-1.0 / 60));
  const KappaEstimate k = limit_kappa_heuristic(p);
  CHECK(k.kappa == doctest::Approx(1.0 / 300));
  CHECK(!k.degenerate);
  CHECK(limit_kappa_heuristic(build_quasilinear(g, 0.2, 6.0, Vector::Constant(3, 1.0 / 3))).degenerate);

  std::mt19937_64 rng(3);
  std::normal_distribution<double> d;
  for (int n = 2; n <= 6; ++n) {
    const GameSpec gn = build_game(n);
    Vector x(gn.N);
    for (int i = 0; i < gn.N; ++i) x[i] = 0.01 * d(rng);
    x.array() -= x.mean();
    const QuasiLinearProblem q =
        build_quasilinear(gn, 0.5, 6.0, Vector::Constant(gn.N, 1.0 / gn.N) + x);
    CHECK(gamma_slope_at_zero(q) == doctest::Approx(oracle::quadratic_expansion(q.x0) / 0.5));
  }
}

TEST_CASE("H algebra identity") {
  const GameSpec g = build_game(1);
  CHECK(h_algebra_identity_check(g, Vector::Zero(3)) == 0.0);
  const Vector x = v3(-0.1, 0.0, 0.1);
  const Matrix H = oracle::actuation_jacobian(3);
  CHECK(x.dot((H.transpose() * H + H * H + H) * x) == doctest::Approx(-0.02 / 9));
  CHECK(std::abs(h_algebra_identity_check(g, x)) < 1e-17);
}

TEST_CASE("solve_quasilinear against the exact extremal") {
  for (const auto& [n, u0] : {std::pair{1, kN3}, std::pair{1, v3(0.8, 0.1, 0.1)},
                              std::pair{2, Vector((Vector(5) << 0.25, 0.15, 0.2, 0.25, 0.15).finished())}}) {
    const GameSpec g = build_game(n);
    const double tf = u0[0] == 0.8 ? 15.0 : 6.0;
    const QuasiLinearProblem p = build_quasilinear(g, 0.2, tf, u0);
    const ControlSolution s = solve_quasilinear(p);
    REQUIRE(s.diagnostics.converged);
    const auto ex = oracle::quasilinear_exact(p.x0.squaredNorm(), g.N, 0.2, tf);
    double err = 0, derr = 0;
    for (std::size_t k = 0; k < s.times.size(); ++k) {
      err = std::max(err, std::abs(s.gamma[Eigen::Index(k)] - ex.gamma(s.times[k])));
      derr = std::max(derr, std::abs(s.gamma_dot_at(s.times[k]) - ex.gamma_dot(s.times[k])));
    }
    CHECK(err < 1e-6);
    CHECK(derr < 1e-5);
    const ClosedLoopReport cl = closed_loop_constant(p, s);
    CHECK(cl.C == doctest::Approx(ex.C).epsilon(1e-6));
    CHECK(cl.max_violation < 1e-6);
    CHECK(std::abs(s.gamma[s.gamma.size() - 1]) < SolverConfig{}.shooting_tol);
  }
}

TEST_CASE("trivial quasi-linear data") {
  const QuasiLinearProblem p = build_quasilinear(build_game(1), 0.2, 6.0, Vector::Constant(3, 1.0 / 3));
  const ControlSolution s = solve_quasilinear(p);
  CHECK(s.gamma.cwiseAbs().maxCoeff() < 1e-14);
  CHECK(s.x.cwiseAbs().maxCoeff() < 1e-14);
  const ClosedLoopReport cl = closed_loop_constant(p, s);
  CHECK(cl.C == 0.0);
  CHECK(cl.max_violation == 0.0);
  const CertificateReport c = cholesky_sufficiency(p, s);
  CHECK(c.verdict == CertificateVerdict::sufficient);
  CHECK(c.min_margin == doctest::Approx(0.2));
}

TEST_CASE("gamma ODE") {
  GammaOdeProblem z{1, 3, 0.2, 0.0, 6.0, 0.0, 0.0};
  const ScalarTrajectory zero = solve_gamma_ode(z);
  CHECK(zero.converged);
  CHECK(zero.value.cwiseAbs().maxCoeff() < 1e-14);

  const QuasiLinearProblem p = build_quasilinear(build_game(1), 0.2, 6.0, kN3);
  const auto ex = oracle::quasilinear_exact(p.x0.squaredNorm(), 3, 0.2, 6.0);
  const ScalarTrajectory g = solve_gamma_ode(make_gamma_ode_problem(p, ex.C));
  REQUIRE(g.converged);
  double err = 0;
  for (std::size_t k = 0; k < g.times.size(); ++k)
    err = std::max(err, std::abs(g.value[Eigen::Index(k)] - ex.gamma(g.times[k])));
  CHECK(err < 1e-6);
  CHECK(g.derivative[0] == doctest::Approx(gamma_slope_at_zero(p)));

  const GammaOdeClosure cl = close_gamma_ode(p);
  CHECK(cl.converged);
  CHECK(cl.C == doctest::Approx(ex.C).epsilon(1e-4));
}

TEST_CASE("limit ODE and closed form") {
  const ScalarTrajectory zero = solve_limit_ode(0.0, 6.0, 0.2);
  CHECK(zero.value.cwiseAbs().maxCoeff() < 1e-14);

  const LimitClosedForm cf = closed_form_limit(0.02, 6.0);
  CHECK(cf.zeta(6.0) == 0.0);
  CHECK(cf.zeta_dot(6.0) == doctest::Approx(-0.02));
  // z'' + z z' = 0 by central differences.
  for (double t : {0.5, 2.0, 5.0}) {
    const double h = 1e-4;
    const double zdd = (cf.zeta_dot(t + h) - cf.zeta_dot(t - h)) / (2 * h);
    CHECK(std::abs(zdd + cf.zeta(t) * cf.zeta_dot(t)) < 1e-8);
  }
  for (double k : {1e-1, 1e-2, 1e-3}) {
    // The O(kappa^2) coefficient is t_f^2 / 2 as kappa -> 0.
    const LimitClosedForm c = closed_form_limit(k, 1.0);
    CHECK(std::abs(c.zeta_dot(0.0) + k) <= 10.0 * k * k);
  }
  CHECK_THROWS_AS(closed_form_limit(0.5, 6.0), DomainError);
  CHECK_THROWS_AS(closed_form_limit(-0.1, 6.0), InvalidInput);

  const double slope = -0.03;
  const ScalarTrajectory z = solve_limit_ode(slope, 6.0, 0.2);
  REQUIRE(z.converged);
  const double k = kappa_from_initial_slope(slope, 6.0);
  const LimitClosedForm exact = closed_form_limit(k, 6.0);
  CHECK(exact.zeta_dot(0.0) == doctest::Approx(slope).epsilon(1e-10));
  for (std::size_t i = 0; i < z.times.size(); i += 30)
    CHECK(std::abs(z.value[Eigen::Index(i)] - exact.zeta(z.times[i])) < 1e-7);
}

TEST_CASE("cholesky margins") {
  const QuasiLinearProblem ok = build_quasilinear(
      build_game(2), 0.2, 6.0, (Vector(5) << 0.1, 0.3, 0.0, 0.1, 0.3).finished(), SimplexRepair::project);
  const ControlSolution s = solve_quasilinear(ok);
  const CertificateReport c = cholesky_sufficiency(ok, s);
  CHECK(c.verdict == CertificateVerdict::sufficient);
  CHECK(c.min_margin > 0.0);
  for (std::size_t k = 0; k < c.times.size(); k += 60) {
    const Vector l = s.lambda_at(c.times[k]);
    CHECK(c.margin_trace[k] == doctest::Approx(0.2 - (ok.pair.H.transpose() * l).squaredNorm()));
  }

  const QuasiLinearProblem bad = build_quasilinear(build_game(1), 0.2, 15.0, v3(0.8, 0.1, 0.1));
  const CertificateReport cb = cholesky_sufficiency(bad, solve_quasilinear(bad));
  CHECK(cb.verdict != CertificateVerdict::sufficient);
  CHECK(cb.min_margin <= 0.0);
}

TEST_CASE("riccati sweep on the quasi-linear extremal") {
  const QuasiLinearProblem p = build_quasilinear(build_game(1), 0.2, 15.0, v3(0.8, 0.1, 0.1));
  const ControlProblem cp = to_control_problem(p);
  const ControlSolution s = solve_quasilinear(p);
  const CertificateReport r = riccati_certificate(cp, s);
  CHECK(r.verdict == CertificateVerdict::sufficient);
  CHECK(std::isfinite(r.max_abs));
  CHECK(r.max_asymmetry < 1e-12);
}
