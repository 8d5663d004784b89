#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "cyclic/quasilinear.hpp"
#include "cyclic/replicator.hpp"
#include "oracles.hpp"

using namespace cyclic;

namespace {

// x' = A x + gamma b with running cost |x|^2 / 2 and terminal cost |x|^2 / 2.
ControlProblem scalar_lq(double a, double b, double r, double t_f, double x0) {
  ControlProblem p;
  p.F = [a](const Vector& x) { return Vector(a * x); };
  p.G = [b](const Vector& x) { return Vector::Constant(x.size(), b); };
  p.F0 = [](const Vector& x) { return 0.5 * x.squaredNorm(); };
  p.grad_F0 = [](const Vector& x) { return x; };
  p.Psi = [](const Vector& x) { return 0.5 * x.squaredNorm(); };
  p.grad_Psi = [](const Vector& x) { return x; };
  p.r = r;
  p.t_f = t_f;
  p.x0 = Vector::Constant(1, x0);
  return p;
}

ControlProblem zero_cost(const GameSpec& g, const Vector& u0) {
  ControlProblem p;
  p.F = [g](const Vector& u) { return field_F(g, u); };
  p.G = [g](const Vector& u) { return field_G(g, u); };
  p.r = 1.0;
  p.t_f = 2.0;
  p.x0 = u0;
  return p;
}

}  // namespace

TEST_CASE("hamiltonian and optimal gamma") {
  const QuasiLinearProblem q =
      build_quasilinear(build_game(1), 0.2, 6.0, (Vector(3) << 0.2, 0.3, 0.5).finished());
  const ControlProblem p = to_control_problem(q);
  const Vector x = q.x0;
  CHECK(hamiltonian(p, x, 0.0, Vector::Zero(3)) == doctest::Approx(p.F0(x)));
  CHECK(optimal_gamma(p, x, Vector::Zero(3)) == 0.0);
  const Vector lam = (Vector(3) << 0.3, -0.2, 0.5).finished();
  const double g = optimal_gamma(p, x, lam);
  const double h = hamiltonian(p, x, g, lam);
  CHECK(hamiltonian(p, x, g + 1e-3, lam) > h);
  CHECK(hamiltonian(p, x, g - 1e-3, lam) > h);
}

TEST_CASE("lie bracket") {
  ControlProblem same;
  same.F = [](const Vector& x) { return Vector(x.array().square()); };
  same.G = same.F;
  same.x0 = Vector::Ones(3);
  CHECK(lie_bracket(same, (Vector(3) << 0.1, 0.5, -0.2).finished()).norm() < 1e-8);

  const QuasiLinearProblem q =
      build_quasilinear(build_game(2), 0.2, 6.0, Vector::Constant(5, 0.2));
  const ControlProblem lin = to_control_problem(q);
  CHECK(lie_bracket(lin, Vector::LinSpaced(5, -1, 1)).norm() < 1e-12);

  const GameSpec g3 = build_game(1);
  const ControlProblem rep = zero_cost(g3, (Vector(3) << 0.5, 0.3, 0.2).finished());
  CHECK(lie_bracket(rep, rep.x0).norm() > 1e-6);
}

TEST_CASE("validate_problem catches bad derivatives") {
  ControlProblem p = scalar_lq(-1.0, 1.0, 1.0, 1.0, 1.0);
  CHECK_NOTHROW(validate_problem(p));
  p.DF = [](const Vector&) { return Matrix(Matrix::Constant(1, 1, 3.0)); };
  CHECK_THROWS_AS(validate_problem(p), InvalidInput);
  p = scalar_lq(-1.0, 1.0, -1.0, 1.0, 1.0);
  CHECK_THROWS_AS(validate_problem(p), InvalidInput);
}

TEST_CASE("zero costs give the free flow") {
  const GameSpec g3 = build_game(1);
  const ControlProblem p = zero_cost(g3, (Vector(3) << 0.5, 0.3, 0.2).finished());
  const ControlSolution s = solve_el(p);
  CHECK(s.diagnostics.converged);
  CHECK(s.gamma.cwiseAbs().maxCoeff() < 1e-12);
  CHECK(s.lambda->cwiseAbs().maxCoeff() < 1e-12);
  const Trajectory free = integrate(g3, p.x0, 0.0, 0.0, p.t_f);
  CHECK((s.x.row(s.x.rows() - 1).transpose() - free.states.back()).norm() < 1e-8);

  const CertificateReport c = riccati_certificate(p, s);
  CHECK(c.verdict == CertificateVerdict::sufficient);
  CHECK(c.max_abs < 1e-12);
}

TEST_CASE("scalar LQ against the Riccati feedback") {
  // x' = a x + b gamma; the optimal gamma is -(b / r) P(t) x with
  // -P' = 1 + 2 a P - (b^2 / r) P^2, P(tf) = 1.
  const double a = 0.3, b = 1.0, r = 0.5, tf = 2.0;
  const ControlProblem p = scalar_lq(a, b, r, tf, 1.0);
  const ControlSolution s = solve_el(p);
  REQUIRE(s.diagnostics.converged);
  auto field = [&](double, const Vector& P) {
    return Vector::Constant(1, -(1 + 2 * a * P[0] - b * b / r * P[0] * P[0]));
  };
  const Vector P0 = oracle::rk4(field, Vector::Ones(1), tf, 0.0, 4000);
  CHECK(std::abs(s.gamma[0] + b / r * P0[0] * 1.0) < 1e-6);
  CHECK(s.diagnostics.max_stationarity < 1e-8);

  // The Riccati certificate solves the same equation here.
  const CertificateReport c = riccati_certificate(p, s);
  CHECK(c.verdict == CertificateVerdict::sufficient);
  CHECK(std::abs(c.margin_trace.front() - P0[0]) < 1e-6);
  CHECK(c.max_asymmetry == 0.0);
}

TEST_CASE("reduced solve with zero costs") {
  const QuasiLinearProblem q =
      build_quasilinear(build_game(2), 0.2, 6.0, (Vector(5) << 0.25, 0.15, 0.2, 0.25, 0.15).finished());
  ControlProblem p = to_control_problem(q);
  p.F0 = nullptr;
  p.grad_F0 = nullptr;
  const ControlSolution r = solve_reduced(p);
  CHECK(r.diagnostics.converged);
  CHECK(r.gamma.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("reduced solve rejects non-commuting fields") {
  const GameSpec g3 = build_game(1);
  ControlProblem p = zero_cost(g3, (Vector(3) << 0.5, 0.3, 0.2).finished());
  p.F0 = [](const Vector& x) { return 0.5 * (x - Vector::Constant(3, 1.0 / 3)).squaredNorm(); };
  p.grad_F0 = [](const Vector& x) { return Vector(x - Vector::Constant(3, 1.0 / 3)); };
  CHECK_THROWS_AS(solve_reduced(p), BracketNonvanishing);
}

TEST_CASE("objective value") {
  const ControlProblem p = scalar_lq(0.0, 1.0, 1.0, 1.0, 1.0);
  ControlSolution s;
  s.times = linspace(0.0, 1.0, 101);
  s.x = Matrix::Ones(101, 1);
  s.gamma = Vector::Zero(101);
  // int_0^1 1/2 dt + Psi(1).
  CHECK(objective_value(p, s) == doctest::Approx(1.0));
}

TEST_CASE("quasi-linear extremal by three routes") {
  const QuasiLinearProblem q = build_quasilinear(
      build_game(1), 0.2, 6.0, (Vector(3) << 7.0 / 30, 1.0 / 3, 13.0 / 30).finished());
  const ControlProblem p = to_control_problem(q);
  const ControlSolution el = solve_el(p);
  const ControlSolution red = solve_reduced(p);
  REQUIRE(el.diagnostics.converged);
  REQUIRE(red.diagnostics.converged);
  CHECK(std::abs(el.gamma[el.gamma.size() - 1]) < 1e-6);
  CHECK((el.gamma - red.gamma).cwiseAbs().maxCoeff() < 1e-5);
  const auto ex = oracle::quasilinear_exact(q.x0.squaredNorm(), 3, 0.2, 6.0);
  for (std::size_t k = 0; k < el.times.size(); k += 50)
    CHECK(std::abs(el.gamma[Eigen::Index(k)] - ex.gamma(el.times[k])) < 1e-6);
}

TEST_CASE("nonlinear extremal with the replicator") {
  const GameSpec g3 = build_game(1);
  const Vector u0 = (Vector(3) << 7.0 / 30, 1.0 / 3, 13.0 / 30).finished();
  const ControlSolution s = solve_el(nonlinear_game_problem(g3, 0.2, 6.0, u0));
  REQUIRE(s.diagnostics.converged);
  CHECK(std::abs(s.gamma[s.gamma.size() - 1]) < 1e-6);
  CHECK(s.gamma[0] > 0.0);
  CHECK(s.gamma[0] > s.gamma[s.gamma.size() / 2]);
  for (Eigen::Index k = 0; k < s.x.rows(); ++k) CHECK(std::abs(s.x.row(k).sum() - 1.0) < 1e-8);
}
