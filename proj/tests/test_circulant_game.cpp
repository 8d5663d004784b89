#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "cyclic/circulant_game.hpp"
#include "cyclic/replicator.hpp"
#include "oracles.hpp"

#include <algorithm>
#include <set>

using namespace cyclic;

TEST_CASE("mu residues") {
  CHECK(mu(1, 5) == 1);
  CHECK(mu(5, 5) == 5);
  CHECK(mu(7, 5) == 2);
  CHECK(mu(0, 3) == 3);
  CHECK(mu(-1, 3) == 2);
  CHECK(mu(-7, 5) == 3);
}

TEST_CASE("small games") {
  const GameSpec g3 = build_game(1);
  CHECK(g3.N == 3);
  CHECK(g3.L.row(0) == (IntMatrix(1, 3) << 0, -1, 1).finished());
  CHECK(g3.M.row(0) == (IntMatrix(1, 3) << 0, 0, 1).finished());

  const GameSpec g5 = build_game(2);
  const IntMatrix L5 = (IntMatrix(5, 5) << 0, -1, 1, -1, 1,   //
                        1, 0, -1, 1, -1,                      //
                        -1, 1, 0, -1, 1,                      //
                        1, -1, 1, 0, -1,                      //
                        -1, 1, -1, 1, 0)
                           .finished();
  const IntMatrix M5 = (IntMatrix(5, 5) << 0, 0, 1, 0, 1,  //
                        1, 0, 0, 1, 0,                     //
                        0, 1, 0, 0, 1,                     //
                        1, 0, 1, 0, 0,                     //
                        0, 1, 0, 1, 0)
                           .finished();
  CHECK(g5.L == L5);
  CHECK(g5.M == M5);

  const GameSpec g7 = build_game(3);
  CHECK((g7.M.rowwise().sum().array() == 3).all());
  CHECK(g7.M + IntMatrix(g7.M.transpose()) ==
        IntMatrix::Ones(7, 7) - IntMatrix::Identity(7, 7));
}

TEST_CASE("construction matches the pairwise rule") {
  for (int n = 1; n <= 10; ++n) {
    const GameSpec g = build_game(n);
    CHECK(g.L == oracle::base_matrix(g.N));
    CHECK(g.M == oracle::winner_matrix(g.N));
    CHECK_NOTHROW(validate_game(g));
  }
}

TEST_CASE("invalid games") {
  CHECK_THROWS_AS(build_game(0), InvalidGame);
  CHECK_THROWS_AS(build_game(-2), InvalidGame);
  CHECK_THROWS_AS(build_game(50), InvalidGame);
  GameSpec g = build_game(2);
  g.M(0, 2) = 0;
  CHECK_THROWS_AS(validate_game(g), InvalidGame);
}

TEST_CASE("payoff matrix") {
  const GameSpec g3 = build_game(1);
  const Matrix rps = (Matrix(3, 3) << 0, -1, 1, 1, 0, -1, -1, 1, 0).finished();
  CHECK((payoff_matrix(g3, 0.0) - rps).norm() == 0.0);
  CHECK(payoff_matrix(g3, 1.0)(0, 2) == 2.0);
  const Matrix A5 = payoff_matrix(build_game(2), 0.5);
  CHECK(A5(0, 2) == 1.5);
  CHECK(A5(0, 1) == -1.0);
  CHECK_THROWS_AS(payoff_matrix(g3, -1.0), PreconditionError);
  CHECK_NOTHROW(payoff_matrix(g3, -1.5, true));
}

TEST_CASE("circulant eigenvalues") {
  auto sorted_real = [](std::vector<std::complex<double>> v) {
    std::vector<double> r;
    for (auto z : v) r.push_back(z.real());
    std::sort(r.begin(), r.end());
    return r;
  };
  const auto id = circulant_eigenvalues((Vector(3) << 1, 0, 0).finished());
  for (auto z : id.eigenvalues) CHECK(std::abs(z - 1.0) < 1e-14);
  const auto r = sorted_real(circulant_eigenvalues((Vector(3) << 0, 1, 1).finished()).eigenvalues);
  CHECK(r[0] == doctest::Approx(-1.0));
  CHECK(r[1] == doctest::Approx(-1.0));
  CHECK(r[2] == doctest::Approx(2.0));

  // Dense solver arbitrates the convention on a non-symmetric first row.
  const Vector c = (Vector(5) << 0.3, -1.2, 0.7, 2.0, -0.4).finished();
  const Matrix A = circulant_matrix(c);
  CHECK(A.row(0).transpose() == c);
  CHECK(A(1, 2) == c[1]);
  const auto spec = circulant_eigenvalues(c).eigenvalues;
  const Eigen::VectorXcd dense = A.eigenvalues();
  for (auto z : spec) {
    double best = 1e9;
    for (Eigen::Index k = 0; k < dense.size(); ++k) best = std::min(best, std::abs(dense[k] - z));
    CHECK(best < 1e-10);
  }
}

TEST_CASE("interior fixed point") {
  CHECK(interior_fixed_point(build_game(1)).isApprox(Vector::Constant(3, 1.0 / 3)));
  CHECK(interior_fixed_point(build_game(2)).isApprox(Vector::Constant(5, 0.2)));
  const GameSpec g9 = build_game(4);
  const Vector u = interior_fixed_point(g9);
  CHECK(u.isApprox(Vector::Constant(9, 1.0 / 9)));
  CHECK(controlled_field(g9, u, 0.7).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("linearization at the center") {
  const LinearizedPair p3 = linearize_at_center(build_game(1));
  CHECK(p3.H.row(0).isApprox((Eigen::RowVector3d() << -2.0 / 9, -2.0 / 9, 1.0 / 9).finished()));
  CHECK(p3.J.row(0).isApprox((Eigen::RowVector3d() << 0, -1.0 / 3, 1.0 / 3).finished()));
  const GameSpec g5 = build_game(2);
  const LinearizedPair p5 = linearize_at_center(g5);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j)
      CHECK(p5.H(i, j) == doctest::Approx(g5.M(i, j) ? 1.0 / 25 : -4.0 / 25));
  for (int n = 1; n <= 4; ++n) {
    const GameSpec g = build_game(n);
    const LinearizedPair p = linearize_at_center(g);
    const Vector c = Vector::Constant(g.N, 1.0 / g.N);
    const Matrix dF = oracle::central_jacobian(
        [&](const Vector& u) { return oracle::replicator(g.L.cast<double>(), u); }, c);
    const Matrix dG = oracle::central_jacobian(
        [&](const Vector& u) { return oracle::replicator(g.M.cast<double>(), u); }, c);
    CHECK((p.J - dF).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((p.H - dG).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((p.H - oracle::actuation_jacobian(g.N)).cwiseAbs().maxCoeff() < 1e-15);
    CHECK((p.J + p.J.transpose()).norm() < 1e-15);
  }
}

TEST_CASE("stability report") {
  const StabilityReport s3 = stability_report(build_game(1), 1.0);
  CHECK(s3.verdict == StabilityVerdict::stable);
  // -gamma n (1 + 2n) / N^2 with n = 1, N = 3 is -1/3.
  CHECK(s3.lambda0_formula == doctest::Approx(-1.0 / 3));
  CHECK(s3.real_part_formula == doctest::Approx(-1.0 / 6));
  CHECK(s3.max_formula_deviation < 1e-12);

  const StabilityReport s5 = stability_report(build_game(2), 1.0);
  CHECK(s5.lambda0_formula == doctest::Approx(-0.4));
  CHECK(s5.real_part_formula == doctest::Approx(-0.1));
  CHECK(s5.max_formula_deviation < 1e-12);

  CHECK(stability_report(build_game(3), -0.5).verdict == StabilityVerdict::unstable);
  const StabilityReport s0 = stability_report(build_game(2), 0.0);
  CHECK(s0.verdict == StabilityVerdict::center_candidate);
  for (auto z : s0.eigenvalues) CHECK(std::abs(z.real()) < 1e-12);
}

TEST_CASE("embedded fixed points") {
  const GameSpec g3 = build_game(1), g5 = build_game(2), g7 = build_game(3);
  const auto emb = embedded_fixed_points(g3, g5, Vector::Constant(3, 1.0 / 3));
  REQUIRE(!emb.empty());
  for (const auto& e : emb) {
    CHECK((e.u.array() == 0.0).count() == 2);
    CHECK(e.residual < 1e-9);
  }
  std::set<std::vector<int>> got;
  for (const auto& e : emb) got.insert(e.support);
  const auto want = oracle::embedding_supports(3, 5);
  CHECK(got == std::set<std::vector<int>>(want.begin(), want.end()));

  // Pure strategies land on pure strategies.
  for (const auto& e : embedded_fixed_points(g3, g5, Vector::Unit(3, 0)))
    CHECK(((e.u.array() == 1.0).count() == 1 && (e.u.array() == 0.0).count() == 4));

  const auto emb75 = embedded_fixed_points(g5, g7, Vector::Constant(5, 0.2));
  for (const auto& e : emb75) {
    const Vector F = oracle::replicator(g7.L.cast<double>(), e.u);
    const Vector G = oracle::replicator(g7.M.cast<double>(), e.u);
    CHECK(std::max(F.cwiseAbs().maxCoeff(), G.cwiseAbs().maxCoeff()) < 1e-9);
  }
  CHECK(emb75.size() == oracle::embedding_supports(5, 7).size());

  CHECK_THROWS_AS(embedded_fixed_points(g3, g5, (Vector(3) << 0.5, 0.3, 0.2).finished()),
                  PreconditionError);
}
