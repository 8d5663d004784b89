#include "cyclic/circulant_game.hpp"

#include "cyclic/replicator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace cyclic {

const char* to_string(StabilityVerdict v) {
  switch (v) {
    case StabilityVerdict::stable:
      return "stable";
    case StabilityVerdict::unstable:
      return "unstable";
    case StabilityVerdict::center_candidate:
      return "center-candidate";
  }
  return "unknown";
}

int mu(long long k, int N) {
  if (N < 3 || N % 2 == 0) throw InvalidGame("mu: N must be odd and >= 3");
  const long long m = ((k % N) + N) % N;
  return m == 0 ? N : static_cast<int>(m);
}

GameSpec build_game(int n) {
  if (n < 1) throw InvalidGame("build_game: n must be >= 1");
  if (2 * n + 1 > kMaxStrategies)
    throw InvalidGame("build_game: N exceeds " + std::to_string(kMaxStrategies));
  GameSpec g;
  g.n = n;
  g.N = 2 * n + 1;
  const int N = g.N;
  g.L = IntMatrix::Zero(N, N);
  g.M = IntMatrix::Zero(N, N);
  for (int i = 1; i <= N; ++i) {
    for (int j = 1; j <= N; ++j) {
      if (i == j) continue;
      const int sign = mu(static_cast<long long>(N) * (i - 1) + j - i, N) % 2 ? -1 : 1;
      g.L(i - 1, j - 1) = sign;
      g.M(i - 1, j - 1) = sign == 1 ? 1 : 0;
    }
  }
  validate_game(g);
  return g;
}

namespace {

bool is_circulant(const IntMatrix& A) {
  const Eigen::Index N = A.rows();
  for (Eigen::Index i = 0; i < N; ++i)
    for (Eigen::Index k = 0; k < N; ++k)
      if (A(i, k) != A(0, (k - i + N) % N)) return false;
  return true;
}

}  // namespace

void validate_game(const GameSpec& g) {
  const int N = g.N;
  if (g.n < 1 || N != 2 * g.n + 1) throw InvalidGame("N must equal 2n + 1 >= 3");
  if (g.L.rows() != N || g.L.cols() != N || g.M.rows() != N || g.M.cols() != N)
    throw InvalidGame("L and M must be N x N");
  if (!is_circulant(g.L) || !is_circulant(g.M))
    throw InvalidGame("L and M must be circulant");
  if (g.L.transpose() != -g.L) throw InvalidGame("L must be skew-symmetric");
  if (g.L.diagonal().any() || g.M.diagonal().any())
    throw InvalidGame("L and M must have zero diagonal");
  if ((g.L.array().abs() > 1).any()) throw InvalidGame("L entries must be in {-1,0,1}");
  if ((g.M.array() < 0).any() || (g.M.array() > 1).any())
    throw InvalidGame("M must be binary");
  if ((g.M.rowwise().sum().array() != g.n).any() ||
      (g.M.colwise().sum().array() != g.n).any())
    throw InvalidGame("M must have n ones per row and column");
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) {
      if (i == j) continue;
      if ((g.M(i, j) == 1) != (g.L(i, j) == 1) ||
          (g.M(i, j) == 0) != (g.L(i, j) == -1))
        throw InvalidGame("M must mark exactly the entries where L is 1");
    }
  const IntMatrix expect =
      IntMatrix::Ones(N, N) - IntMatrix::Identity(N, N);
  if (g.M + g.M.transpose() != expect)
    throw InvalidGame("M + M^T must equal 1_N - I_N");
}

Matrix payoff_matrix(const GameSpec& game, double gamma, bool allow_reversed) {
  if (!(gamma > -1.0) && !allow_reversed)
    throw PreconditionError("payoff_matrix: gamma must exceed -1");
  return game.L.cast<double>() + gamma * game.M.cast<double>();
}

Matrix circulant_matrix(const Vector& first_row) {
  const Eigen::Index N = first_row.size();
  if (N == 0) throw InvalidInput("circulant_matrix: empty first row");
  Matrix A(N, N);
  for (Eigen::Index i = 0; i < N; ++i)
    for (Eigen::Index k = 0; k < N; ++k) A(i, k) = first_row[(k - i + N) % N];
  return A;
}

CirculantSpectrum circulant_eigenvalues(const Vector& first_row) {
  const Eigen::Index N = first_row.size();
  if (N == 0) throw InvalidInput("circulant_eigenvalues: empty first row");
  CirculantSpectrum s;
  s.eigenvalues.reserve(static_cast<std::size_t>(N));
  s.roots_of_unity.reserve(static_cast<std::size_t>(N));
  for (Eigen::Index j = 0; j < N; ++j) {
    const std::complex<double> w =
        std::polar(1.0, 2 * std::numbers::pi * double(j) / double(N));
    std::complex<double> lam = 0.0;
    for (Eigen::Index k = 0; k < N; ++k) {
      // omega_j^k taken from the reduced exponent jk mod N.
      lam += first_row[k] *
             std::polar(1.0, 2 * std::numbers::pi * double((j * k) % N) / double(N));
    }
    s.roots_of_unity.push_back(w);
    s.eigenvalues.push_back(lam);
  }
  return s;
}

Vector interior_fixed_point(const GameSpec& game, double sample_gamma) {
  const int N = game.N;
  const Matrix A = payoff_matrix(game, sample_gamma);
  Matrix K = Matrix::Zero(N + 1, N + 1);
  K.topLeftCorner(N, N) = A;
  K.topRightCorner(N, 1).setConstant(-1.0);
  K.bottomLeftCorner(1, N).setOnes();
  Vector rhs = Vector::Zero(N + 1);
  rhs[N] = 1.0;
  Eigen::FullPivLU<Matrix> lu(K);
  if (lu.rank() != N + 1)
    throw InvalidGame("interior fixed point is not unique");
  const Vector sol = lu.solve(rhs);
  const Vector ustar = Vector::Constant(N, 1.0 / N);
  if ((sol.head(N) - ustar).lpNorm<Eigen::Infinity>() > 1e-12)
    throw InvalidGame("interior fixed point differs from the barycenter");
  return ustar;
}

namespace {

double residual(const GameSpec& g, const Vector& u, std::optional<double> gamma) {
  if (gamma) return controlled_field(g, u, *gamma).lpNorm<Eigen::Infinity>();
  return std::max(field_F(g, u).lpNorm<Eigen::Infinity>(),
                  field_G(g, u).lpNorm<Eigen::Infinity>());
}

bool next_combination(std::vector<int>& c, int n) {
  const int k = static_cast<int>(c.size());
  int i = k - 1;
  while (i >= 0 && c[static_cast<std::size_t>(i)] == n - k + i) --i;
  if (i < 0) return false;
  ++c[static_cast<std::size_t>(i)];
  for (int j = i + 1; j < k; ++j)
    c[static_cast<std::size_t>(j)] = c[static_cast<std::size_t>(j - 1)] + 1;
  return true;
}

}  // namespace

std::vector<EmbeddedFixedPoint> embedded_fixed_points(
    const GameSpec& small, const GameSpec& large, const Vector& u_plus,
    std::optional<double> gamma) {
  const int m = small.N, N = large.N;
  if (m >= N) throw PreconditionError("embedding requires M < N");
  if (u_plus.size() != m) throw InvalidInput("u_plus has the wrong dimension");
  if (residual(small, u_plus, gamma) >= 1e-10)
    throw PreconditionError("u_plus is not a fixed point of the smaller game");

  std::vector<EmbeddedFixedPoint> out;
  std::vector<int> S(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) S[static_cast<std::size_t>(i)] = i;
  do {
    bool match = true;
    for (int a = 0; a < m && match; ++a)
      for (int b = 0; b < m && match; ++b) {
        const int i = S[static_cast<std::size_t>(a)];
        const int j = S[static_cast<std::size_t>(b)];
        match = large.L(i, j) == small.L(a, b) && large.M(i, j) == small.M(a, b);
      }
    if (!match) continue;
    EmbeddedFixedPoint p;
    p.support = S;
    p.u = Vector::Zero(N);
    for (int a = 0; a < m; ++a) p.u[S[static_cast<std::size_t>(a)]] = u_plus[a];
    p.residual = residual(large, p.u, gamma);
    if (p.residual >= 1e-9)
      throw InvalidGame("embedded point is not a fixed point of the larger game");
    out.push_back(std::move(p));
  } while (next_combination(S, N));
  return out;
}

LinearizedPair linearize_at_center(const GameSpec& game) {
  const double N = game.N;
  const Matrix ones = Matrix::Ones(game.N, game.N);
  LinearizedPair p;
  p.J = game.L.cast<double>() / N;
  p.H = (N * (game.M.cast<double>() - ones) + ones) / (N * N);
  return p;
}

StabilityReport stability_report(const GameSpec& game, double gamma) {
  const LinearizedPair lp = linearize_at_center(game);
  const Matrix Jc = lp.J + gamma * lp.H;
  const double N = game.N, n = game.n;

  StabilityReport rep;
  Eigen::EigenSolver<Matrix> es(Jc, false);
  for (Eigen::Index i = 0; i < Jc.rows(); ++i)
    rep.eigenvalues.push_back(es.eigenvalues()[i]);
  rep.circulant_eigenvalues = circulant_eigenvalues(Jc.row(0).transpose()).eigenvalues;
  rep.lambda0_formula = -gamma * n * (1 + 2 * n) / (N * N);
  rep.real_part_formula = -(gamma / (N * N)) * (n + 0.5);

  std::vector<double> got, want;
  for (const auto& e : rep.eigenvalues) got.push_back(e.real());
  want.push_back(rep.lambda0_formula);
  for (int j = 1; j < game.N; ++j) want.push_back(rep.real_part_formula);
  std::sort(got.begin(), got.end());
  std::sort(want.begin(), want.end());
  double dev = 0.0;
  for (std::size_t i = 0; i < got.size(); ++i)
    dev = std::max(dev, std::abs(got[i] - want[i]));
  rep.max_formula_deviation = dev;

  const double scale = 1e-12 * std::max(1.0, Jc.cwiseAbs().maxCoeff());
  const double hi = *std::max_element(got.begin(), got.end());
  const double lo = *std::min_element(got.begin(), got.end());
  if (hi < -scale)
    rep.verdict = StabilityVerdict::stable;
  else if (lo > scale)
    rep.verdict = StabilityVerdict::unstable;
  else
    rep.verdict = StabilityVerdict::center_candidate;
  return rep;
}

}  // namespace cyclic
