#pragma once

// Reference computations used by the tests. Each one is built from first
// principles and does not call the library routine it checks.

#include "cyclic/types.hpp"

#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

namespace oracle {

using cyclic::IntMatrix;
using cyclic::Matrix;
using cyclic::Vector;

// i beats j when the forward distance from i to j is even and nonzero.
inline IntMatrix winner_matrix(int N) {
  IntMatrix M = IntMatrix::Zero(N, N);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) {
      const int d = ((j - i) % N + N) % N;
      if (d != 0 && d % 2 == 0) M(i, j) = 1;
    }
  return M;
}

inline IntMatrix base_matrix(int N) {
  const IntMatrix M = winner_matrix(N);
  return M - IntMatrix(M.transpose());
}

// H = (N (M - 1) + 1) / N^2 built entrywise.
inline Matrix actuation_jacobian(int N) {
  const IntMatrix M = winner_matrix(N);
  Matrix H(N, N);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) H(i, j) = (N * (M(i, j) - 1) + 1) / double(N * N);
  return H;
}

inline Matrix central_jacobian(const std::function<Vector(const Vector&)>& f,
                               const Vector& x, double h = 1e-5) {
  const Vector f0 = f(x);
  Matrix D(f0.size(), x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    Vector xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    D.col(j) = (f(xp) - f(xm)) / (2 * h);
  }
  return D;
}

// Replicator field u_i ((A u)_i - u^T A u) written out with loops.
inline Vector replicator(const Matrix& A, const Vector& u) {
  const Eigen::Index N = u.size();
  Vector Au = Vector::Zero(N);
  for (Eigen::Index i = 0; i < N; ++i)
    for (Eigen::Index j = 0; j < N; ++j) Au[i] += A(i, j) * u[j];
  double mean = 0;
  for (Eigen::Index i = 0; i < N; ++i) mean += u[i] * Au[i];
  Vector out(N);
  for (Eigen::Index i = 0; i < N; ++i) out[i] = u[i] * (Au[i] - mean);
  return out;
}

// Supports of size m (as sorted index lists) on which both matrices of the
// large game restrict to the small game. Enumerated by bitmask.
inline std::vector<std::vector<int>> embedding_supports(int m_strats, int n_strats) {
  const IntMatrix Ls = base_matrix(m_strats), Ms = winner_matrix(m_strats);
  const IntMatrix Ll = base_matrix(n_strats), Ml = winner_matrix(n_strats);
  std::vector<std::vector<int>> out;
  for (unsigned mask = 0; mask < (1u << n_strats); ++mask) {
    std::vector<int> s;
    for (int i = 0; i < n_strats; ++i)
      if (mask & (1u << i)) s.push_back(i);
    if (int(s.size()) != m_strats) continue;
    bool ok = true;
    for (int a = 0; a < m_strats && ok; ++a)
      for (int b = 0; b < m_strats && ok; ++b)
        ok = Ll(s[a], s[b]) == Ls(a, b) && Ml(s[a], s[b]) == Ms(a, b);
    if (ok) out.push_back(s);
  }
  return out;
}

// Exact quasi-linear extremal. With x' = (J + gamma H) x, J skew and
// x^T H x = -|x|^2 / (2N) on the zero-sum plane, |x|^2 = C + r gamma^2 and
// gamma' = -(C + r gamma^2) / (2 N r). Integrating from gamma(tf) = 0:
//   gamma(t) = sqrt(C / r) tan(sqrt(C / r) (tf - t) / (2N)),
//   C = |x0|^2 cos^2(sqrt(C / r) tf / (2N)).
struct QuasiLinearExact {
  double C = 0.0;
  double r = 0.0;
  double t_f = 0.0;
  int N = 0;

  double gamma(double t) const {
    const double a = std::sqrt(C / r);
    return a * std::tan(a * (t_f - t) / (2.0 * N));
  }
  double gamma_dot(double t) const {
    const double g = gamma(t);
    return -(C + r * g * g) / (2.0 * N * r);
  }
};

inline QuasiLinearExact quasilinear_exact(double x0_sq, int N, double r, double t_f) {
  QuasiLinearExact q{0.0, r, t_f, N};
  if (x0_sq == 0.0) return q;
  auto phi = [&](double C) {
    const double c = std::cos(std::sqrt(C / r) * t_f / (2.0 * N));
    return C - x0_sq * c * c;
  };
  const double cap = r * std::pow(std::numbers::pi * N / t_f, 2);
  double lo = 0.0, hi = std::min(x0_sq, cap);
  for (int k = 0; k < 200; ++k) {
    const double mid = 0.5 * (lo + hi);
    (phi(mid) > 0 ? hi : lo) = mid;
  }
  q.C = 0.5 * (lo + hi);
  return q;
}

// Classic fixed-step RK4, used only as a reference integrator.
inline Vector rk4(const std::function<Vector(double, const Vector&)>& f, Vector y,
                  double t0, double t1, int steps) {
  const double h = (t1 - t0) / steps;
  double t = t0;
  for (int k = 0; k < steps; ++k) {
    const Vector k1 = f(t, y);
    const Vector k2 = f(t + h / 2, y + h / 2 * k1);
    const Vector k3 = f(t + h / 2, y + h / 2 * k2);
    const Vector k4 = f(t + h, y + h * k3);
    y += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
    t += h;
  }
  return y;
}

// x^T H x by the pairwise expansion
//   -((N-1)/N^2) sum x_i^2 - ((N-2)/N^2) sum_{i<j} x_i x_j,
// valid for x summing to zero.
inline double quadratic_expansion(const Vector& x) {
  const double N = double(x.size());
  double sq = 0, cross = 0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    sq += x[i] * x[i];
    for (Eigen::Index j = i + 1; j < x.size(); ++j) cross += x[i] * x[j];
  }
  return -((N - 1) / (N * N)) * sq - ((N - 2) / (N * N)) * cross;
}

}  // namespace oracle
