#pragma once

#include "cyclic/types.hpp"

#include <complex>
#include <optional>
#include <vector>

namespace cyclic {

// Largest strategy count accepted by build_game. Matrices are dense.
inline constexpr int kMaxStrategies = 99;

/// Complete odd circulant game with N = 2n + 1 strategies.
///
/// L is the base (rock-paper-scissors style) payoff matrix with entries in
/// {-1, 0, 1}; M marks the winning pairs and is scaled by the control.
struct GameSpec {
  int n = 0;
  int N = 0;
  IntMatrix L;
  IntMatrix M;
};

struct CirculantSpectrum {
  std::vector<std::complex<double>> eigenvalues;
  std::vector<std::complex<double>> roots_of_unity;
};

/// Jacobians of the uncontrolled (J) and actuation (H) replicator fields at
/// the barycenter.
struct LinearizedPair {
  Matrix J;
  Matrix H;
};

enum class StabilityVerdict { stable, unstable, center_candidate };

struct StabilityReport {
  std::vector<std::complex<double>> eigenvalues;  // dense solver
  std::vector<std::complex<double>> circulant_eigenvalues;
  StabilityVerdict verdict = StabilityVerdict::center_candidate;
  double lambda0_formula = 0.0;        // -gamma n (1 + 2n) / N^2
  double real_part_formula = 0.0;      // -(gamma / N^2)(n + 1/2), j >= 1
  double max_formula_deviation = 0.0;  // sorted real parts vs formulas
};

struct EmbeddedFixedPoint {
  std::vector<int> support;  // zero-based indices S with |S| = M
  Vector u;
  double residual = 0.0;  // max-norm of F and G at u under the N game
};

const char* to_string(StabilityVerdict v);

/// k mod N, mapped into {1, ..., N}.
int mu(long long k, int N);

GameSpec build_game(int n);

/// Throws InvalidGame if any structural invariant is violated.
void validate_game(const GameSpec& game);

/// A = L + gamma M. gamma <= -1 reverses the winning precedence and is
/// rejected unless allow_reversed is set.
Matrix payoff_matrix(const GameSpec& game, double gamma,
                     bool allow_reversed = false);

/// Circulant matrix whose row i is the first row shifted right by i.
Matrix circulant_matrix(const Vector& first_row);

/// lambda_j = sum_k c_k omega_j^k with omega_j = exp(2 pi i j / N).
CirculantSpectrum circulant_eigenvalues(const Vector& first_row);

/// The barycenter (1/N) 1. Uniqueness is confirmed by solving
/// A(gamma) u = alpha 1, 1^T u = 1 for the sample gamma.
Vector interior_fixed_point(const GameSpec& game, double sample_gamma = 0.5);

/// Enumerates the supports S on which the N game restricts to the M game and
/// places u_plus there. When gamma is absent u_plus must be a rest point of
/// both F and G of the smaller game.
std::vector<EmbeddedFixedPoint> embedded_fixed_points(
    const GameSpec& small, const GameSpec& large, const Vector& u_plus,
    std::optional<double> gamma = std::nullopt);

LinearizedPair linearize_at_center(const GameSpec& game);

StabilityReport stability_report(const GameSpec& game, double gamma);

}  // namespace cyclic
