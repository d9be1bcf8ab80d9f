#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "aggbfgs/bfgs_forms.hpp"
#include "aggbfgs/linalg.hpp"

namespace aggbfgs {

/// Smooth unconstrained objective f: R^n -> R with its gradient.
struct Problem {
  std::string name;
  Index dim = 0;
  Vector x0;
  std::function<double(const Vector&)> value;
  std::function<Vector(const Vector&)> gradient;
  std::optional<Vector> minimizer;
  std::optional<double> optimal_value;
  /// Constant Hessian of a quadratic objective.
  std::optional<Matrix> hessian;
  bool convex = false;

  /// Returns f(x) and stores the gradient in g.
  double evaluate(const Vector& x, Vector& g) const;
};

/// Largest relative mismatch between the gradient and central differences
/// with step 1e-6 * (1 + |x_i|).
double gradient_check(const Problem& problem, const Vector& x);

// ---------------------------------------------------------------- seeding

using Rng = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t& state);

/// Seed of instance `index` in stream `stream` derived from a base seed:
/// three splitmix64 rounds over base, stream and index.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t index);

/// Stable 64-bit FNV-1a hash used to turn stream names into stream ids.
std::uint64_t stream_id(const std::string& name);

Vector random_normal(Rng& rng, Index n);

// ---------------------------------------------------------------- problems

enum class RosenbrockVariant { Classic2d, Chained };

/// Classic: f = 100 (x2 - x1^2)^2 + (1 - x1)^2 from (-1.2, 1).
/// Chained: sum over i of 100 (x_{i+1} - x_i^2)^2 + (1 - x_i)^2 from
/// (-1.2, 1, -1.2, 1, ...).
Problem rosenbrock(RosenbrockVariant variant, Index n = 2);

/// f = x^T A x / 2 with A = Q diag(lambda) Q^T, Q orthogonal from a
/// Householder QR of a Gaussian matrix, lambda in [1 / target_cond, 1]
/// log-uniform with both endpoints pinned.
Problem random_spd_quadratic(Index n, double target_cond, std::uint64_t seed);

/// The SPD matrix used by random_spd_quadratic, drawn from rng.
Matrix random_spd_matrix(Index n, double target_cond, Rng& rng);

struct PairStreamSpec {
  std::uint64_t seed = 0;
  Index n = 0;
  Index m = 0;
  Index steps = 0;
  double noise_scale = 0.1;
  double target_cond = 1e4;
};

struct PlantedDependence {
  Vector s0;
  Vector y0;
  double rho0 = 0.0;
  Vector tau;  ///< s0 = [s_1 ... s_m] tau, oldest first
};

struct PairStream {
  Matrix hessian;
  PairList pairs;
  std::optional<PlantedDependence> planted;
};

/// Mock run on a random SPD quadratic from a Gaussian starting point:
/// directions are -g + noise_scale * ||g|| * z with z standard Gaussian,
/// steps are exact line searches, and `steps` pairs are produced (m when
/// steps is zero). With plant_dependence, s0 = S tau for Gaussian tau over
/// the first m pairs and y0 = A s0. Noise draws that give an ascent direction
/// are resampled up to 100 times before CurvatureViolation is thrown.
PairStream mock_pair_sequence(const PairStreamSpec& spec, bool plant_dependence);

// ---------------------------------------------------------------- registry

/// Names of the benchmark suite (every entry has 10 <= n <= 3000).
std::vector<std::string> suite_names();

/// Builds a registered problem by name; also accepts "rosenbrock",
/// "chained_rosenbrock:<n>", "sphere:<n>" and "spd_quadratic:<n>:<cond>:<seed>".
/// Throws UnknownProblem.
Problem make_problem(const std::string& name);

}  // namespace aggbfgs
