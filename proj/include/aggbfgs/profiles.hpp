#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace aggbfgs {

/// Per-problem performance measures of two solvers; nullopt marks a failure.
struct ProfileInput {
  std::vector<std::string> problems;
  std::vector<std::optional<double>> measure_a;
  std::vector<std::optional<double>> measure_b;
};

struct ProfilePoint {
  double alpha = 0.0;  ///< log2 of the performance ratio
  double fraction_a = 0.0;
  double fraction_b = 0.0;
};

struct OutperformingFactor {
  std::string problem;
  double factor = 0.0;  ///< -log2(m_a / m_b)
};

struct ProfileData {
  /// Dolan-More step curves on the grid of all attained log2 ratios
  /// (always including 0), over every problem. Failures never count.
  std::vector<ProfilePoint> curve;
  /// Morales factors on the problems solved by both, sorted by decreasing
  /// absolute value (ties by problem name).
  std::vector<OutperformingFactor> factors;
  std::size_t solved_a = 0;
  std::size_t solved_b = 0;
  std::size_t solved_both = 0;
};

/// -log2(a / b).
double morales_factor(double a, double b);

/// Measures below 1 are raised to 1 before ratios are taken. Throws
/// EmptyIntersection when no problem is solved by both solvers and
/// ShapeMismatch on inconsistent input lengths.
ProfileData compute_profiles(const ProfileInput& input);

/// CSV writers: alpha,fraction_a,fraction_b and problem,factor.
void write_profile_curve(std::ostream& out, const ProfileData& data);
void write_factors(std::ostream& out, const ProfileData& data);

}  // namespace aggbfgs
