#pragma once

#include <functional>

#include "aggbfgs/linalg.hpp"

namespace aggbfgs {

struct Problem;

struct WolfeParams {
  double c1 = 1e-4;
  double c2 = 0.9;
  int max_bisections = 50;
  double initial_step = 1.0;

  /// Throws InvalidInput unless 0 < c1 < c2 < 1 and the step is positive.
  void validate() const;
};

struct LineSearchResult {
  enum class Status { Success, MaxBisections };

  double alpha = 0.0;
  double f_new = 0.0;
  Vector g_new;
  int func_evals = 0;
  Status status = Status::Success;

  bool ok() const noexcept { return status == Status::Success; }
};

/// Weak Wolfe search by bracketing and bisection: the step doubles while the
/// curvature condition fails and no upper bound is known, and is bisected
/// once a bracket exists. On failure the best Armijo point found is returned
/// (alpha = 0 and the starting values if there is none). Throws NotDescent
/// when g^T d >= 0.
LineSearchResult weak_wolfe_search(const Problem& problem, const Vector& x, double f,
                                   const Vector& g, const Vector& d,
                                   const WolfeParams& params = {});

/// Minimizer of a quadratic with Hessian A along d: alpha = -g^T d / d^T A d.
/// Throws NonpositiveCurvatureDirection unless d^T A d > 0.
double exact_quadratic_step(const std::function<Vector(const Vector&)>& apply_a,
                            const Vector& g, const Vector& d);
double exact_quadratic_step(const Matrix& a, const Vector& g, const Vector& d);

}  // namespace aggbfgs
