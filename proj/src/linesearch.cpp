#include "aggbfgs/linesearch.hpp"

#include <cmath>
#include <limits>

#include "aggbfgs/problems.hpp"

namespace aggbfgs {

void WolfeParams::validate() const {
  if (!(0.0 < c1 && c1 < c2 && c2 < 1.0)) {
    throw Error(ErrorCode::InvalidInput, "Wolfe constants must satisfy 0 < c1 < c2 < 1");
  }
  if (!(initial_step > 0.0) || max_bisections < 1) {
    throw Error(ErrorCode::InvalidInput, "initial step and iteration cap must be positive");
  }
}

LineSearchResult weak_wolfe_search(const Problem& problem, const Vector& x, double f,
                                   const Vector& g, const Vector& d,
                                   const WolfeParams& params) {
  params.validate();
  const double slope = g.dot(d);
  if (!(slope < 0.0)) {
    throw Error(ErrorCode::NotDescent, "search direction is not a descent direction");
  }

  LineSearchResult best;
  best.alpha = 0.0;
  best.f_new = f;
  best.g_new = g;
  best.status = LineSearchResult::Status::MaxBisections;

  double lo = 0.0;
  double hi = std::numeric_limits<double>::infinity();
  double alpha = params.initial_step;
  int evals = 0;
  for (int it = 0; it < params.max_bisections; ++it) {
    const Vector trial = x + alpha * d;
    Vector g_trial;
    const double f_trial = problem.evaluate(trial, g_trial);
    ++evals;
    if (!std::isfinite(f_trial) || f_trial > f + params.c1 * alpha * slope) {
      hi = alpha;
    } else if (!(g_trial.dot(d) >= params.c2 * slope)) {
      lo = alpha;
      best.alpha = alpha;
      best.f_new = f_trial;
      best.g_new = std::move(g_trial);
    } else {
      LineSearchResult out;
      out.alpha = alpha;
      out.f_new = f_trial;
      out.g_new = std::move(g_trial);
      out.func_evals = evals;
      return out;
    }
    alpha = std::isinf(hi) ? 2.0 * lo : 0.5 * (lo + hi);
  }
  best.func_evals = evals;
  return best;
}

double exact_quadratic_step(const std::function<Vector(const Vector&)>& apply_a,
                            const Vector& g, const Vector& d) {
  const double curvature = d.dot(apply_a(d));
  if (!(curvature > 0.0)) {
    throw Error(ErrorCode::NonpositiveCurvatureDirection, "d^T A d is not positive");
  }
  return -g.dot(d) / curvature;
}

double exact_quadratic_step(const Matrix& a, const Vector& g, const Vector& d) {
  return exact_quadratic_step([&a](const Vector& v) -> Vector { return a * v; }, g, d);
}

}  // namespace aggbfgs
