#include "doctest.h"

#include "aggbfgs/linesearch.hpp"
#include "aggbfgs/problems.hpp"

using namespace aggbfgs;

namespace {

Problem half_square() {
  Problem p;
  p.name = "half_square";
  p.dim = 1;
  p.x0 = Vector::Ones(1);
  p.value = [](const Vector& x) { return 0.5 * x.squaredNorm(); };
  p.gradient = [](const Vector& x) -> Vector { return x; };
  return p;
}

Problem linear() {
  Problem p;
  p.name = "linear";
  p.dim = 1;
  p.x0 = Vector::Zero(1);
  p.value = [](const Vector& x) { return -x(0); };
  p.gradient = [](const Vector&) -> Vector { return -Vector::Ones(1); };
  return p;
}

}  // namespace

TEST_CASE("weak Wolfe accepts the unit step on x^2 / 2") {
  const Problem p = half_square();
  const Vector x = Vector::Ones(1);
  const Vector g = p.gradient(x);
  const auto res = weak_wolfe_search(p, x, p.value(x), g, -Vector::Ones(1));
  CHECK(res.ok());
  CHECK(res.alpha == 1.0);
  CHECK(res.f_new == 0.0);
  CHECK(res.func_evals == 1);
}

TEST_CASE("weak Wolfe reports failure on unbounded descent") {
  const Problem p = linear();
  const Vector x = Vector::Zero(1);
  WolfeParams params;
  params.max_bisections = 20;
  const auto res = weak_wolfe_search(p, x, p.value(x), p.gradient(x), Vector::Ones(1), params);
  CHECK_FALSE(res.ok());
  CHECK(res.status == LineSearchResult::Status::MaxBisections);
  CHECK(res.alpha > 0.0);
  CHECK(res.f_new < 0.0);
}

TEST_CASE("weak Wolfe on Rosenbrock satisfies both conditions") {
  const Problem p = rosenbrock(RosenbrockVariant::Classic2d);
  const Vector x = p.x0;
  const Vector g = p.gradient(x);
  const Vector d = -g;
  const double f = p.value(x);
  const WolfeParams params;
  const auto res = weak_wolfe_search(p, x, f, g, d, params);
  REQUIRE(res.ok());
  const Vector xn = x + res.alpha * d;
  const double slope = g.dot(d);
  CHECK(p.value(xn) <= f + params.c1 * res.alpha * slope);
  CHECK(p.gradient(xn).dot(d) >= params.c2 * slope);
  CHECK(res.f_new == p.value(xn));
  CHECK((res.g_new - p.gradient(xn)).norm() == 0.0);
}

TEST_CASE("weak Wolfe rejects ascent directions and bad parameters") {
  const Problem p = half_square();
  const Vector x = Vector::Ones(1);
  CHECK_THROWS_AS(weak_wolfe_search(p, x, 0.5, x, Vector::Ones(1)), Error);
  WolfeParams bad;
  bad.c1 = 0.95;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("exact quadratic step examples") {
  const Matrix a = Matrix::Identity(2, 2);
  Vector x(2);
  x << 1, 0;
  const Vector g = a * x;
  CHECK(exact_quadratic_step(a, g, -g) == doctest::Approx(1.0));
  CHECK(exact_quadratic_step(a, g, -2.0 * g) == doctest::Approx(0.5));

  Rng rng(99);
  const Matrix spd = random_spd_matrix(5, 100.0, rng);
  const Vector x0 = random_normal(rng, 5);
  const Vector g0 = spd * x0;
  const Vector d = -g0 + 0.3 * random_normal(rng, 5);
  const double alpha = exact_quadratic_step(spd, g0, d);
  const Vector g1 = spd * (x0 + alpha * d);
  CHECK(std::abs(g1.dot(d)) <= 1e-10 * g0.norm() * d.norm());

  CHECK_THROWS_AS(exact_quadratic_step(Matrix(-a), g, -g), Error);
}
