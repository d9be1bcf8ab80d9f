#include "doctest.h"

#include "aggbfgs/pairs.hpp"
#include "aggbfgs/problems.hpp"

using namespace aggbfgs;

namespace {

Vector vec2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

}  // namespace

TEST_CASE("observe: independent, parallel and span cases") {
  {
    PairStore store(InitialMatrix::scaled_identity(2), 2);
    store.push_back(make_pair(vec2(1, 0), vec2(1, 0)));
    const auto r = store.observe(make_pair(vec2(0, 1), vec2(0, 1)));
    CHECK(r.kind == DependenceReport::Case::Independent);
  }
  {
    PairStore store(InitialMatrix::scaled_identity(2), 2);
    store.push_back(make_pair(vec2(2, 0), vec2(1, 0)));
    const auto r = store.observe(make_pair(vec2(1, 0), vec2(1, 0)));
    CHECK(r.kind == DependenceReport::Case::ParallelNewest);
    REQUIRE(r.tau.size() == 1);
    CHECK(r.tau(0) == doctest::Approx(2.0));
  }
  {
    PairStore store(InitialMatrix::scaled_identity(2), 3);
    store.push_back(make_pair(vec2(1, 0), vec2(1, 0)));
    store.push_back(make_pair(vec2(0, 1), vec2(0, 1)));
    const auto r = store.observe(make_pair(vec2(1, 1), vec2(1, 1)));
    CHECK(r.kind == DependenceReport::Case::InSpan);
    CHECK(r.j == 0);
    REQUIRE(r.tau.size() == 2);
    CHECK(r.tau(0) == doctest::Approx(1.0));
    CHECK(r.tau(1) == doctest::Approx(-1.0));
  }
}

TEST_CASE("observe rejects nonpositive curvature") {
  PairStore store(InitialMatrix::scaled_identity(2), 2);
  CurvaturePair bad{vec2(1, 0), vec2(-1, 0), -1.0};
  try {
    store.observe(bad);
    FAIL("expected CurvatureViolation");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::CurvatureViolation);
  }
}

TEST_CASE("project_test examples") {
  PairStore store(InitialMatrix::scaled_identity(2), 2);
  store.push_back(make_pair(vec2(1, 1e-9), vec2(1, 0)));
  const auto near = store.project(0, vec2(1, 0), 1e-8);
  CHECK(near.accept);
  CHECK((near.s_hat - vec2(1, 0)).norm() < 1e-15);

  PairStore ortho(InitialMatrix::scaled_identity(2), 2);
  ortho.push_back(make_pair(vec2(0, 1), vec2(0, 1)));
  const auto miss = ortho.project(0, vec2(1, 0), 0.5);
  CHECK_FALSE(miss.accept);
  CHECK(miss.s_hat.norm() < 1e-15);

  PairStore inside(InitialMatrix::scaled_identity(3), 3);
  inside.push_back(make_pair(Vector::Unit(3, 0) + Vector::Unit(3, 1), Vector::Ones(3)));
  inside.push_back(make_pair(Vector::Unit(3, 0), Vector::Ones(3)));
  const auto hit = inside.project(0, Vector::Unit(3, 1), 1e-12);
  CHECK(hit.accept);
  CHECK((hit.s_hat - inside.pairs()[0].s).norm() < 1e-14);
  CHECK_THROWS_AS(inside.project(0, Vector::Zero(3), 0.5), Error);
}

TEST_CASE("span case reproduces the removed displacement") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const Index n = 4 + static_cast<Index>(seed % 8);
    PairStreamSpec spec;
    spec.seed = seed;
    spec.n = n;
    spec.m = n - 1;
    spec.steps = n;
    const PairStream data = mock_pair_sequence(spec, false);
    PairStore store(InitialMatrix::scaled_identity(n), static_cast<std::size_t>(n));
    // Dependent new step: a combination of the stored displacements.
    for (Index k = 0; k < n - 1; ++k) store.push_back(data.pairs[static_cast<std::size_t>(k)]);
    Vector s_new = Vector::Zero(n);
    for (const auto& p : store.pairs()) s_new += p.s;
    const auto r = store.observe(make_pair(s_new, data.hessian * s_new));
    REQUIRE(r.kind == DependenceReport::Case::InSpan);
    const Vector coeff = r.span_coefficients();
    Vector rebuilt = coeff(coeff.size() - 1) * s_new;
    for (Index k = 0; k + 1 < coeff.size(); ++k) {
      rebuilt += coeff(k) * store.pairs()[r.j + 1 + static_cast<std::size_t>(k)].s;
    }
    const Vector& target = store.pairs()[r.j].s;
    CHECK((rebuilt - target).norm() <= 1e-10 * target.norm());
    CHECK(r.tau(0) != 0.0);
  }
}

TEST_CASE("store factors track pair edits") {
  PairStreamSpec spec;
  spec.seed = 17;
  spec.n = 12;
  spec.m = 6;
  spec.steps = 40;
  const PairStream data = mock_pair_sequence(spec, false);
  Vector diag(12);
  for (Index i = 0; i < 12; ++i) diag(i) = 1.0 + 0.1 * static_cast<double>(i);
  PairStore store(InitialMatrix::diagonal(diag), 6);
  for (std::size_t k = 0; k < data.pairs.size(); ++k) {
    if (store.full()) store.remove(k % store.size());
    store.push_back(data.pairs[k]);
    CHECK(store.size() <= 6);
    CHECK(store.gram_drift() <= 1e-8);
    CHECK(store.q_drift() <= 1e-8);
  }
  CHECK_THROWS_AS(store.push_back(data.pairs[0]), Error);
}

TEST_CASE("store capacity is capped by the dimension") {
  PairStore store(InitialMatrix::scaled_identity(2), 5);
  store.push_back(make_pair(vec2(1, 0), vec2(1, 0)));
  store.push_back(make_pair(vec2(0, 1), vec2(0, 1)));
  CHECK(store.full());
  const auto r = store.observe(make_pair(vec2(1, 2), vec2(1, 2)));
  CHECK(r.kind != DependenceReport::Case::Independent);
}

TEST_CASE("replace_gradients keeps displacements and factors") {
  PairStore store(InitialMatrix::scaled_identity(2), 2);
  store.push_back(make_pair(vec2(1, 0), vec2(1, 0)));
  store.push_back(make_pair(vec2(0, 1), vec2(0, 1)));
  Matrix y(2, 1);
  y << 3, 1;
  store.replace_gradients(0, y);
  CHECK(store.pairs()[0].y(0) == 3.0);
  CHECK(store.pairs()[0].rho == doctest::Approx(1.0 / 3.0));
  CHECK(store.gram_drift() == 0.0);
}
