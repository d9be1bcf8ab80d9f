#include "doctest.h"

#include <Eigen/LU>

#include <Eigen/Cholesky>

#include "aggbfgs/bfgs_forms.hpp"
#include "aggbfgs/problems.hpp"
#include "aggbfgs/records.hpp"

using namespace aggbfgs;

namespace {

PairList random_pairs(Index n, Index m, std::uint64_t seed) {
  PairStreamSpec spec;
  spec.seed = seed;
  spec.n = n;
  spec.m = m;
  spec.target_cond = 1e2;
  return mock_pair_sequence(spec, false).pairs;
}

Matrix two_loop_dense(const InitialMatrix& w, PairView pairs) {
  const Index n = w.dim();
  Matrix out(n, n);
  for (Index c = 0; c < n; ++c) out.col(c) = two_loop_apply(w, pairs, Vector::Unit(n, c));
  return out;
}

PairList scalar_pair() {
  PairList pairs;
  pairs.push_back(make_pair(Vector::Constant(1, 1.0), Vector::Constant(1, 2.0)));
  return pairs;
}

}  // namespace

TEST_CASE("make_pair validates curvature") {
  CHECK_THROWS_AS(make_pair(Vector::Constant(2, 1.0), Vector::Constant(2, -1.0)), Error);
  CHECK_THROWS_AS(make_pair(Vector::Zero(2), Vector::Constant(2, 1.0)), Error);
  const CurvaturePair p = make_pair(Vector::Constant(1, 1.0), Vector::Constant(1, 2.0));
  CHECK(p.rho == doctest::Approx(0.5));
}

TEST_CASE("zero pairs return the initial matrix") {
  Vector diag(3);
  diag << 1, 2, 3;
  const InitialMatrix w = InitialMatrix::diagonal(diag);
  const PairList none;
  CHECK(bfgs_iterative(w, none).isApprox(w.dense()));
  CHECK(bfgs_compact(w, none).isApprox(w.dense()));
  const Vector g = Vector::Ones(3);
  CHECK(two_loop_apply(w, none, g).isApprox(diag));
  CHECK(direct_apply(w, none, Matrix(g)).col(0).isApprox(diag.cwiseInverse()));
}

TEST_CASE("one-dimensional closed forms") {
  const InitialMatrix w = InitialMatrix::scaled_identity(1);
  const PairList pairs = scalar_pair();
  CHECK(bfgs_iterative(w, pairs)(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(bfgs_compact(w, pairs)(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(two_loop_apply(w, pairs, Vector::Ones(1))(0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(direct_apply(w, pairs, Matrix::Ones(1, 1))(0, 0) == doctest::Approx(2.0).epsilon(1e-15));
  const CompactFactors f = compact_factors(w, pairs);
  CHECK(f.r(0, 0) == 2.0);
  CHECK(f.d(0) == 2.0);
  CHECK(f.ywy(0, 0) == 4.0);
}

TEST_CASE("forms agree on random inputs") {
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    const Index n = 2 + static_cast<Index>(seed % 31);
    const Index m = 1 + static_cast<Index>(seed * 7 % static_cast<std::uint64_t>(n));
    const PairList pairs = random_pairs(n, m, seed);
    Vector diag(n);
    for (Index i = 0; i < n; ++i) diag(i) = 0.5 + static_cast<double>((i * 13 + seed) % 7) / 4.0;
    const InitialMatrix w = seed % 2 ? InitialMatrix::diagonal(diag)
                                     : InitialMatrix::scaled_identity(n, 0.7);
    const Matrix a1 = bfgs_iterative(w, pairs);
    const Matrix a2 = bfgs_compact(w, pairs);
    const Matrix tl = two_loop_dense(w, pairs);
    CHECK(relative_error(a1, a2) <= 1e-12);
    CHECK(relative_error(tl, a1) <= 1e-12);
    CHECK(relative_error(tl, a2) <= 1e-12);
  }
}

TEST_CASE("secant equation and SPD preservation") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const PairList pairs = random_pairs(8, 5, seed + 50);
    const InitialMatrix w = InitialMatrix::scaled_identity(8);
    const Matrix wbar = bfgs_iterative(w, pairs);
    const CurvaturePair& last = pairs.back();
    CHECK((wbar * last.y - last.s).norm() <= 1e-10 * last.s.norm());
    Eigen::LLT<Matrix> llt(wbar);
    CHECK(llt.info() == Eigen::Success);
  }
}

TEST_CASE("direct_apply inverts the dense model") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const PairList pairs = random_pairs(6, 2, seed + 7);
    const InitialMatrix w = InitialMatrix::scaled_identity(6);
    Matrix v = Matrix::Zero(6, 3);
    for (Index c = 0; c < 3; ++c) v.col(c) = pairs[0].s + static_cast<double>(c) * pairs[1].y;
    const Matrix expected = bfgs_iterative(w, pairs).inverse() * v;
    CHECK(relative_error(direct_apply(w, pairs, v), expected) <= 1e-8);
  }
}

TEST_CASE("check_pairs rejects bad curvature") {
  PairList pairs = scalar_pair();
  pairs[0].rho = -1.0;
  CHECK_THROWS_AS(check_pairs(InitialMatrix::scaled_identity(1), pairs), Error);
}
