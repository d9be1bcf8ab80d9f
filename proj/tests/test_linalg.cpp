#include "doctest.h"

#include <random>

#include <Eigen/QR>

#include "aggbfgs/linalg.hpp"
#include "aggbfgs/problems.hpp"

using namespace aggbfgs;
using namespace aggbfgs::linalg;

namespace {

Matrix random_spd(Index n, std::uint64_t seed) {
  Rng rng(seed);
  return random_spd_matrix(n, 1e3, rng);
}

double rel(const Matrix& a, const Matrix& b) { return max_abs(a - b) / max_abs(b); }

}  // namespace

TEST_CASE("cholesky_factor closed forms") {
  CHECK(cholesky_factor(Matrix::Identity(2, 2)).lower().isApprox(Matrix::Identity(2, 2)));
  Matrix g(2, 2);
  g << 4, 2, 2, 2;
  Matrix expected(2, 2);
  expected << 2, 0, 1, 1;
  CHECK(max_abs(cholesky_factor(g).lower() - expected) < 1e-15);
}

TEST_CASE("cholesky_factor reconstructs random SPD matrices") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Matrix g = random_spd(8, seed);
    CHECK(rel(cholesky_factor(g).reconstruct(), g) <= 1e-12);
  }
}

TEST_CASE("cholesky_factor rejects indefinite input") {
  Matrix g(2, 2);
  g << 1, 2, 2, 1;
  try {
    cholesky_factor(g);
    FAIL("expected NotPositiveDefinite");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotPositiveDefinite);
  }
}

TEST_CASE("CholeskyFactor append and remove agree with refactorization") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Matrix g = random_spd(7, seed + 100);
    CholeskyFactor f = cholesky_factor(g.topLeftCorner(6, 6));
    f.append_last(g.row(6).head(6).transpose(), g(6, 6));
    CHECK(rel(f.lower(), cholesky_factor(g).lower()) <= 1e-10);

    for (Index k : {0, 3, 6}) {
      CholeskyFactor h = cholesky_factor(g);
      h.remove(k);
      Matrix reduced(6, 6);
      std::vector<Index> keep;
      for (Index i = 0; i < 7; ++i) {
        if (i != k) keep.push_back(i);
      }
      for (Index r = 0; r < 6; ++r) {
        for (Index c = 0; c < 6; ++c) reduced(r, c) = g(keep[r], keep[c]);
      }
      CHECK(rel(h.reconstruct(), reduced) <= 1e-10);
    }
  }
}

TEST_CASE("chol_append orthogonal append completes") {
  const CholeskyFactor old = cholesky_factor(Matrix::Identity(1, 1));
  Vector cross(1);
  cross << 0.0;
  const auto out = chol_append(old, cross, 1.0);
  REQUIRE(out.status == DowndateOutcome::Status::Completed);
  CHECK(out.factor.order() == 2);
  CHECK(std::abs(out.factor.lower()(1, 1) - 1.0) < 1e-15);
}

TEST_CASE("chol_append parallel vector breaks down at index 1") {
  // old {s1 = (2,0)}, new s2 = (1,0)
  const CholeskyFactor old = cholesky_factor(Matrix::Constant(1, 1, 4.0));
  Vector cross(1);
  cross << 2.0;
  const auto out = chol_append(old, cross, 1.0);
  REQUIRE(out.status == DowndateOutcome::Status::Breakdown);
  CHECK(out.breakdown_index == 1);
}

TEST_CASE("chol_append span case recovers tau") {
  // old [s1, s0] = [e2, e1] newest first; new s2 = (1,1)
  const CholeskyFactor old = cholesky_factor(Matrix::Identity(2, 2));
  Vector cross(2);
  cross << 1.0, 1.0;
  const auto out = chol_append(old, cross, 2.0);
  REQUIRE(out.status == DowndateOutcome::Status::Breakdown);
  CHECK(out.breakdown_index == 2);
  const Vector tau = tri_solve(out.factor.lower(), out.cross, TriangularSide::Transpose);
  CHECK(std::abs(tau(0) - 1.0) < 1e-12);
  CHECK(std::abs(tau(1) + 1.0) < 1e-12);
  // Leading Gram block [s2, s1, s0] = [Xi 0; xi^T 0][Xi^T xi; 0 0].
  Matrix gram(3, 3);
  gram << 2, 1, 1, 1, 1, 0, 1, 0, 1;
  Matrix lower = Matrix::Zero(3, 3);
  lower.topLeftCorner(2, 2) = out.factor.lower();
  lower.row(2).head(2) = out.cross.transpose();
  CHECK(max_abs(lower * lower.transpose() - gram) <= 1e-10 * max_abs(gram));
}

TEST_CASE("chol_append breakdown index matches pivoted rank on dependent sets") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal;
  for (int t = 0; t < 40; ++t) {
    const Index n = 3 + t % 12;
    const Index m = 1 + t % std::min<Index>(n - 1, 6);
    // Columns newest first: new vector, then m stored ones. Make the vector
    // at position d (1 <= d <= m) dependent on the ones before it.
    Matrix cols(n, m + 1);
    for (Index c = 0; c < m + 1; ++c) {
      for (Index r = 0; r < n; ++r) cols(r, c) = normal(rng);
    }
    const Index d = 1 + t % m;
    Vector combo = Vector::Zero(n);
    for (Index c = 0; c < d; ++c) combo += (1.0 + normal(rng)) * cols.col(c);
    cols.col(d) = combo;
    const Matrix stored = cols.rightCols(m);
    const CholeskyFactor old = cholesky_factor(stored.transpose() * stored);
    const auto out = chol_append(old, stored.transpose() * cols.col(0), cols.col(0).squaredNorm());
    Index expected = 0;
    for (Index i = 1; i <= m; ++i) {
      if (pivoted_rank(cols.leftCols(i + 1)).rank < i + 1) {
        expected = i;
        break;
      }
    }
    REQUIRE(out.status == DowndateOutcome::Status::Breakdown);
    CHECK(out.breakdown_index == expected);
  }
}

TEST_CASE("tri_solve examples and residuals") {
  Vector rhs(2);
  rhs << 3, 7;
  CHECK(tri_solve(Matrix::Identity(2, 2), rhs, TriangularSide::Forward).isApprox(rhs));
  Matrix t(2, 2);
  t << 2, 0, 1, 1;
  Vector b(2);
  b << 4, 3;
  const Vector x = tri_solve(t, b, TriangularSide::Forward);
  CHECK(std::abs(x(0) - 2.0) < 1e-15);
  CHECK(std::abs(x(1) - 1.0) < 1e-15);

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const Index n = 10;
    Matrix lower = Matrix::Zero(n, n);
    for (Index r = 0; r < n; ++r) {
      for (Index c = 0; c < r; ++c) lower(r, c) = 0.1 * unit(rng);
      lower(r, r) = 1.0 + std::abs(unit(rng));
    }
    Vector v(n);
    for (Index i = 0; i < n; ++i) v(i) = unit(rng);
    const Vector f = tri_solve(lower, v, TriangularSide::Forward);
    CHECK((lower * f - v).norm() <= 1e-12 * v.norm());
    const Vector tr = tri_solve(lower, v, TriangularSide::Transpose);
    CHECK((lower.transpose() * tr - v).norm() <= 1e-12 * v.norm());
    const Matrix upper = lower.transpose();
    const Vector bk = tri_solve(upper, v, TriangularSide::Backward);
    CHECK((upper * bk - v).norm() <= 1e-12 * v.norm());
  }
  Matrix singular = Matrix::Identity(2, 2);
  singular(1, 1) = 0.0;
  CHECK_THROWS_AS(tri_solve(singular, rhs, TriangularSide::Forward), Error);
}

TEST_CASE("qr_null_basis examples") {
  Matrix axis(2, 1);
  axis << 1, 0;
  const Matrix n1 = qr_null_basis(axis);
  REQUIRE(n1.cols() == 1);
  CHECK(std::abs(std::abs(n1(1, 0)) - 1.0) < 1e-15);
  CHECK(std::abs(n1(0, 0)) < 1e-15);

  Matrix twins(3, 2);
  twins << 1, 1, 2, 2, 3, 3;
  CHECK(qr_null_basis(twins).cols() == 2);

  std::mt19937_64 rng(9);
  std::normal_distribution<double> normal;
  // m = 5, l = 2: an (m - l - 1) x m map, passed transposed as m x 2.
  Matrix mt(5, 2);
  for (Index c = 0; c < 2; ++c) {
    for (Index r = 0; r < 5; ++r) mt(r, c) = normal(rng);
  }
  const Matrix basis = qr_null_basis(mt);
  CHECK(basis.cols() >= 3);
  CHECK(max_abs(mt.transpose() * basis) <= 1e-10 * max_abs(mt));
  CHECK(max_abs(basis.transpose() * basis - Matrix::Identity(basis.cols(), basis.cols())) < 1e-12);
}

TEST_CASE("psd_sqrt_factor examples") {
  CHECK(max_abs(psd_sqrt_factor(Matrix::Zero(3, 3))) == 0.0);
  const Matrix z = psd_sqrt_factor(Matrix::Identity(3, 3));
  CHECK(max_abs(z.transpose() * z - Matrix::Identity(3, 3)) < 1e-12);
  Vector v(2);
  v << 1, 2;
  const Matrix g = v * v.transpose();
  const Matrix zr = psd_sqrt_factor(g);
  CHECK(max_abs(zr.transpose() * zr - g) <= 1e-10 * max_abs(g));
  Matrix indefinite(2, 2);
  indefinite << 1, 0, 0, -1;
  CHECK_THROWS_AS(psd_sqrt_factor(indefinite), Error);
}

TEST_CASE("psd_sqrt_factor_qr matches the Gram matrix") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> normal;
  for (Index rows : {2, 5, 9}) {
    Matrix m(rows, 5);
    for (Index c = 0; c < 5; ++c) {
      for (Index r = 0; r < rows; ++r) m(r, c) = normal(rng);
    }
    const Matrix z = psd_sqrt_factor_qr(m);
    const Matrix g = m.transpose() * m;
    CHECK(max_abs(z.transpose() * z - g) <= 1e-12 * max_abs(g));
  }
}
