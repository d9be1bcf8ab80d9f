#pragma once

#include <span>
#include <vector>

#include "aggbfgs/linalg.hpp"

namespace aggbfgs {

/// One curvature pair: iterate displacement s, gradient displacement y and
/// rho = 1 / s^T y > 0.
struct CurvaturePair {
  Vector s;
  Vector y;
  double rho = 0.0;
};

/// Builds a pair and checks s != 0 and s^T y > 0 (CurvatureViolation).
CurvaturePair make_pair(Vector s, Vector y);

using PairList = std::vector<CurvaturePair>;
using PairView = std::span<const CurvaturePair>;

/// Initial inverse Hessian approximation: gamma * I or a positive diagonal.
class InitialMatrix {
 public:
  static InitialMatrix scaled_identity(Index dim, double gamma = 1.0);
  static InitialMatrix diagonal(Vector diag);

  Index dim() const noexcept { return dim_; }
  bool is_scaled_identity() const noexcept { return diag_.size() == 0; }
  double gamma() const noexcept { return gamma_; }

  Vector apply(const Vector& v) const;
  Matrix apply(const Matrix& v) const;
  Vector apply_inverse(const Vector& v) const;
  Matrix apply_inverse(const Matrix& v) const;
  Matrix apply_inverse_sqrt(const Matrix& v) const;
  Matrix dense() const;

 private:
  InitialMatrix(Index dim, double gamma, Vector diag)
      : dim_(dim), gamma_(gamma), diag_(std::move(diag)) {}

  Index dim_ = 0;
  double gamma_ = 1.0;
  Vector diag_;
};

/// Blocks of the compact representation: R (upper, R_ij = s_i^T y_j for
/// i <= j), D = diag(s_i^T y_i) and Y^T W Y.
struct CompactFactors {
  Matrix r;
  Vector d;
  Matrix ywy;
};

CompactFactors compact_factors(const InitialMatrix& w, PairView pairs);

/// BFGS(W, S, Y) by applying W <- U^T W U + V once per pair, oldest first.
/// The product U^T W U is expanded into its rank-two form, so no n x n
/// factor is built.
Matrix bfgs_iterative(const InitialMatrix& w, PairView pairs);

/// BFGS(W, S, Y) assembled from the compact representation in one shot.
Matrix bfgs_compact(const InitialMatrix& w, PairView pairs);

/// BFGS(W, S, Y) * g via the two-loop recursion, O(mn).
Vector two_loop_apply(const InitialMatrix& w, PairView pairs, const Vector& g);

/// BFGS(W, S, Y)^{-1} * v, i.e. products with the direct Hessian
/// approximation, from its compact representation. Never forms an n x n
/// matrix.
Matrix direct_apply(const InitialMatrix& w, PairView pairs, const Matrix& v);

/// Throws CurvatureViolation if any pair has a nonpositive or non-finite rho
/// or disagrees with the initial matrix dimension.
void check_pairs(const InitialMatrix& w, PairView pairs);

/// An initial matrix plus pairs, usable implicitly or densely.
struct InverseHessianModel {
  InitialMatrix initial;
  PairList pairs;

  Vector apply(const Vector& g) const { return two_loop_apply(initial, pairs, g); }
  Matrix apply_direct(const Matrix& v) const { return direct_apply(initial, pairs, v); }
  Matrix dense() const { return bfgs_iterative(initial, pairs); }
};

}  // namespace aggbfgs
