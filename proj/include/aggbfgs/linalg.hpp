#pragma once

#include <vector>

#include <Eigen/Core>

#include "aggbfgs/error.hpp"

namespace aggbfgs {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

namespace linalg {

/// Largest absolute entry; 0 for empty matrices.
double max_abs(const Eigen::Ref<const Matrix>& m);

/// Lower-triangular Cholesky factor with strictly positive diagonal.
///
/// The factor is a value type: every mutating member keeps the invariant
/// `lower() * lower().transpose() == G` for the matrix G it represents.
class CholeskyFactor {
 public:
  CholeskyFactor() = default;

  /// Wraps an existing factor. Throws InvalidInput unless `lower` is square,
  /// lower triangular and has a positive diagonal.
  explicit CholeskyFactor(Matrix lower);

  Index order() const noexcept { return lower_.rows(); }
  const Matrix& lower() const noexcept { return lower_; }

  Matrix reconstruct() const;

  /// Solves G x = rhs with two triangular solves.
  Vector solve(const Vector& rhs) const;
  Matrix solve(const Matrix& rhs) const;

  /// Borders the factored matrix with a new last row/column
  /// [cross; self]. Throws NotPositiveDefinite if the new diagonal vanishes.
  void append_last(const Vector& cross, double self);

  /// Deletes row/column k of the factored matrix (rank-one update of the
  /// trailing block, which cannot break down).
  void remove(Index k);

 private:
  Matrix lower_;
};

/// A squared diagonal at or below this fraction of the matching Gram diagonal
/// (the squared norm of the vector) is treated as an exact zero.
inline constexpr double kBreakdownThreshold = 1e-14;

CholeskyFactor cholesky_factor(const Matrix& gram);

struct DowndateOutcome {
  enum class Status { Completed, Breakdown };

  Status status = Status::Completed;
  /// Smallest i >= 1 such that the first i + 1 vectors (new vector first) are
  /// dependent. Zero when completed.
  Index breakdown_index = 0;
  /// Completed: the augmented factor [mu 0; delta Delta].
  /// Breakdown: the i x i factor Xi of the leading independent block.
  CholeskyFactor factor;
  /// Breakdown only: the row xi that completes the singular (i+1)-block.
  Vector cross;
  /// Breakdown only: the squared diagonal that failed the threshold, i.e.
  /// the squared distance of the dependent vector from the span of the
  /// leading ones (may be slightly negative from rounding).
  double residual_sq = 0.0;
};

/// Prepends a vector to a factored Gram matrix.
///
/// `old` factors the Gram matrix of [v_{m-1}, ..., v_0]; `cross` holds the
/// inner products of the new vector with those columns in the same order and
/// `self` is its squared norm. The new vector becomes the first column, so
/// the trailing block is obtained by a rank-one downdate whose breakdown
/// reveals the first linearly dependent column.
DowndateOutcome chol_append(const CholeskyFactor& old, const Vector& cross,
                            double self);

enum class TriangularSide {
  Forward,    ///< lower T, solve T x = rhs
  Backward,   ///< upper T, solve T x = rhs
  Transpose,  ///< lower T, solve T^T x = rhs
};

Vector tri_solve(const Matrix& t, const Vector& rhs, TriangularSide side);

/// Orthonormal basis for null(mt^T), computed from a column-pivoted QR of
/// `mt`. Rank threshold: max(rows, cols) * eps * largest column norm.
Matrix qr_null_basis(const Matrix& mt);

struct RankReveal {
  Index rank = 0;
  /// Column permutation of the pivoted QR; the first `rank` entries select
  /// a maximal independent subset of columns.
  std::vector<Index> pivots;
};

/// Column-pivoted QR rank with tolerance max(rows, cols) * eps * largest
/// column norm.
RankReveal pivoted_rank(const Matrix& m);

/// Z with Z^T Z = G for symmetric positive semidefinite G, Z = Lambda^{1/2} U^T.
/// Eigenvalues in [-1e-10 * max|G|, 0) are clamped to zero; anything more
/// negative throws NotPsd.
Matrix psd_sqrt_factor(const Matrix& g);

/// Upper-triangular Z with Z^T Z = M^T M, from a Householder QR of M. Avoids
/// forming M^T M when the Gram matrix is only known through M.
Matrix psd_sqrt_factor_qr(const Matrix& m);

}  // namespace linalg
}  // namespace aggbfgs
