#pragma once

#include <cstddef>

#include "aggbfgs/bfgs_forms.hpp"
#include "aggbfgs/linalg.hpp"

namespace aggbfgs {

/// How a new iterate displacement relates to the stored ones.
struct DependenceReport {
  enum class Case { Independent, ParallelNewest, InSpan };

  Case kind = Case::Independent;
  /// Index (oldest first) of the stored pair whose displacement is dependent.
  /// Set for ParallelNewest (the newest pair) and InSpan.
  std::size_t j = 0;
  /// Coefficients ordered newest first: s_j = tau(0) s_new + tau(1) s_{m-1}
  /// + ... + tau(last) s_{j+1}. A single entry for ParallelNewest.
  Vector tau;
  /// Rows of the Cholesky factor of the Gram matrix of
  /// [s_new, s_{m-1}, ..., s_0] as far as they could be computed: the whole
  /// (m+1)-order factor when independent, [Xi 0; xi^T r] when the downdate
  /// broke down, r being the residual norm of the dependent vector.
  Matrix factor_rows;

  /// tau reordered oldest first, so s_j = [s_{j+1} ... s_new] * tau.
  Vector span_coefficients() const { return tau.reverse(); }
};

/// Outcome of the orthogonal projection test for one stored displacement.
struct ProjectionTest {
  bool accept = false;
  /// Orthogonal projection of s_j onto span{s_{j+1}, ..., s_new}.
  Vector s_hat;
  /// s_hat = [s_{j+1} ... s_new] * coefficients (oldest first).
  Vector coefficients;
  double residual = 0.0;  ///< ||s_j - s_hat||
};

/// Ordered curvature pairs (oldest first) with incrementally maintained
/// factorizations of the displacement Gram matrix (newest-first ordering)
/// and of Q = S^T W^{-1} S (oldest-first ordering).
class PairStore {
 public:
  PairStore(InitialMatrix w, std::size_t capacity);

  std::size_t size() const noexcept { return pairs_.size(); }
  std::size_t capacity() const noexcept { return capacity_; }
  Index dim() const noexcept { return w_.dim(); }
  bool full() const noexcept;
  const PairList& pairs() const noexcept { return pairs_; }
  const InitialMatrix& initial() const noexcept { return w_; }
  const linalg::CholeskyFactor& gram_factor() const noexcept { return gram_; }
  const linalg::CholeskyFactor& q_factor() const noexcept { return q_; }

  /// Classifies a new pair against the stored displacements without
  /// modifying the store. When the store already holds dim() pairs the new
  /// displacement must be dependent, so a completed downdate is reported as
  /// a breakdown at the last index.
  DependenceReport observe(const CurvaturePair& pair) const;

  /// Projection of stored s_j onto span{s_{j+1}, ..., s_new}; accepted when
  /// ||s_j - s_hat|| <= tol * ||s_hat||. Reuses the factor rows of a prior
  /// observe() of the same new pair when given.
  ProjectionTest project(std::size_t j, const Vector& new_s, double tol) const;
  ProjectionTest project(std::size_t j, const Vector& new_s, double tol,
                         const DependenceReport& observed) const;

  /// Appends a pair. Throws DependenceViolation if its displacement is
  /// numerically dependent on the stored ones, InvalidInput when full.
  void push_back(CurvaturePair pair);

  /// Removes pair j and updates both factorizations.
  void remove(std::size_t j);

  /// Replaces the gradient displacements of pairs first, first + 1, ... with
  /// the columns of `y`; displacements (and so both factors) are unchanged.
  void replace_gradients(std::size_t first, const Matrix& y);

  void clear();

  /// Relative max-entry differences between the maintained factors and a
  /// from-scratch refactorization.
  double gram_drift() const;
  double q_drift() const;

 private:
  Vector cross_products(const Vector& s) const;
  DependenceReport classify(const Vector& s) const;
  void maybe_refresh();

  InitialMatrix w_;
  std::size_t capacity_;
  PairList pairs_;
  linalg::CholeskyFactor gram_;
  linalg::CholeskyFactor q_;
  int edits_since_check_ = 0;
};

/// Free-function form of PairStore::observe.
DependenceReport observe_pair(const PairStore& store, const CurvaturePair& pair);

/// Free-function form of PairStore::project.
ProjectionTest project_test(const PairStore& store, std::size_t j,
                            const Vector& new_s, double tol);

}  // namespace aggbfgs
