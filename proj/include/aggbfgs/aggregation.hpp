#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "aggbfgs/bfgs_forms.hpp"
#include "aggbfgs/linalg.hpp"

namespace aggbfgs {

/// Intermediates of the aggregation construction for one removed pair.
///
/// Indexing follows the retained suffix: column k of S, Y is the (k+1)-th
/// pair after the removed one, so there are m retained pairs and m - 1
/// unknown columns of A.
struct AggregationWorkspace {
  Vector tau;    ///< s_removed = S tau
  double rho0 = 0.0;
  double chi0 = 0.0;  ///< 1 + rho0 * y0^T W y0 (W the prefix model)
  Matrix sty;    ///< S^T Y
  Vector sty0;   ///< S^T y0
  Matrix p;      ///< upper triangle of S^T Y without its last column
  Vector b;
  Matrix a;      ///< m x (m-1)
  std::vector<Vector> a1;
  std::vector<Vector> a2;
  Matrix q;      ///< S^T W^{-1} S
  Matrix q_lower;  ///< Cholesky factor of Q
  Matrix l;      ///< L^T L = Q^{-1}, L = q_lower^{-1}
  Matrix omega_mat;
  Matrix omega_hat;  ///< L Omega
  Vector omega;
  Matrix z;      ///< Z^T Z = omega omega^T + Omega^T Q^{-1} Omega
  std::vector<Vector> beta;
  std::vector<double> lambda;
  std::vector<Index> rank;
  std::vector<Matrix> null_basis;
  std::vector<Vector> zeta;
  Matrix phi;     ///< columns L (Q a_l + Omega_l)
  Matrix winv_s;  ///< W^{-1} S for the prefix model
};

struct AggregationResult {
  /// Aggregated gradient displacements of the pairs after the removed one,
  /// oldest first; the last column equals the newest y bitwise.
  Matrix y_tilde;
  std::size_t removed_index = 0;
  AggregationWorkspace workspace;
};

struct AggregationOptions {
  /// Relative tolerance of the dependence precondition.
  double dependence_tol = 1e-8;
  /// Discriminants in [-clamp * scale, 0) are treated as zero.
  double discriminant_clamp = 1e-6;
  /// Optional factor of Q = S^T W^{-1} S for the retained suffix.
  std::optional<linalg::CholeskyFactor> q_factor;
};

/// Drops pair j when s_j = tau * s_{j+1}. Throws NotParallel when the
/// displacements are not parallel to 1e-10 relative.
PairList skip_parallel(PairView pairs, std::size_t j, double tau);

/// b = -rho0 (S^T Y_{:,0:m-1} - P)^T tau.
Vector compute_b(const Matrix& sty, const Matrix& p, const Vector& tau, double rho0);

/// Fills ws.a, ws.a1, ws.a2 and the construction diagnostics. Requires sty,
/// sty0, p, b, q and rho0 to be set.
Matrix compute_A(AggregationWorkspace& ws, const AggregationOptions& options = {});

/// Removes pair j of `pairs` (oldest first, newest last) whose displacement
/// satisfies s_j = [s_{j+1} ... s_last] tau, and returns the gradient
/// displacements that make the shorter list generate the same BFGS matrix
/// from `w`.
AggregationResult aggregate(const InitialMatrix& w, PairView pairs, std::size_t j,
                            const Vector& tau, const AggregationOptions& options = {});

/// The pair list after applying an aggregation result.
PairList apply_aggregation(PairView pairs, const AggregationResult& result);

/// Relative residuals of the three simplified key equations and of the
/// curvature identity s_i^T ytilde_i = s_i^T y_i.
struct KeyResiduals {
  double triangular = 0.0;
  double b = 0.0;
  double quadratic = 0.0;
  double curvature = 0.0;
};

KeyResiduals key_equation_residuals(const InitialMatrix& w, PairView pairs,
                                    const AggregationResult& result);

}  // namespace aggbfgs
