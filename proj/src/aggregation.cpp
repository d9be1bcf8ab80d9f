#include "aggbfgs/aggregation.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/QR>

namespace aggbfgs {

namespace {

constexpr double kParallelTol = 1e-10;

Matrix stack_columns(PairView pairs, std::size_t first, std::size_t last, bool take_s) {
  const Index n = pairs.empty() ? 0 : pairs.front().s.size();
  Matrix out(n, static_cast<Index>(last - first));
  for (std::size_t k = first; k < last; ++k) {
    out.col(static_cast<Index>(k - first)) = take_s ? pairs[k].s : pairs[k].y;
  }
  return out;
}

Matrix upper_part(const Matrix& m) {
  Matrix u = Matrix::Zero(m.rows(), m.cols());
  for (Index c = 0; c < m.cols(); ++c) {
    const Index rows = std::min(c + 1, m.rows());
    u.col(c).head(rows) = m.col(c).head(rows);
  }
  return u;
}

double relative(double diff, double scale) {
  return scale > 0.0 ? diff / scale : diff;
}

void check_suffix(PairView pairs, std::size_t j) {
  if (pairs.size() < 2 || j + 1 >= pairs.size()) {
    throw Error(ErrorCode::InvalidInput,
                "removed index must precede the newest pair");
  }
}

}  // namespace

PairList skip_parallel(PairView pairs, std::size_t j, double tau) {
  check_suffix(pairs, j);
  const Vector& sj = pairs[j].s;
  const double residual = (sj - tau * pairs[j + 1].s).norm();
  if (tau == 0.0 || residual > kParallelTol * sj.norm()) {
    throw Error(ErrorCode::NotParallel,
                "s_j is not a multiple of s_{j+1} (residual " +
                    std::to_string(residual) + ")");
  }
  PairList out;
  out.reserve(pairs.size() - 1);
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    if (k != j) out.push_back(pairs[k]);
  }
  return out;
}

Vector compute_b(const Matrix& sty, const Matrix& p, const Vector& tau, double rho0) {
  const Index m = sty.rows();
  if (m <= 1) return Vector(0);
  return -rho0 * (sty.leftCols(m - 1) - p).transpose() * tau;
}

Matrix compute_A(AggregationWorkspace& ws, const AggregationOptions& options) {
  const Index m = ws.sty.rows();
  ws.a = Matrix(m, std::max<Index>(m - 1, 0));
  ws.a1.clear();
  ws.a2.clear();
  ws.beta.clear();
  ws.lambda.clear();
  ws.rank.clear();
  ws.null_basis.clear();
  ws.zeta.clear();
  if (m <= 1) return ws.a;

  const linalg::CholeskyFactor qf =
      options.q_factor ? *options.q_factor : linalg::cholesky_factor(ws.q);
  ws.q_lower = qf.lower();
  ws.l = qf.lower().triangularView<Eigen::Lower>().solve(Matrix::Identity(m, m));

  const Index cols = m - 1;
  ws.a1.resize(static_cast<std::size_t>(cols));
  ws.a2.resize(static_cast<std::size_t>(cols));
  ws.beta.resize(static_cast<std::size_t>(cols));
  ws.lambda.assign(static_cast<std::size_t>(cols), 0.0);
  ws.rank.assign(static_cast<std::size_t>(cols), 0);
  ws.null_basis.resize(static_cast<std::size_t>(cols));
  ws.zeta.resize(static_cast<std::size_t>(cols));

  std::vector<Vector> r(static_cast<std::size_t>(cols));
  for (Index l = 0; l < cols; ++l) {
    const auto k = static_cast<std::size_t>(l);
    ws.a1[k] = -ws.b(l) * ws.sty0.head(l + 1);
    r[k] = ws.b(l) * ws.sty0.tail(m - l - 1) + ws.sty.col(l).tail(m - l - 1);
  }

  ws.omega_mat = ws.sty0 * ws.b.transpose() + ws.sty.leftCols(cols) - ws.p;
  ws.omega = ws.b / std::sqrt(ws.rho0);
  const auto lq = qf.lower().triangularView<Eigen::Lower>();
  ws.omega_hat = lq.solve(ws.omega_mat);

  // Z^T Z = omega omega^T + Omega^T Q^{-1} Omega = M^T M.
  Matrix stacked_m(m + 1, cols);
  stacked_m.row(0) = ws.omega.transpose();
  stacked_m.bottomRows(m) = ws.omega_hat;
  ws.z = linalg::psd_sqrt_factor_qr(stacked_m);

  // Column l holds phi_l = L [0; a_{l,2} + r_l], whose first l + 1 entries
  // vanish because L is lower triangular.
  Matrix phi = Matrix::Zero(m, cols);
  std::vector<Vector> directions(static_cast<std::size_t>(cols));
  for (Index l = cols - 1; l >= 0; --l) {
    const auto k = static_cast<std::size_t>(l);
    const Vector zl = ws.z.col(l);
    const Matrix later = phi.middleCols(l + 1, cols - l - 1);

    const auto reveal = linalg::pivoted_rank(later);
    const Index c = reveal.rank;
    ws.rank[k] = c;
    Vector pvec = Vector::Zero(m);
    double deficit = zl.squaredNorm();
    if (c > 0) {
      Matrix phi_c(m, c);
      Matrix z_c(ws.z.rows(), c);
      for (Index t = 0; t < c; ++t) {
        const Index col = reveal.pivots[static_cast<std::size_t>(t)];
        phi_c.col(t) = later.col(col);
        z_c.col(t) = ws.z.col(l + 1 + col);
      }
      // phi_c^T phi_c = z_c^T z_c, so the normal equations for beta are those
      // of a least-squares fit of z_l by z_c.
      ws.beta[k] = z_c.householderQr().solve(zl);
      deficit = (zl - z_c * ws.beta[k]).squaredNorm();
      pvec = phi_c * ws.beta[k];
      pvec.head(l + 1).setZero();
    } else {
      ws.beta[k] = Vector(0);
    }

    const Matrix basis = linalg::qr_null_basis(later);
    const Matrix combos = linalg::qr_null_basis(basis.topRows(l + 1).transpose());
    if (combos.cols() == 0) {
      throw Error(ErrorCode::ConstructionFailure,
                  "no null direction with the required leading zeros");
    }
    ws.null_basis[k] = basis;
    ws.zeta[k] = combos.col(0);
    Vector qvec = basis * ws.zeta[k];
    qvec.head(l + 1).setZero();

    // ||phi_l||^2 = ||z_l||^2 as a quadratic in lambda. Its constant term
    // ||p||^2 - ||z_l||^2 equals -||z_l - z_c beta||^2.
    const double alpha = qvec.squaredNorm();
    const double cross = pvec.dot(qvec);
    if (!(alpha > 0.0)) {
      throw Error(ErrorCode::ConstructionFailure, "null direction has zero length");
    }
    double disc = cross * cross + alpha * deficit;
    if (disc < 0.0) {
      const double scale = std::max(cross * cross, alpha * zl.squaredNorm());
      if (disc < -options.discriminant_clamp * scale) {
        throw Error(ErrorCode::ConstructionFailure,
                    "negative discriminant " + std::to_string(disc));
      }
      disc = 0.0;
    }
    const double sign = cross >= 0.0 ? 1.0 : -1.0;
    const double qq = -(cross + sign * std::sqrt(disc));
    const double lambda = qq != 0.0 ? -deficit / qq : 0.0;
    ws.lambda[k] = lambda;
    directions[k] = qvec;
    phi.col(l) = pvec + lambda * qvec;
  }

  // The two roots of every quadratic differ only in sign, and each sign
  // flips one row of phi. Pick the rows that keep the correction
  // phi - L Omega smallest.
  for (Index i = 1; i < m; ++i) {
    if (phi.row(i).dot(ws.omega_hat.row(i)) < 0.0) {
      phi.row(i) *= -1.0;
      const auto k = static_cast<std::size_t>(i - 1);
      ws.lambda[k] = -ws.lambda[k];
    }
  }

  for (Index l = 0; l < cols; ++l) {
    const auto k = static_cast<std::size_t>(l);
    const Vector u = lq * phi.col(l);
    ws.a2[k] = u.tail(m - l - 1) - r[k];
    Vector stacked(m);
    stacked << ws.a1[k], ws.a2[k];
    ws.a.col(l) = qf.solve(stacked);
  }
  ws.phi = phi;
  return ws.a;
}

AggregationResult aggregate(const InitialMatrix& w, PairView pairs, std::size_t j,
                            const Vector& tau, const AggregationOptions& options) {
  check_suffix(pairs, j);
  check_pairs(w, pairs);
  const std::size_t total = pairs.size();
  const auto m = static_cast<Index>(total - j - 1);
  if (tau.size() != m) {
    throw Error(ErrorCode::ShapeMismatch, "tau must have one entry per retained pair");
  }

  const Matrix s = stack_columns(pairs, j + 1, total, true);
  const Matrix y = stack_columns(pairs, j + 1, total, false);
  const CurvaturePair& removed = pairs[j];
  const double residual = (removed.s - s * tau).norm();
  if (!(residual <= options.dependence_tol * removed.s.norm())) {
    throw Error(ErrorCode::DependenceViolation,
                "removed displacement is not in the span of later ones (residual " +
                    std::to_string(residual) + ")");
  }

  AggregationResult result;
  result.removed_index = j;
  AggregationWorkspace& ws = result.workspace;
  ws.tau = tau;
  ws.rho0 = removed.rho;
  const PairView prefix = pairs.first(j);
  ws.chi0 = 1.0 + removed.rho * removed.y.dot(two_loop_apply(w, prefix, removed.y));

  if (m == 1) {
    result.y_tilde = y;
    ws.a = Matrix(1, 0);
    ws.b = Vector(0);
    return result;
  }

  AggregationOptions local = options;
  Matrix basis;
  if (j == 0) {
    // Thin QR of W^{-1/2} S: R^T R = Q and W^{-1/2} Q_thin = W^{-1} S R^{-1}.
    const Eigen::HouseholderQR<Matrix> qr(w.apply_inverse_sqrt(s));
    Matrix r = qr.matrixQR().topRows(m).triangularView<Eigen::Upper>();
    Matrix thin = qr.householderQ() * Matrix::Identity(s.rows(), m);
    for (Index c = 0; c < m; ++c) {
      if (r(c, c) < 0.0) {
        r.row(c) *= -1.0;
        thin.col(c) *= -1.0;
      }
    }
    basis = w.apply_inverse_sqrt(thin);
    ws.winv_s = w.apply_inverse(s);
    ws.q = r.transpose() * r;
    local.q_factor = linalg::CholeskyFactor(r.transpose());
  } else {
    ws.winv_s = direct_apply(w, prefix, s);
    ws.q = s.transpose() * ws.winv_s;
    ws.q = 0.5 * (ws.q + ws.q.transpose()).eval();
    if (j != 0) local.q_factor.reset();
  }
  ws.sty = s.transpose() * y;
  ws.sty0 = s.transpose() * removed.y;
  ws.p = upper_part(ws.sty.leftCols(m - 1));
  ws.b = compute_b(ws.sty, ws.p, tau, ws.rho0);

  compute_A(ws, local);
  if (basis.size() == 0) {
    basis = ws.q_lower.triangularView<Eigen::Lower>().solve(ws.winv_s.transpose()).transpose();
  }

  result.y_tilde = y;
  result.y_tilde.leftCols(m - 1).noalias() += basis * (ws.phi - ws.omega_hat);
  result.y_tilde.leftCols(m - 1).noalias() += removed.y * ws.b.transpose();
  return result;
}

PairList apply_aggregation(PairView pairs, const AggregationResult& result) {
  const std::size_t j = result.removed_index;
  check_suffix(pairs, j);
  if (static_cast<std::size_t>(result.y_tilde.cols()) != pairs.size() - j - 1) {
    throw Error(ErrorCode::ShapeMismatch, "aggregation result does not fit the pairs");
  }
  PairList out;
  out.reserve(pairs.size() - 1);
  for (std::size_t k = 0; k < j; ++k) out.push_back(pairs[k]);
  for (std::size_t k = j + 1; k < pairs.size(); ++k) {
    const auto col = static_cast<Index>(k - j - 1);
    out.push_back(make_pair(pairs[k].s, result.y_tilde.col(col)));
  }
  return out;
}

KeyResiduals key_equation_residuals(const InitialMatrix& w, PairView pairs,
                                    const AggregationResult& result) {
  const std::size_t j = result.removed_index;
  check_suffix(pairs, j);
  const std::size_t total = pairs.size();
  const auto m = static_cast<Index>(total - j - 1);
  const Matrix s = stack_columns(pairs, j + 1, total, true);
  const Matrix y = stack_columns(pairs, j + 1, total, false);
  const Matrix& yt = result.y_tilde;
  const AggregationWorkspace& ws = result.workspace;
  const CurvaturePair& removed = pairs[j];

  KeyResiduals out;
  const Matrix sty = s.transpose() * y;
  const Matrix styt = s.transpose() * yt;
  double worst = 0.0;
  for (Index i = 0; i < m; ++i) {
    worst = std::max(worst, std::abs(styt(i, i) - sty(i, i)) / std::abs(sty(i, i)));
  }
  out.curvature = worst;
  if (m == 1) return out;

  const Matrix r_full = upper_part(sty);
  out.triangular = relative(linalg::max_abs(upper_part(styt) - r_full), linalg::max_abs(r_full));

  Vector b_full = Vector::Zero(m);
  b_full.head(m - 1) = ws.b;
  const Vector b_ref = -removed.rho * (sty - r_full).transpose() * ws.tau;
  out.b = relative((b_full - b_ref).cwiseAbs().maxCoeff(), b_ref.cwiseAbs().maxCoeff());

  const PairView prefix = pairs.first(j);
  const Matrix diff = (yt - y).leftCols(m - 1);
  Matrix w_diff(diff.rows(), diff.cols());
  for (Index c = 0; c < diff.cols(); ++c) w_diff.col(c) = two_loop_apply(w, prefix, diff.col(c));
  const Matrix lhs = diff.transpose() * w_diff;
  const Matrix bb = (ws.chi0 / ws.rho0) * ws.b * ws.b.transpose();
  // A = L^T (phi - L Omega) with L = q_lower^{-1}, so A^T (Omega - S^T y0 b^T)
  // is evaluated in whitened form instead of through two solves with Q.
  const auto lq = ws.q_lower.triangularView<Eigen::Lower>();
  const Vector y0_hat = lq.solve(ws.sty0);
  const Matrix correction = ws.phi - ws.omega_hat;
  const Matrix whitened_x = ws.omega_hat - y0_hat * ws.b.transpose();
  const Matrix cross = correction.transpose() * whitened_x;
  const Matrix rhs = bb - cross - cross.transpose();
  // Normwise relative residual: each product is measured against the norms of
  // its factors.
  const double scale =
      lhs.trace() + bb.norm() + 2.0 * correction.norm() * whitened_x.norm();
  out.quadratic = relative((lhs - rhs).norm(), scale);
  return out;
}

}  // namespace aggbfgs
