#include "aggbfgs/pairs.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/QR>

namespace aggbfgs {

namespace {

constexpr int kRefreshInterval = 50;
constexpr double kRefreshTolerance = 1e-10;

double relative_diff(const Matrix& a, const Matrix& b) {
  const double scale = linalg::max_abs(b);
  const double diff = linalg::max_abs(a - b);
  return scale > 0.0 ? diff / scale : diff;
}

}  // namespace

PairStore::PairStore(InitialMatrix w, std::size_t capacity)
    : w_(std::move(w)), capacity_(capacity) {
  if (capacity_ == 0) {
    throw Error(ErrorCode::InvalidInput, "pair store capacity must be >= 1");
  }
}

bool PairStore::full() const noexcept {
  return pairs_.size() >= std::min<std::size_t>(capacity_, static_cast<std::size_t>(dim()));
}

Vector PairStore::cross_products(const Vector& s) const {
  const std::size_t m = pairs_.size();
  Vector cross(static_cast<Index>(m));
  for (std::size_t k = 0; k < m; ++k) {
    cross(static_cast<Index>(k)) = s.dot(pairs_[m - 1 - k].s);
  }
  return cross;
}

DependenceReport PairStore::observe(const CurvaturePair& pair) const {
  if (pair.s.size() != dim() || pair.y.size() != dim()) {
    throw Error(ErrorCode::ShapeMismatch, "pair dimension differs from store");
  }
  const double sy = pair.s.dot(pair.y);
  if (!(sy > 0.0) || !std::isfinite(sy)) {
    throw Error(ErrorCode::CurvatureViolation,
                "s^T y = " + std::to_string(sy) + " is not positive");
  }
  return classify(pair.s);
}

DependenceReport PairStore::classify(const Vector& s) const {
  const Index m = static_cast<Index>(pairs_.size());
  const auto outcome = linalg::chol_append(gram_, cross_products(s), s.squaredNorm());

  DependenceReport report;
  Index i = 0;
  Matrix xi;
  Vector xi_row;
  double residual_sq = 0.0;
  if (outcome.status == linalg::DowndateOutcome::Status::Completed) {
    if (m < dim() || m == 0) {
      report.kind = DependenceReport::Case::Independent;
      report.factor_rows = outcome.factor.lower();
      return report;
    }
    // m == dim: the downdate survived the threshold only through rounding.
    const Matrix& aug = outcome.factor.lower();
    i = m;
    xi = aug.topLeftCorner(m, m);
    xi_row = aug.row(m).head(m).transpose();
    residual_sq = aug(m, m) * aug(m, m);
  } else {
    i = outcome.breakdown_index;
    xi = outcome.factor.lower();
    xi_row = outcome.cross;
    residual_sq = outcome.residual_sq;
  }

  report.tau = linalg::tri_solve(xi, xi_row, linalg::TriangularSide::Transpose);
  report.j = static_cast<std::size_t>(m - i);
  report.kind = i == 1 ? DependenceReport::Case::ParallelNewest
                       : DependenceReport::Case::InSpan;
  report.factor_rows = Matrix::Zero(i + 1, i + 1);
  report.factor_rows.topLeftCorner(i, i) = xi;
  report.factor_rows.row(i).head(i) = xi_row.transpose();
  report.factor_rows(i, i) = std::sqrt(std::max(residual_sq, 0.0));
  return report;
}

ProjectionTest PairStore::project(std::size_t j, const Vector& new_s,
                                  double tol) const {
  if (new_s.size() != dim() || new_s.squaredNorm() == 0.0) {
    throw Error(ErrorCode::DegenerateSpan, "spanning set is empty");
  }
  return project(j, new_s, tol, classify(new_s));
}

ProjectionTest PairStore::project(std::size_t j, const Vector& new_s, double tol,
                                  const DependenceReport& observed) const {
  const std::size_t m = pairs_.size();
  if (j >= m) {
    throw Error(ErrorCode::InvalidInput, "projection index must precede the newest pair");
  }
  if (!(tol > 0.0 && tol < 1.0)) {
    throw Error(ErrorCode::InvalidInput, "projection tolerance must lie in (0, 1)");
  }
  if (new_s.size() != dim() || new_s.squaredNorm() == 0.0) {
    throw Error(ErrorCode::DegenerateSpan, "spanning set is empty");
  }

  // Spanning columns, newest first: [s_new, s_{m-1}, ..., s_{j+1}].
  const Index p = static_cast<Index>(m - j);
  Matrix basis(dim(), p);
  basis.col(0) = new_s;
  for (Index k = 1; k < p; ++k) basis.col(k) = pairs_[m - static_cast<std::size_t>(k)].s;
  const Vector& target = pairs_[j].s;

  Vector coeff;
  const Matrix& rows = observed.factor_rows;
  if (p < rows.rows()) {
    // Leading block factors basis^T basis; row p holds basis^T s_j.
    const Matrix lead = rows.topLeftCorner(p, p);
    const Vector ell = rows.row(p).head(p).transpose();
    coeff = linalg::tri_solve(lead, ell, linalg::TriangularSide::Transpose);
  } else {
    // The spanning set itself is dependent; fall back to least squares.
    coeff = basis.colPivHouseholderQr().solve(target);
  }

  ProjectionTest out;
  out.s_hat = basis * coeff;
  out.coefficients = coeff.reverse();
  out.residual = (target - out.s_hat).norm();
  const double hat_norm = out.s_hat.norm();
  out.accept = hat_norm > 0.0 && out.residual <= tol * hat_norm;
  return out;
}

void PairStore::push_back(CurvaturePair pair) {
  if (full()) {
    throw Error(ErrorCode::InvalidInput, "pair store is full");
  }
  if (pair.s.size() != dim() || pair.y.size() != dim()) {
    throw Error(ErrorCode::ShapeMismatch, "pair dimension differs from store");
  }
  if (!(pair.rho > 0.0) || !std::isfinite(pair.rho)) {
    throw Error(ErrorCode::CurvatureViolation, "pair has nonpositive curvature");
  }
  const auto outcome = linalg::chol_append(gram_, cross_products(pair.s),
                                           pair.s.squaredNorm());
  if (outcome.status != linalg::DowndateOutcome::Status::Completed) {
    throw Error(ErrorCode::DependenceViolation,
                "new displacement depends on stored ones");
  }
  const Vector winv_s = w_.apply_inverse(pair.s);
  Vector q_cross(static_cast<Index>(pairs_.size()));
  for (std::size_t k = 0; k < pairs_.size(); ++k) {
    q_cross(static_cast<Index>(k)) = pairs_[k].s.dot(winv_s);
  }
  linalg::CholeskyFactor q = q_;
  try {
    q.append_last(q_cross, pair.s.dot(winv_s));
  } catch (const Error&) {
    throw Error(ErrorCode::DependenceViolation,
                "S^T W^{-1} S would lose positive definiteness");
  }
  gram_ = outcome.factor;
  q_ = std::move(q);
  pairs_.push_back(std::move(pair));
  maybe_refresh();
}

void PairStore::remove(std::size_t j) {
  const std::size_t m = pairs_.size();
  if (j >= m) {
    throw Error(ErrorCode::InvalidInput, "remove index out of range");
  }
  gram_.remove(static_cast<Index>(m - 1 - j));
  q_.remove(static_cast<Index>(j));
  pairs_.erase(pairs_.begin() + static_cast<std::ptrdiff_t>(j));
  maybe_refresh();
}

void PairStore::replace_gradients(std::size_t first, const Matrix& y) {
  const auto count = static_cast<std::size_t>(y.cols());
  if (first + count > pairs_.size() || y.rows() != dim()) {
    throw Error(ErrorCode::ShapeMismatch, "replacement gradients do not fit");
  }
  std::vector<CurvaturePair> updated;
  updated.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    updated.push_back(make_pair(pairs_[first + k].s, y.col(static_cast<Index>(k))));
  }
  for (std::size_t k = 0; k < count; ++k) pairs_[first + k] = std::move(updated[k]);
}

void PairStore::clear() {
  pairs_.clear();
  gram_ = linalg::CholeskyFactor();
  q_ = linalg::CholeskyFactor();
  edits_since_check_ = 0;
}

namespace {

Matrix gram_newest_first(const PairList& pairs, Index n) {
  const std::size_t m = pairs.size();
  Matrix s(n, static_cast<Index>(m));
  for (std::size_t k = 0; k < m; ++k) s.col(static_cast<Index>(k)) = pairs[m - 1 - k].s;
  return s.transpose() * s;
}

Matrix q_matrix(const PairList& pairs, const InitialMatrix& w) {
  const std::size_t m = pairs.size();
  Matrix s(w.dim(), static_cast<Index>(m));
  for (std::size_t k = 0; k < m; ++k) s.col(static_cast<Index>(k)) = pairs[k].s;
  const Matrix q = s.transpose() * w.apply_inverse(s);
  return 0.5 * (q + q.transpose());
}

}  // namespace

double PairStore::gram_drift() const {
  if (pairs_.empty()) return 0.0;
  const auto scratch = linalg::cholesky_factor(gram_newest_first(pairs_, dim()));
  return relative_diff(gram_.lower(), scratch.lower());
}

double PairStore::q_drift() const {
  if (pairs_.empty()) return 0.0;
  const auto scratch = linalg::cholesky_factor(q_matrix(pairs_, w_));
  return relative_diff(q_.lower(), scratch.lower());
}

void PairStore::maybe_refresh() {
  if (++edits_since_check_ < kRefreshInterval) return;
  edits_since_check_ = 0;
  if (pairs_.empty()) return;
  try {
    const auto gram = linalg::cholesky_factor(gram_newest_first(pairs_, dim()));
    if (!(relative_diff(gram_.lower(), gram.lower()) <= kRefreshTolerance)) gram_ = gram;
    const auto q = linalg::cholesky_factor(q_matrix(pairs_, w_));
    if (!(relative_diff(q_.lower(), q.lower()) <= kRefreshTolerance)) q_ = q;
  } catch (const Error&) {
    // A from-scratch factorization that fails is no better than the
    // maintained one; keep it.
  }
}

DependenceReport observe_pair(const PairStore& store, const CurvaturePair& pair) {
  return store.observe(pair);
}

ProjectionTest project_test(const PairStore& store, std::size_t j,
                            const Vector& new_s, double tol) {
  return store.project(j, new_s, tol);
}

}  // namespace aggbfgs
