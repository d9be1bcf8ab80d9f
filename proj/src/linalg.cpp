#include "aggbfgs/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

namespace aggbfgs {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidInput: return "InvalidInput";
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::SingularTriangular: return "SingularTriangular";
    case ErrorCode::NotPsd: return "NotPsd";
    case ErrorCode::CurvatureViolation: return "CurvatureViolation";
    case ErrorCode::DegenerateSpan: return "DegenerateSpan";
    case ErrorCode::NotParallel: return "NotParallel";
    case ErrorCode::DependenceViolation: return "DependenceViolation";
    case ErrorCode::ConstructionFailure: return "ConstructionFailure";
    case ErrorCode::NotDescent: return "NotDescent";
    case ErrorCode::NonpositiveCurvatureDirection:
      return "NonpositiveCurvatureDirection";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::ZeroReference: return "ZeroReference";
    case ErrorCode::EmptyIntersection: return "EmptyIntersection";
    case ErrorCode::UnknownProblem: return "UnknownProblem";
  }
  return "Unknown";
}

namespace linalg {

constexpr double kEps = std::numeric_limits<double>::epsilon();

double max_abs(const Eigen::Ref<const Matrix>& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

CholeskyFactor::CholeskyFactor(Matrix lower) : lower_(std::move(lower)) {
  if (lower_.rows() != lower_.cols()) {
    throw Error(ErrorCode::InvalidInput, "Cholesky factor must be square");
  }
  for (Index j = 0; j < lower_.cols(); ++j) {
    if (!(lower_(j, j) > 0.0)) {
      throw Error(ErrorCode::InvalidInput,
                  "Cholesky factor needs a positive diagonal");
    }
    for (Index i = 0; i < j; ++i) {
      if (lower_(i, j) != 0.0) {
        throw Error(ErrorCode::InvalidInput,
                    "Cholesky factor must be lower triangular");
      }
    }
  }
}

Matrix CholeskyFactor::reconstruct() const {
  return lower_ * lower_.transpose();
}

Vector CholeskyFactor::solve(const Vector& rhs) const {
  Vector x = lower_.triangularView<Eigen::Lower>().solve(rhs);
  lower_.transpose().triangularView<Eigen::Upper>().solveInPlace(x);
  return x;
}

Matrix CholeskyFactor::solve(const Matrix& rhs) const {
  Matrix x = lower_.triangularView<Eigen::Lower>().solve(rhs);
  lower_.transpose().triangularView<Eigen::Upper>().solveInPlace(x);
  return x;
}

void CholeskyFactor::append_last(const Vector& cross, double self) {
  const Index m = order();
  if (cross.size() != m) {
    throw Error(ErrorCode::ShapeMismatch, "append_last cross vector size");
  }
  Vector l = m == 0 ? Vector() : tri_solve(lower_, cross, TriangularSide::Forward);
  const double d2 = self - (m == 0 ? 0.0 : l.squaredNorm());
  if (!(d2 > kBreakdownThreshold * self)) {
    throw Error(ErrorCode::NotPositiveDefinite,
                "bordered matrix is numerically singular");
  }
  Matrix grown = Matrix::Zero(m + 1, m + 1);
  grown.topLeftCorner(m, m) = lower_;
  if (m > 0) grown.row(m).head(m) = l.transpose();
  grown(m, m) = std::sqrt(d2);
  lower_ = std::move(grown);
}

void CholeskyFactor::remove(Index k) {
  const Index m = order();
  if (k < 0 || k >= m) {
    throw Error(ErrorCode::InvalidInput, "remove index out of range");
  }
  const Index tail = m - k - 1;
  Matrix shrunk = Matrix::Zero(m - 1, m - 1);
  shrunk.topLeftCorner(k, k) = lower_.topLeftCorner(k, k);
  shrunk.bottomLeftCorner(tail, k) = lower_.bottomLeftCorner(tail, k);
  Matrix t = lower_.bottomRightCorner(tail, tail);
  Vector x = lower_.col(k).tail(tail);
  // Rank-one update t t^T + x x^T.
  for (Index c = 0; c < tail; ++c) {
    const double r = std::hypot(t(c, c), x(c));
    const double cs = r / t(c, c);
    const double sn = x(c) / t(c, c);
    t(c, c) = r;
    for (Index i = c + 1; i < tail; ++i) {
      t(i, c) = (t(i, c) + sn * x(i)) / cs;
      x(i) = cs * x(i) - sn * t(i, c);
    }
  }
  shrunk.bottomRightCorner(tail, tail) = t;
  lower_ = std::move(shrunk);
}

CholeskyFactor cholesky_factor(const Matrix& gram) {
  if (gram.rows() != gram.cols()) {
    throw Error(ErrorCode::ShapeMismatch, "Gram matrix must be square");
  }
  if (!gram.allFinite()) {
    throw Error(ErrorCode::InvalidInput, "Gram matrix has non-finite entries");
  }
  const double scale = max_abs(gram);
  if (max_abs(gram - gram.transpose()) > 1e-12 * scale) {
    throw Error(ErrorCode::InvalidInput, "Gram matrix is not symmetric");
  }
  const Index m = gram.rows();
  Matrix l = Matrix::Zero(m, m);
  for (Index j = 0; j < m; ++j) {
    double d2 = gram(j, j);
    for (Index k = 0; k < j; ++k) d2 -= l(j, k) * l(j, k);
    if (!(d2 > kBreakdownThreshold * gram(j, j))) {
      throw Error(ErrorCode::NotPositiveDefinite,
                  "pivot " + std::to_string(j) + " is not positive");
    }
    const double d = std::sqrt(d2);
    l(j, j) = d;
    for (Index i = j + 1; i < m; ++i) {
      double v = gram(i, j);
      for (Index k = 0; k < j; ++k) v -= l(i, k) * l(j, k);
      l(i, j) = v / d;
    }
  }
  return CholeskyFactor(std::move(l));
}

DowndateOutcome chol_append(const CholeskyFactor& old, const Vector& cross,
                            double self) {
  const Index m = old.order();
  if (cross.size() != m) {
    throw Error(ErrorCode::ShapeMismatch, "chol_append cross vector size");
  }
  if (!(self > 0.0) || !std::isfinite(self)) {
    throw Error(ErrorCode::InvalidInput, "new vector has zero norm");
  }
  const double mu = std::sqrt(self);
  const Vector delta = cross / mu;

  // Downdate Theta Theta^T - delta delta^T column by column.
  Matrix l = old.lower();
  const Vector gram_diag = l.rowwise().squaredNorm();
  Vector x = delta;
  for (Index k = 0; k < m; ++k) {
    const double pre = l(k, k) * l(k, k);
    const double r2 = pre - x(k) * x(k);
    if (!(r2 > kBreakdownThreshold * gram_diag(k))) {
      // Columns < k of l are final, so the leading (k+1)-block of the
      // augmented factor and the k-th row are available.
      const Index i = k + 1;
      DowndateOutcome out;
      out.status = DowndateOutcome::Status::Breakdown;
      out.breakdown_index = i;
      out.residual_sq = r2;
      Matrix xi = Matrix::Zero(i, i);
      xi(0, 0) = mu;
      xi.block(1, 0, k, 1) = delta.head(k);
      xi.bottomRightCorner(k, k) =
          l.topLeftCorner(k, k).triangularView<Eigen::Lower>();
      out.factor = CholeskyFactor(std::move(xi));
      out.cross.resize(i);
      out.cross(0) = delta(k);
      out.cross.tail(k) = l.row(k).head(k).transpose();
      return out;
    }
    const double r = std::sqrt(r2);
    const double cs = r / l(k, k);
    const double sn = x(k) / l(k, k);
    l(k, k) = r;
    for (Index i = k + 1; i < m; ++i) {
      l(i, k) = (l(i, k) - sn * x(i)) / cs;
      x(i) = cs * x(i) - sn * l(i, k);
    }
  }

  Matrix aug = Matrix::Zero(m + 1, m + 1);
  aug(0, 0) = mu;
  aug.col(0).tail(m) = delta;
  aug.bottomRightCorner(m, m) = l.triangularView<Eigen::Lower>();
  DowndateOutcome out;
  out.status = DowndateOutcome::Status::Completed;
  out.factor = CholeskyFactor(std::move(aug));
  return out;
}

Vector tri_solve(const Matrix& t, const Vector& rhs, TriangularSide side) {
  const Index n = t.rows();
  if (t.cols() != n || rhs.size() != n) {
    throw Error(ErrorCode::ShapeMismatch, "tri_solve dimensions");
  }
  for (Index i = 0; i < n; ++i) {
    if (t(i, i) == 0.0) {
      throw Error(ErrorCode::SingularTriangular,
                  "zero diagonal entry at " + std::to_string(i));
    }
  }
  Vector x = rhs;
  switch (side) {
    case TriangularSide::Forward:
      for (Index i = 0; i < n; ++i) {
        double v = x(i);
        for (Index k = 0; k < i; ++k) v -= t(i, k) * x(k);
        x(i) = v / t(i, i);
      }
      break;
    case TriangularSide::Backward:
      for (Index i = n - 1; i >= 0; --i) {
        double v = x(i);
        for (Index k = i + 1; k < n; ++k) v -= t(i, k) * x(k);
        x(i) = v / t(i, i);
      }
      break;
    case TriangularSide::Transpose:
      for (Index i = n - 1; i >= 0; --i) {
        double v = x(i);
        for (Index k = i + 1; k < n; ++k) v -= t(k, i) * x(k);
        x(i) = v / t(i, i);
      }
      break;
  }
  return x;
}

namespace {

Eigen::ColPivHouseholderQR<Matrix> pivoted_qr(const Matrix& m) {
  Eigen::ColPivHouseholderQR<Matrix> qr(m.rows(), m.cols());
  qr.setThreshold(static_cast<double>(std::max(m.rows(), m.cols())) * kEps);
  qr.compute(m);
  return qr;
}

}  // namespace

Matrix qr_null_basis(const Matrix& mt) {
  if (!mt.allFinite()) {
    throw Error(ErrorCode::InvalidInput, "qr_null_basis input is not finite");
  }
  const Index rows = mt.rows();
  if (mt.cols() == 0 || max_abs(mt) == 0.0) {
    return Matrix::Identity(rows, rows);
  }
  const auto qr = pivoted_qr(mt);
  const Index rank = qr.rank();
  Matrix q = qr.householderQ() * Matrix::Identity(rows, rows);
  return q.rightCols(rows - rank);
}

RankReveal pivoted_rank(const Matrix& m) {
  RankReveal out;
  if (m.cols() == 0) return out;
  if (max_abs(m) == 0.0) {
    out.pivots.resize(static_cast<std::size_t>(m.cols()));
    for (Index j = 0; j < m.cols(); ++j) out.pivots[static_cast<std::size_t>(j)] = j;
    return out;
  }
  const auto qr = pivoted_qr(m);
  out.rank = qr.rank();
  const auto& perm = qr.colsPermutation().indices();
  out.pivots.assign(perm.data(), perm.data() + perm.size());
  return out;
}

Matrix psd_sqrt_factor(const Matrix& g) {
  if (g.rows() != g.cols()) {
    throw Error(ErrorCode::ShapeMismatch, "psd_sqrt_factor needs a square matrix");
  }
  const Index n = g.rows();
  const double scale = max_abs(g);
  if (scale == 0.0) return Matrix::Zero(n, n);
  const Matrix sym = 0.5 * (g + g.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
  if (eig.info() != Eigen::Success) {
    throw Error(ErrorCode::NotPsd, "eigendecomposition failed");
  }
  Vector lambda = eig.eigenvalues();
  for (Index i = 0; i < n; ++i) {
    if (lambda(i) < -1e-10 * scale) {
      throw Error(ErrorCode::NotPsd,
                  "eigenvalue " + std::to_string(lambda(i)) + " below clamp");
    }
    lambda(i) = std::sqrt(std::max(lambda(i), 0.0));
  }
  return lambda.asDiagonal() * eig.eigenvectors().transpose();
}

Matrix psd_sqrt_factor_qr(const Matrix& m) {
  if (!m.allFinite()) {
    throw Error(ErrorCode::InvalidInput, "psd_sqrt_factor_qr input is not finite");
  }
  const Index cols = m.cols();
  if (m.rows() < cols) {
    Matrix padded = Matrix::Zero(cols, cols);
    padded.topRows(m.rows()) = m;
    return psd_sqrt_factor_qr(padded);
  }
  const Eigen::HouseholderQR<Matrix> qr(m);
  return qr.matrixQR().topRows(cols).triangularView<Eigen::Upper>();
}

}  // namespace linalg
}  // namespace aggbfgs
