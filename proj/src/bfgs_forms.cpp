#include "aggbfgs/bfgs_forms.hpp"

#include <cmath>
#include <string>

#include <Eigen/Cholesky>

namespace aggbfgs {

CurvaturePair make_pair(Vector s, Vector y) {
  if (s.size() != y.size()) {
    throw Error(ErrorCode::ShapeMismatch, "s and y differ in length");
  }
  if (s.squaredNorm() == 0.0) {
    throw Error(ErrorCode::InvalidInput, "zero iterate displacement");
  }
  const double sy = s.dot(y);
  if (!(sy > 0.0) || !std::isfinite(sy)) {
    throw Error(ErrorCode::CurvatureViolation,
                "s^T y = " + std::to_string(sy) + " is not positive");
  }
  return CurvaturePair{std::move(s), std::move(y), 1.0 / sy};
}

InitialMatrix InitialMatrix::scaled_identity(Index dim, double gamma) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) {
    throw Error(ErrorCode::InvalidInput, "initial scaling must be positive");
  }
  return InitialMatrix(dim, gamma, Vector());
}

InitialMatrix InitialMatrix::diagonal(Vector diag) {
  if (diag.size() == 0 || !(diag.minCoeff() > 0.0) || !diag.allFinite()) {
    throw Error(ErrorCode::InvalidInput, "initial diagonal must be positive");
  }
  const Index dim = diag.size();
  return InitialMatrix(dim, 1.0, std::move(diag));
}

Vector InitialMatrix::apply(const Vector& v) const {
  return is_scaled_identity() ? Vector(gamma_ * v) : Vector(diag_.cwiseProduct(v));
}

Matrix InitialMatrix::apply(const Matrix& v) const {
  return is_scaled_identity() ? Matrix(gamma_ * v) : Matrix(diag_.asDiagonal() * v);
}

Vector InitialMatrix::apply_inverse(const Vector& v) const {
  return is_scaled_identity() ? Vector(v / gamma_) : Vector(v.cwiseQuotient(diag_));
}

Matrix InitialMatrix::apply_inverse(const Matrix& v) const {
  return is_scaled_identity() ? Matrix(v / gamma_)
                              : Matrix(diag_.cwiseInverse().asDiagonal() * v);
}

Matrix InitialMatrix::apply_inverse_sqrt(const Matrix& v) const {
  return is_scaled_identity() ? Matrix(v / std::sqrt(gamma_))
                              : Matrix(diag_.cwiseSqrt().cwiseInverse().asDiagonal() * v);
}

Matrix InitialMatrix::dense() const {
  if (is_scaled_identity()) return gamma_ * Matrix::Identity(dim_, dim_);
  return diag_.asDiagonal();
}

void check_pairs(const InitialMatrix& w, PairView pairs) {
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& p = pairs[i];
    if (p.s.size() != w.dim() || p.y.size() != w.dim()) {
      throw Error(ErrorCode::ShapeMismatch,
                  "pair " + std::to_string(i) + " has the wrong dimension");
    }
    if (!(p.rho > 0.0) || !std::isfinite(p.rho)) {
      throw Error(ErrorCode::CurvatureViolation,
                  "pair " + std::to_string(i) + " has nonpositive curvature");
    }
  }
}

namespace {

Matrix stack_s(PairView pairs, Index n) {
  Matrix s(n, static_cast<Index>(pairs.size()));
  for (std::size_t i = 0; i < pairs.size(); ++i) s.col(static_cast<Index>(i)) = pairs[i].s;
  return s;
}

Matrix stack_y(PairView pairs, Index n) {
  Matrix y(n, static_cast<Index>(pairs.size()));
  for (std::size_t i = 0; i < pairs.size(); ++i) y.col(static_cast<Index>(i)) = pairs[i].y;
  return y;
}

}  // namespace

CompactFactors compact_factors(const InitialMatrix& w, PairView pairs) {
  check_pairs(w, pairs);
  const Index n = w.dim();
  const Matrix s = stack_s(pairs, n);
  const Matrix y = stack_y(pairs, n);
  const Matrix sty = s.transpose() * y;
  CompactFactors f;
  f.r = sty.triangularView<Eigen::Upper>();
  f.d = sty.diagonal();
  f.ywy = y.transpose() * w.apply(y);
  return f;
}

Matrix bfgs_iterative(const InitialMatrix& w, PairView pairs) {
  check_pairs(w, pairs);
  Matrix wbar = w.dense();
  for (const auto& p : pairs) {
    // (I - rho s y^T) W (I - rho y s^T) + rho s s^T
    const Vector t = wbar * p.y;
    const double ywy = p.y.dot(t);
    wbar.noalias() -= p.rho * (p.s * t.transpose() + t * p.s.transpose());
    wbar.noalias() += (p.rho * p.rho * ywy + p.rho) * (p.s * p.s.transpose());
  }
  return wbar;
}

Matrix bfgs_compact(const InitialMatrix& w, PairView pairs) {
  const CompactFactors f = compact_factors(w, pairs);
  const Index n = w.dim();
  if (pairs.empty()) return w.dense();
  const Matrix s = stack_s(pairs, n);
  const Matrix wy = w.apply(stack_y(pairs, n));
  // F = R^{-1} S^T, so S R^{-T} = F^T.
  const Matrix f_mat = f.r.triangularView<Eigen::Upper>().solve(s.transpose());
  Matrix middle = f.ywy;
  middle.diagonal() += f.d;
  Matrix wbar = w.dense();
  wbar.noalias() += f_mat.transpose() * middle * f_mat;
  wbar.noalias() -= f_mat.transpose() * wy.transpose();
  wbar.noalias() -= wy * f_mat;
  return wbar;
}

Vector two_loop_apply(const InitialMatrix& w, PairView pairs, const Vector& g) {
  check_pairs(w, pairs);
  if (g.size() != w.dim()) {
    throw Error(ErrorCode::ShapeMismatch, "two_loop_apply vector size");
  }
  const std::size_t m = pairs.size();
  std::vector<double> alpha(m);
  Vector q = g;
  for (std::size_t i = m; i-- > 0;) {
    alpha[i] = pairs[i].rho * pairs[i].s.dot(q);
    q.noalias() -= alpha[i] * pairs[i].y;
  }
  Vector r = w.apply(q);
  for (std::size_t i = 0; i < m; ++i) {
    const double beta = pairs[i].rho * pairs[i].y.dot(r);
    r.noalias() += (alpha[i] - beta) * pairs[i].s;
  }
  return r;
}

Matrix direct_apply(const InitialMatrix& w, PairView pairs, const Matrix& v) {
  check_pairs(w, pairs);
  if (v.rows() != w.dim()) {
    throw Error(ErrorCode::ShapeMismatch, "direct_apply operand rows");
  }
  const Matrix b0v = w.apply_inverse(v);
  if (pairs.empty()) return b0v;

  // B = B0 - [B0 S, Y] K^{-1} [S^T B0; Y^T] with
  // K = [S^T B0 S, L; L^T, -D], L the strictly lower part of S^T Y.
  const Index n = w.dim();
  const Matrix s = stack_s(pairs, n);
  const Matrix y = stack_y(pairs, n);
  const Matrix b0s = w.apply_inverse(s);
  const Matrix sty = s.transpose() * y;
  const Matrix l = sty.triangularView<Eigen::StrictlyLower>();
  const Vector d = sty.diagonal();
  const Vector dinv = d.cwiseInverse();

  // Eliminate the -D block: T = S^T B0 S + L D^{-1} L^T is SPD.
  const Matrix t = s.transpose() * b0s + l * dinv.asDiagonal() * l.transpose();
  const Eigen::LLT<Matrix> t_llt(t);
  if (t_llt.info() != Eigen::Success) {
    throw Error(ErrorCode::NotPositiveDefinite,
                "compact direct representation is singular");
  }
  const Matrix p = b0s.transpose() * v;  // S^T B0 V
  const Matrix q = y.transpose() * v;    // Y^T V
  const Matrix u = t_llt.solve(p + l * dinv.asDiagonal() * q);
  const Matrix z = dinv.asDiagonal() * (l.transpose() * u - q);
  Matrix out = b0v;
  out.noalias() -= b0s * u;
  out.noalias() -= y * z;
  return out;
}

}  // namespace aggbfgs
