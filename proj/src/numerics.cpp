#include "roselm/numerics.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "roselm/errors.hpp"

namespace roselm {

namespace {

Matrix gram(const Matrix& h) {
  Matrix k = Matrix::Zero(h.cols(), h.cols());
  k.selfadjointView<Eigen::Lower>().rankUpdate(h.transpose());
  return k.selfadjointView<Eigen::Lower>();
}

std::string shape(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace

bool all_finite(const Matrix& m) { return m.allFinite(); }

Matrix symmetrized(const Matrix& m) { return 0.5 * (m + m.transpose()); }

double condition_estimate(const Matrix& symmetric) {
  if (symmetric.size() == 0) return 1.0;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetric, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 0.0)) return std::numeric_limits<double>::infinity();
  return hi / lo;
}

Matrix left_pseudoinverse(const Matrix& h) {
  if (h.rows() < h.cols()) {
    throw DimensionMismatch("left_pseudoinverse: need rows >= cols, got " + shape(h));
  }
  if (!h.allFinite()) throw RankDeficient("left_pseudoinverse: input has non-finite entries");

  const Matrix k = gram(h);
  if (condition_estimate(k) <= kConditionLimit) {
    Eigen::LLT<Matrix> llt(k);
    if (llt.info() == Eigen::Success) {
      Matrix out = llt.solve(h.transpose());
      if (out.allFinite()) return out;
    }
  }

  // Spectral fallback: truncate at the same conditioning the Cholesky path accepts.
  Eigen::BDCSVD<Matrix> svd(h, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  const double cutoff = (s.size() > 0 ? s(0) : 0.0) / std::sqrt(kConditionLimit);
  Vector inv = Vector::Zero(s.size());
  for (Index i = 0; i < s.size(); ++i) {
    if (s(i) > cutoff && s(i) > 0.0) inv(i) = 1.0 / s(i);
  }
  Matrix out = svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
  if (!out.allFinite()) throw RankDeficient("left_pseudoinverse: SVD fallback produced non-finite entries");
  return out;
}

Matrix spd_inverse(const Matrix& k) {
  if (k.rows() != k.cols()) throw DimensionMismatch("spd_inverse: matrix is " + shape(k));
  if (!k.allFinite()) throw NotPositiveDefinite("spd_inverse: input has non-finite entries");
  const double scale = std::max(1.0, k.cwiseAbs().maxCoeff());
  if ((k - k.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw InvalidArgument("spd_inverse: matrix is not symmetric");
  }
  Eigen::LLT<Matrix> llt(k);
  if (llt.info() != Eigen::Success) {
    throw NotPositiveDefinite("spd_inverse: Cholesky hit a non-positive pivot");
  }
  Matrix inv = symmetrized(llt.solve(Matrix::Identity(k.rows(), k.cols())));
  if (!inv.allFinite()) throw NotPositiveDefinite("spd_inverse: inverse is not finite");
  return inv;
}

Matrix gram_inverse(const Matrix& k) {
  if (k.rows() != k.cols()) throw DimensionMismatch("gram_inverse: matrix is " + shape(k));
  if (!k.allFinite()) throw NotPositiveDefinite("gram_inverse: input has non-finite entries");
  const Matrix sym = symmetrized(k);
  if (condition_estimate(sym) <= kConditionLimit) return spd_inverse(sym);

  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
  if (eig.info() != Eigen::Success) throw NotPositiveDefinite("gram_inverse: eigensolver failed");
  const Vector& lambda = eig.eigenvalues();
  const double cutoff = lambda.maxCoeff() / kConditionLimit;
  Vector inv = Vector::Zero(lambda.size());
  for (Index i = 0; i < lambda.size(); ++i) {
    if (lambda(i) > cutoff && lambda(i) > 0.0) inv(i) = 1.0 / lambda(i);
  }
  const Matrix& v = eig.eigenvectors();
  return symmetrized(v * inv.asDiagonal() * v.transpose());
}

Matrix woodbury_update_in_place(Matrix& p, const Matrix& h_next) {
  if (p.rows() != p.cols() || h_next.cols() != p.rows()) {
    throw DimensionMismatch("woodbury_update: P is " + shape(p) + ", H is " + shape(h_next));
  }
  const Matrix pht = p * h_next.transpose();
  Matrix inner = h_next * pht;
  inner.diagonal().array() += 1.0;

  Matrix correction;
  Eigen::LLT<Matrix> llt(inner);
  if (llt.info() == Eigen::Success) {
    correction = llt.solve(pht.transpose());
  } else {
    Eigen::FullPivLU<Matrix> lu(inner);
    if (!lu.isInvertible()) throw InnerSolveFailed("woodbury_update: I + H P H^T is singular");
    correction = lu.solve(pht.transpose());
  }
  if (!correction.allFinite()) throw InnerSolveFailed("woodbury_update: inner solve is not finite");

  p.noalias() -= pht * correction;
  p = symmetrized(p);
  return p * h_next.transpose();
}

Matrix woodbury_update(const Matrix& p, const Matrix& h_next) {
  Matrix out = p;
  woodbury_update_in_place(out, h_next);
  return out;
}

}  // namespace roselm
