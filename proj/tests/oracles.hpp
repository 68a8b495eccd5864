#pragma once

// Reference computations used only by tests. Each one takes a different route
// from the library: full-pivot LU or complete orthogonal decomposition instead of
// Cholesky/Woodbury, scalar loops instead of matrix expressions, exhaustive grid
// search instead of closed forms.

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

namespace oracle {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline Matrix direct_inverse(const Matrix& k) { return k.fullPivLu().inverse(); }

inline Matrix lstsq(const Matrix& h, const Matrix& t) { return h.completeOrthogonalDecomposition().solve(t); }

inline double rel_frobenius(const Matrix& a, const Matrix& b) { return (a - b).norm() / std::max(b.norm(), 1e-300); }

// H[j][i] = G(a_i, b_i, x_j), written out per element.
inline Matrix hidden_loops(const Matrix& a, const Vector& b, const Matrix& x, bool rbf) {
  Matrix h(x.rows(), a.rows());
  for (Eigen::Index j = 0; j < x.rows(); ++j)
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      double s = 0.0;
      if (rbf) {
        for (Eigen::Index d = 0; d < x.cols(); ++d) s += (x(j, d) - a(i, d)) * (x(j, d) - a(i, d));
        h(j, i) = std::exp(-s / b(i));
      } else {
        for (Eigen::Index d = 0; d < x.cols(); ++d) s += a(i, d) * x(j, d);
        h(j, i) = 1.0 / (1.0 + std::exp(-(s + b(i))));
      }
    }
  return h;
}

// Mean squared error of the w-weighted combination, summed sample by sample.
inline double weighted_mse(const std::vector<Matrix>& preds, const Matrix& t, const Vector& w) {
  double total = 0.0;
  for (Eigen::Index r = 0; r < t.rows(); ++r)
    for (Eigen::Index c = 0; c < t.cols(); ++c) {
      double f = 0.0;
      for (std::size_t i = 0; i < preds.size(); ++i) f += w(static_cast<Eigen::Index>(i)) * preds[i](r, c);
      total += (f - t(r, c)) * (f - t(r, c));
    }
  return total / static_cast<double>(t.size());
}

// Minimizer of w'Cw over the 2-simplex by exhaustive search.
inline Vector grid_min_2(const Matrix& c, int steps = 100000) {
  Vector best(2);
  double best_e = std::numeric_limits<double>::infinity();
  for (int k = 0; k <= steps; ++k) {
    Vector w(2);
    w << static_cast<double>(k) / steps, 1.0 - static_cast<double>(k) / steps;
    const double e = w.dot(c * w);
    if (e < best_e) {
      best_e = e;
      best = w;
    }
  }
  return best;
}

// Uniform draw from the simplex (normalized exponentials).
template <class R>
Vector random_simplex(Eigen::Index n, R& rng) {
  std::exponential_distribution<double> e(1.0);
  Vector w(n);
  for (Eigen::Index i = 0; i < n; ++i) w(i) = e(rng);
  return w / w.sum();
}

template <class R>
Matrix uniform(Eigen::Index r, Eigen::Index c, R& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = u(rng);
  return m;
}

inline double rmse(const Matrix& y, const Matrix& t) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < t.rows(); ++i)
    for (Eigen::Index j = 0; j < t.cols(); ++j) s += (y(i, j) - t(i, j)) * (y(i, j) - t(i, j));
  return std::sqrt(s / static_cast<double>(t.size()));
}

}  // namespace oracle
