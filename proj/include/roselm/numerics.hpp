#pragma once

#include <Eigen/Dense>

namespace roselm {

using Index = Eigen::Index;
/// Dense double-precision matrix used for every H, P, beta, T and C quantity.
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Gram matrices whose eigenvalue ratio exceeds this are treated as singular:
/// pseudo-inverses switch to a truncated spectral solve past this point.
inline constexpr double kConditionLimit = 1e12;

bool all_finite(const Matrix& m);

/// (M + M^T) / 2.
Matrix symmetrized(const Matrix& m);

/// Ratio of largest to smallest eigenvalue of a symmetric matrix; +inf when the
/// smallest eigenvalue is not positive.
double condition_estimate(const Matrix& symmetric);

/// Left pseudoinverse (H^T H)^-1 H^T of a tall matrix.
///
/// Uses a Cholesky solve of the normal equations when cond(H^T H) <= kConditionLimit,
/// otherwise an SVD pseudo-inverse that drops singular values below
/// sigma_max / sqrt(kConditionLimit).
/// Throws DimensionMismatch if rows < cols, RankDeficient if no finite result exists.
Matrix left_pseudoinverse(const Matrix& h);

/// Inverse of a symmetric positive-definite matrix via Cholesky.
/// Throws DimensionMismatch (not square), InvalidArgument (not symmetric within
/// 1e-10 relative to its largest entry) or NotPositiveDefinite.
Matrix spd_inverse(const Matrix& k);

/// Inverse of a Gram matrix H^T H that tolerates near-singularity: spd_inverse when
/// cond <= kConditionLimit, else the eigen-truncated pseudo-inverse keeping only
/// eigenvalues above lambda_max / kConditionLimit.
Matrix gram_inverse(const Matrix& k);

/// P - P H^T (I + H P H^T)^-1 H P, symmetrized.
/// Throws DimensionMismatch or InnerSolveFailed.
Matrix woodbury_update(const Matrix& p, const Matrix& h_next);

/// In-place form of woodbury_update. Returns P H^T of the *updated* P, which is
/// exactly the gain the RLS weight update needs.
Matrix woodbury_update_in_place(Matrix& p, const Matrix& h_next);

}  // namespace roselm
