#pragma once

#include "roselm/elm.hpp"

namespace roselm {

/// One online-sequential ELM learner.
///
/// p is the inverse Gram matrix (sum of H^T H over everything seen so far)^-1 and
/// updates counts the sequential chunks absorbed since initialization. Training
/// chunks are not retained.
struct OselmState {
  HiddenLayer layer;
  Matrix beta;
  Matrix p;
  Index updates = 0;

  Index output_dim() const { return beta.cols(); }

  /// Recursive least-squares step on one chunk, in place.
  void learn(const Matrix& x_next, const Matrix& t_next);
  Matrix predict(const Matrix& x) const;
};

/// P0 = (H0^T H0)^-1, beta0 = P0 H0^T T0, updates = 0.
/// Throws InsufficientInitData when X0 has fewer rows than hidden nodes.
OselmState oselm_init(const HiddenLayer& layer, const Matrix& x0, const Matrix& t0);

/// P_{k+1} = woodbury(P_k, H), beta += P_{k+1} H^T (T - H beta), updates + 1.
OselmState oselm_update(OselmState state, const Matrix& x_next, const Matrix& t_next);

}  // namespace roselm
