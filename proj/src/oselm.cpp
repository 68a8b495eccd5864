#include "roselm/oselm.hpp"

#include <string>

#include "roselm/errors.hpp"

namespace roselm {

OselmState oselm_init(const HiddenLayer& layer, const Matrix& x0, const Matrix& t0) {
  if (x0.rows() != t0.rows()) throw DimensionMismatch("oselm_init: X0 and T0 row counts differ");
  if (x0.rows() < layer.node_count()) {
    throw InsufficientInitData("oselm_init: " + std::to_string(x0.rows()) + " samples for " +
                               std::to_string(layer.node_count()) + " hidden nodes");
  }
  const Matrix h0 = hidden_output(layer, x0);
  Matrix k0 = Matrix::Zero(h0.cols(), h0.cols());
  k0.selfadjointView<Eigen::Lower>().rankUpdate(h0.transpose());
  Matrix p0 = gram_inverse(k0.selfadjointView<Eigen::Lower>());
  Matrix beta0 = p0 * (h0.transpose() * t0);
  return OselmState{layer, std::move(beta0), std::move(p0), 0};
}

void OselmState::learn(const Matrix& x_next, const Matrix& t_next) {
  if (x_next.rows() == 0) throw InvalidArgument("oselm_update: empty chunk");
  if (x_next.rows() != t_next.rows()) throw DimensionMismatch("oselm_update: X and T row counts differ");
  if (t_next.cols() != beta.cols()) throw DimensionMismatch("oselm_update: target width differs from model");
  const Matrix h = hidden_output(layer, x_next);
  const Matrix residual = t_next - h * beta;
  const Matrix gain = woodbury_update_in_place(p, h);
  beta.noalias() += gain * residual;
  ++updates;
}

Matrix OselmState::predict(const Matrix& x) const { return hidden_output(layer, x) * beta; }

OselmState oselm_update(OselmState state, const Matrix& x_next, const Matrix& t_next) {
  state.learn(x_next, t_next);
  return state;
}

}  // namespace roselm
