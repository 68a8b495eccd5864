#include "roselm/elm.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "roselm/errors.hpp"
#include "roselm/random.hpp"

namespace roselm {

std::string to_string(ActivationKind kind) {
  return kind == ActivationKind::Sigmoid ? "sigmoid" : "rbf";
}

ActivationKind parse_activation(std::string_view text) {
  std::string s(text);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "sigmoid") return ActivationKind::Sigmoid;
  if (s == "rbf") return ActivationKind::Rbf;
  throw InvalidArgument("unknown activation '" + std::string(text) + "' (expected sigmoid|rbf)");
}

HiddenLayer::HiddenLayer(ActivationKind activation, Matrix weights, Vector biases)
    : activation_(activation), weights_(std::move(weights)), biases_(std::move(biases)) {
  if (weights_.rows() < 1 || weights_.cols() < 1) throw InvalidArgument("hidden layer needs n >= 1 and n_tilde >= 1");
  if (biases_.size() != weights_.rows()) throw DimensionMismatch("one bias per hidden node required");
  if (!weights_.allFinite() || weights_.cwiseAbs().maxCoeff() > 1.0) {
    throw InvalidArgument("hidden weights must lie in [-1, 1]");
  }
  if (activation_ == ActivationKind::Sigmoid) {
    if (!biases_.allFinite() || biases_.cwiseAbs().maxCoeff() > 1.0) {
      throw InvalidArgument("sigmoid biases must lie in [-1, 1]");
    }
  } else if (!biases_.allFinite() || !(biases_.minCoeff() > 0.0) || biases_.maxCoeff() > 1.0) {
    throw InvalidArgument("RBF impact factors must lie in (0, 1]");
  }
}

HiddenLayer init_hidden(Index n, Index n_tilde, ActivationKind activation, std::uint64_t seed) {
  if (n < 1 || n_tilde < 1) throw InvalidArgument("init_hidden: need n >= 1 and n_tilde >= 1");
  Rng rng(seed);
  Matrix a(n_tilde, n);
  Vector b(n_tilde);
  // Row-major draw order keeps the layer independent of Eigen's storage order.
  for (Index i = 0; i < n_tilde; ++i) {
    for (Index j = 0; j < n; ++j) a(i, j) = 2.0 * uniform01(rng) - 1.0;
  }
  for (Index i = 0; i < n_tilde; ++i) {
    const double u = uniform01(rng);
    b(i) = activation == ActivationKind::Sigmoid ? 2.0 * u - 1.0 : 1.0 - u;  // (0, 1] for RBF
  }
  return HiddenLayer(activation, std::move(a), std::move(b));
}

Matrix hidden_output(const HiddenLayer& layer, const Matrix& x) {
  if (x.cols() != layer.input_dim()) {
    throw DimensionMismatch("hidden_output: X has " + std::to_string(x.cols()) + " columns, layer expects " +
                            std::to_string(layer.input_dim()));
  }
  const Matrix& a = layer.weights();
  const Vector& b = layer.biases();
  Matrix h(x.rows(), layer.node_count());
  if (layer.activation() == ActivationKind::Sigmoid) {
    h.noalias() = x * a.transpose();
    h.rowwise() += b.transpose();
    h = (1.0 + (-h.array()).exp()).inverse();
  } else {
    for (Index i = 0; i < layer.node_count(); ++i) {
      const auto dist2 = (x.rowwise() - a.row(i)).rowwise().squaredNorm();
      h.col(i) = (-dist2.array() / b(i)).exp();
    }
  }
  return h;
}

ElmModel train_batch(const HiddenLayer& layer, const Matrix& x, const Matrix& t) {
  if (x.rows() != t.rows()) throw DimensionMismatch("train_batch: X and T row counts differ");
  if (x.rows() < layer.node_count()) {
    throw InsufficientInitData("train_batch: need at least " + std::to_string(layer.node_count()) + " samples");
  }
  const Matrix h = hidden_output(layer, x);
  return ElmModel{layer, left_pseudoinverse(h) * t};
}

Matrix predict(const ElmModel& model, const Matrix& x) {
  return hidden_output(model.layer, x) * model.beta;
}

}  // namespace roselm
