#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "roselm/numerics.hpp"

namespace roselm {

enum class ActivationKind { Sigmoid, Rbf };

std::string to_string(ActivationKind kind);
/// "sigmoid" or "rbf"; throws InvalidArgument otherwise.
ActivationKind parse_activation(std::string_view text);

/// Random hidden-node parameters of a single-hidden-layer network.
///
/// Row i of weights() is a_i (input weights for sigmoid nodes, the center for RBF
/// nodes); biases()(i) is b_i (bias, or RBF impact factor). Sigmoid parameters lie
/// in [-1, 1]; RBF centers in [-1, 1] and impact factors in (0, 1]. The layer is
/// immutable once constructed.
class HiddenLayer {
 public:
  /// Validates shapes and parameter ranges; throws InvalidArgument.
  HiddenLayer(ActivationKind activation, Matrix weights, Vector biases);

  ActivationKind activation() const { return activation_; }
  const Matrix& weights() const { return weights_; }
  const Vector& biases() const { return biases_; }
  Index input_dim() const { return weights_.cols(); }
  Index node_count() const { return weights_.rows(); }

  friend bool operator==(const HiddenLayer& a, const HiddenLayer& b) {
    return a.activation_ == b.activation_ && a.weights_ == b.weights_ && a.biases_ == b.biases_;
  }

 private:
  ActivationKind activation_;
  Matrix weights_;
  Vector biases_;
};

/// Samples n_tilde nodes for n-dimensional inputs, uniformly over the ranges above.
/// The same seed always yields a bit-identical layer.
HiddenLayer init_hidden(Index n, Index n_tilde, ActivationKind activation, std::uint64_t seed);

/// H with H(j, i) = G(a_i, b_i, x_j).
///   sigmoid: 1 / (1 + exp(-(a . x + b)))
///   rbf:     exp(-||x - a||^2 / b)
Matrix hidden_output(const HiddenLayer& layer, const Matrix& x);

struct ElmModel {
  HiddenLayer layer;
  Matrix beta;  ///< node_count x m
};

/// Batch ELM: beta = pinv(H) T.
ElmModel train_batch(const HiddenLayer& layer, const Matrix& x, const Matrix& t);

Matrix predict(const ElmModel& model, const Matrix& x);

}  // namespace roselm
