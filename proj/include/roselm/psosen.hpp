#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "roselm/dataset.hpp"
#include "roselm/numerics.hpp"

namespace roselm {

/// Ensemble weights: every entry in [0, 1], entries sum to 1 (within 1e-9).
class WeightVector {
 public:
  /// Throws InvalidArgument if the simplex constraints do not hold.
  explicit WeightVector(Vector w);

  static WeightVector uniform(Index n);
  static WeightVector one_hot(Index n, Index k);
  /// Clamps each entry to [0, 1] and rescales to sum 1; an all-zero result
  /// becomes uniform. This is the feasibility projection used by the swarm.
  static WeightVector project(const Vector& raw);

  const Vector& values() const { return w_; }
  Index size() const { return w_.size(); }
  double operator[](Index i) const { return w_(i); }

 private:
  struct Unchecked {};
  WeightVector(Vector w, Unchecked) : w_(std::move(w)) {}
  Vector w_;
};

/// Empirical residual correlation between learners:
/// C(i, j) = mean over samples and outputs of (f_i - d)(f_j - d).
class CorrelationMatrix {
 public:
  /// Throws InvalidArgument unless square and symmetric.
  explicit CorrelationMatrix(Matrix c);

  const Matrix& values() const { return c_; }
  Index size() const { return c_.rows(); }

 private:
  Matrix c_;
};

CorrelationMatrix correlation_matrix(std::span<const Matrix> predictions, const Matrix& targets);

/// Generalization error of the w-weighted ensemble, w^T C w.
double ensemble_error(const WeightVector& w, const CorrelationMatrix& c);

/// Closed-form minimizer of w^T C w over the weight simplex.
///
/// When the normalized row sums of C^-1 are all nonnegative they are the answer.
/// Otherwise the nonnegativity constraints are active and a primal active-set
/// iteration finds the exact constrained minimizer.
/// Throws IllConditioned when cond(C) exceeds 1e10.
WeightVector analytic_weights(const CorrelationMatrix& c);

struct PsoConfig {
  Index swarm_size = 30;
  Index iterations = 200;
  double inertia = 0.729;
  double cognitive = 1.49445;
  double social = 1.49445;
  double velocity_clamp = 0.5;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Higher is better. NaN is treated as -inf; +inf is allowed.
using FitnessFunction = std::function<double(const WeightVector&)>;

struct PsoResult {
  WeightVector best_weights;
  double best_fitness = 0.0;
  /// Best fitness after each iteration; never decreases.
  std::vector<double> fitness_trace;
};

/// Global-best PSO over the weight simplex. Positions are projected back onto the
/// simplex after every move; the best position ever evaluated is returned.
PsoResult pso_optimize(const FitnessFunction& fitness, Index n, const PsoConfig& config);

/// {i : w_i > lambda_w}. lambda_w == 0 disables the threshold (all members).
/// An empty result falls back to the argmax weight.
std::vector<Index> select_members(const WeightVector& w, double lambda_w);

/// Unweighted mean of the selected members' outputs, summed in index order.
Matrix combine_regression(std::span<const Matrix> outputs, std::span<const Index> selected);

/// Per-sample plurality vote over the selected members; ties go to the smallest class.
std::vector<Index> combine_classification(std::span<const std::vector<Index>> labels,
                                          std::span<const Index> selected);

/// Misclassification rate of the w-weighted vote (ties to the smallest class).
double weighted_vote_error(const WeightVector& w, std::span<const std::vector<Index>> labels,
                           std::span<const Index> truth);

struct SelectionResult {
  WeightVector best_weights = WeightVector::uniform(1);
  std::vector<Index> selected;
  std::vector<double> fitness_trace;
  /// True when the best fitness is not finite (every candidate is perfect on V,
  /// or V carries no signal), so the weights say nothing about the learners.
  bool degenerate = false;
};

/// Evolves learner weights with fitness 1 / E(w) on a validation set and applies
/// the threshold. E is w^T C w for regression and the weighted-vote error rate for
/// classification. outputs[i] holds learner i's raw outputs on V.
SelectionResult select_ensemble(std::span<const Matrix> outputs, const Matrix& targets, TaskKind task,
                                double lambda_w, const PsoConfig& config);

/// count index lists of n draws with replacement from [0, n); list t uses
/// derive_seed(seed, t).
std::vector<std::vector<Index>> bootstrap_indices(Index n, Index count, std::uint64_t seed);
std::vector<Dataset> bootstrap_samples(const Dataset& s, Index count, std::uint64_t seed);

/// A trained component learner: maps inputs to raw outputs.
using Learner = std::function<Matrix(const Matrix&)>;
using LearnerTrainer = std::function<Learner(const Dataset& sample, Index index)>;

/// Result of the standalone bootstrap + PSO selective ensemble.
struct SelectiveEnsemble {
  std::vector<Learner> learners;
  SelectionResult selection;
  TaskKind task = TaskKind::Regression;
  Index class_count = 0;
  /// Rows of the training set used as V (out-of-bag for at least one learner).
  std::vector<Index> validation_rows;

  /// Regression: mean of selected outputs. Classification: one-hot {-1,+1} rows of the vote.
  Matrix predict(const Matrix& x) const;
  /// Same, over all learners regardless of selection.
  Matrix predict_all(const Matrix& x) const;
};

/// Trains `count` learners on bootstrap samples of s, pools their out-of-bag rows
/// into V, evolves weights and selects. lambda_w defaults to 1/count.
SelectiveEnsemble psosen_standalone(const Dataset& s, const LearnerTrainer& trainer, Index count,
                                    std::optional<double> lambda_w, const PsoConfig& pso, std::uint64_t seed);

}  // namespace roselm
