#include "roselm/psosen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <string>

#include "roselm/errors.hpp"
#include "roselm/random.hpp"

namespace roselm {

namespace {

constexpr double kSimplexTolerance = 1e-9;
constexpr double kWeightConditionLimit = 1e10;

double sanitize(double f) { return std::isnan(f) ? -std::numeric_limits<double>::infinity() : f; }

Index class_count_of(std::span<const std::vector<Index>> labels, std::span<const Index> truth) {
  Index k = 0;
  for (const auto& l : labels) {
    for (Index v : l) k = std::max(k, v + 1);
  }
  for (Index v : truth) k = std::max(k, v + 1);
  return k;
}

}  // namespace

// ---------------------------------------------------------------------------
// Weight vectors and the correlation matrix

WeightVector::WeightVector(Vector w) : w_(std::move(w)) {
  if (w_.size() < 1) throw InvalidArgument("weight vector is empty");
  for (Index i = 0; i < w_.size(); ++i) {
    if (!(w_(i) >= 0.0 && w_(i) <= 1.0)) throw InvalidArgument("weights must lie in [0, 1]");
  }
  if (std::abs(w_.sum() - 1.0) > kSimplexTolerance) throw InvalidArgument("weights must sum to 1");
}

WeightVector WeightVector::uniform(Index n) {
  if (n < 1) throw InvalidArgument("weight vector is empty");
  return WeightVector(Vector::Constant(n, 1.0 / static_cast<double>(n)), Unchecked{});
}

WeightVector WeightVector::one_hot(Index n, Index k) {
  if (k < 0 || k >= n) throw InvalidArgument("one_hot index out of range");
  Vector w = Vector::Zero(n);
  w(k) = 1.0;
  return WeightVector(std::move(w), Unchecked{});
}

WeightVector WeightVector::project(const Vector& raw) {
  if (raw.size() < 1) throw InvalidArgument("weight vector is empty");
  Vector w = raw.unaryExpr([](double v) { return std::isnan(v) ? 0.0 : std::clamp(v, 0.0, 1.0); });
  const double total = w.sum();
  if (!(total > 0.0)) return uniform(raw.size());
  w /= total;
  return WeightVector(std::move(w), Unchecked{});
}

CorrelationMatrix::CorrelationMatrix(Matrix c) : c_(std::move(c)) {
  if (c_.rows() != c_.cols() || c_.rows() < 1) throw InvalidArgument("correlation matrix must be square");
  const double scale = std::max(1.0, c_.cwiseAbs().maxCoeff());
  if ((c_ - c_.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw InvalidArgument("correlation matrix must be symmetric");
  }
}

CorrelationMatrix correlation_matrix(std::span<const Matrix> predictions, const Matrix& targets) {
  if (predictions.empty()) throw InvalidArgument("correlation_matrix: no learners");
  if (targets.size() == 0) throw InvalidArgument("correlation_matrix: empty validation set");
  const auto n = static_cast<Index>(predictions.size());
  // Residuals as columns: (samples * outputs) x n.
  Matrix r(targets.size(), n);
  for (Index i = 0; i < n; ++i) {
    const Matrix& p = predictions[static_cast<std::size_t>(i)];
    if (p.rows() != targets.rows() || p.cols() != targets.cols()) {
      throw DimensionMismatch("correlation_matrix: learner " + std::to_string(i) + " output shape differs from targets");
    }
    r.col(i) = (p - targets).reshaped();
  }
  Matrix c = Matrix::Zero(n, n);
  c.selfadjointView<Eigen::Lower>().rankUpdate(r.transpose(), 1.0 / static_cast<double>(targets.size()));
  return CorrelationMatrix(c.selfadjointView<Eigen::Lower>());
}

double ensemble_error(const WeightVector& w, const CorrelationMatrix& c) {
  if (w.size() != c.size()) throw DimensionMismatch("ensemble_error: weight and matrix sizes differ");
  return w.values().dot(c.values() * w.values());
}

WeightVector analytic_weights(const CorrelationMatrix& c) {
  const Matrix& cm = c.values();
  const Index n = c.size();
  if (condition_estimate(cm) > kWeightConditionLimit) {
    throw IllConditioned("analytic_weights: correlation matrix is singular or ill-conditioned");
  }
  Eigen::LDLT<Matrix> full(cm);
  const Vector row_sums = full.solve(Vector::Ones(n));
  if ((row_sums.array() >= 0.0).all()) return WeightVector::project(row_sums / row_sums.sum());

  // Primal active set on {w >= 0, sum w = 1}, starting at the best single learner.
  Index start = 0;
  cm.diagonal().minCoeff(&start);
  Vector w = Vector::Zero(n);
  w(start) = 1.0;
  std::vector<bool> free(static_cast<std::size_t>(n), false);
  free[static_cast<std::size_t>(start)] = true;

  const double tol = 1e-14 * std::max(1.0, cm.cwiseAbs().maxCoeff());
  for (Index iter = 0; iter < 50 * n + 50; ++iter) {
    std::vector<Index> idx;
    for (Index i = 0; i < n; ++i) {
      if (free[static_cast<std::size_t>(i)]) idx.push_back(i);
    }
    const auto m = static_cast<Index>(idx.size());
    Matrix sub(m, m);
    for (Index a = 0; a < m; ++a) {
      for (Index b = 0; b < m; ++b) sub(a, b) = cm(idx[static_cast<std::size_t>(a)], idx[static_cast<std::size_t>(b)]);
    }
    const Vector u = sub.ldlt().solve(Vector::Ones(m));
    Vector target = Vector::Zero(n);
    for (Index a = 0; a < m; ++a) target(idx[static_cast<std::size_t>(a)]) = u(a) / u.sum();

    const Vector d = target - w;
    if (d.cwiseAbs().maxCoeff() <= 1e-15) {
      const Vector grad = cm * w;
      const double level = w.dot(grad);
      Index enter = -1;
      double most_negative = -tol;
      for (Index j = 0; j < n; ++j) {
        if (free[static_cast<std::size_t>(j)]) continue;
        const double multiplier = grad(j) - level;
        if (multiplier < most_negative) {
          most_negative = multiplier;
          enter = j;
        }
      }
      if (enter < 0) break;
      free[static_cast<std::size_t>(enter)] = true;
      continue;
    }

    double step = 1.0;
    Index blocking = -1;
    for (Index i : idx) {
      if (d(i) < 0.0) {
        const double limit = -w(i) / d(i);
        if (limit < step) {
          step = limit;
          blocking = i;
        }
      }
    }
    w += step * d;
    if (blocking >= 0) {
      w(blocking) = 0.0;
      free[static_cast<std::size_t>(blocking)] = false;
    }
  }
  return WeightVector::project(w);
}

// ---------------------------------------------------------------------------
// Particle swarm

void PsoConfig::validate() const {
  if (swarm_size < 2) throw InvalidArgument("PSO swarm_size must be >= 2");
  if (iterations < 1) throw InvalidArgument("PSO iterations must be >= 1");
  if (!(inertia >= 0.0 && inertia <= 1.0)) throw InvalidArgument("PSO inertia must lie in [0, 1]");
  if (!(velocity_clamp > 0.0)) throw InvalidArgument("PSO velocity_clamp must be > 0");
  if (!(cognitive >= 0.0) || !(social >= 0.0)) throw InvalidArgument("PSO coefficients must be >= 0");
}

PsoResult pso_optimize(const FitnessFunction& fitness, Index n, const PsoConfig& config) {
  if (n < 1) throw InvalidArgument("pso_optimize: n must be >= 1");
  config.validate();
  const auto iterations = static_cast<std::size_t>(config.iterations);

  if (n == 1) {
    auto only = WeightVector::uniform(1);
    const double f = sanitize(fitness(only));
    return PsoResult{only, f, std::vector<double>(iterations, f)};
  }

  Rng rng(config.seed);
  const Index swarm = config.swarm_size;
  const double clamp = config.velocity_clamp;

  std::vector<WeightVector> position;
  std::vector<Vector> velocity;
  position.reserve(static_cast<std::size_t>(swarm));
  velocity.reserve(static_cast<std::size_t>(swarm));
  for (Index p = 0; p < swarm; ++p) {
    Vector raw(n);
    for (Index d = 0; d < n; ++d) raw(d) = uniform01(rng);
    position.push_back(WeightVector::project(raw));
    Vector v(n);
    for (Index d = 0; d < n; ++d) v(d) = (2.0 * uniform01(rng) - 1.0) * clamp;
    velocity.push_back(std::move(v));
  }

  std::vector<double> current(static_cast<std::size_t>(swarm));
  for (Index p = 0; p < swarm; ++p) current[static_cast<std::size_t>(p)] = sanitize(fitness(position[static_cast<std::size_t>(p)]));

  std::vector<WeightVector> personal = position;
  std::vector<double> personal_fit = current;
  Index leader = 0;
  for (Index p = 1; p < swarm; ++p) {
    if (personal_fit[static_cast<std::size_t>(p)] > personal_fit[static_cast<std::size_t>(leader)]) leader = p;
  }
  WeightVector global = personal[static_cast<std::size_t>(leader)];
  double global_fit = personal_fit[static_cast<std::size_t>(leader)];

  std::vector<double> trace;
  trace.reserve(iterations);
  Matrix r1(swarm, n);
  Matrix r2(swarm, n);
  for (std::size_t it = 0; it < iterations; ++it) {
    // All random draws happen before any fitness evaluation.
    for (Index p = 0; p < swarm; ++p) {
      for (Index d = 0; d < n; ++d) {
        r1(p, d) = uniform01(rng);
        r2(p, d) = uniform01(rng);
      }
    }
    for (Index p = 0; p < swarm; ++p) {
      const auto up = static_cast<std::size_t>(p);
      const Vector& x = position[up].values();
      Vector& v = velocity[up];
      v = config.inertia * v +
          config.cognitive * r1.row(p).transpose().cwiseProduct(personal[up].values() - x) +
          config.social * r2.row(p).transpose().cwiseProduct(global.values() - x);
      v = v.cwiseMax(-clamp).cwiseMin(clamp);
      position[up] = WeightVector::project(x + v);
    }
    for (Index p = 0; p < swarm; ++p) current[static_cast<std::size_t>(p)] = sanitize(fitness(position[static_cast<std::size_t>(p)]));
    for (Index p = 0; p < swarm; ++p) {
      const auto up = static_cast<std::size_t>(p);
      if (current[up] > personal_fit[up]) {
        personal_fit[up] = current[up];
        personal[up] = position[up];
      }
      if (current[up] > global_fit) {
        global_fit = current[up];
        global = position[up];
      }
    }
    trace.push_back(global_fit);
  }
  return PsoResult{global, global_fit, std::move(trace)};
}

// ---------------------------------------------------------------------------
// Selection and combination

std::vector<Index> select_members(const WeightVector& w, double lambda_w) {
  if (!(lambda_w >= 0.0 && lambda_w < 1.0)) throw InvalidArgument("lambda_w must lie in [0, 1)");
  std::vector<Index> out;
  for (Index i = 0; i < w.size(); ++i) {
    if (lambda_w == 0.0 || w[i] > lambda_w) out.push_back(i);
  }
  if (out.empty()) {
    Index best = 0;
    w.values().maxCoeff(&best);
    out.push_back(best);
  }
  return out;
}

Matrix combine_regression(std::span<const Matrix> outputs, std::span<const Index> selected) {
  if (selected.empty()) throw EmptySelection("combine_regression: nothing selected");
  const auto first = static_cast<std::size_t>(selected.front());
  if (first >= outputs.size()) throw InvalidArgument("combine_regression: index out of range");
  Matrix sum = outputs[first];
  for (std::size_t k = 1; k < selected.size(); ++k) {
    const auto i = static_cast<std::size_t>(selected[k]);
    if (i >= outputs.size()) throw InvalidArgument("combine_regression: index out of range");
    if (outputs[i].rows() != sum.rows() || outputs[i].cols() != sum.cols()) {
      throw DimensionMismatch("combine_regression: member output shapes differ");
    }
    sum += outputs[i];
  }
  return sum / static_cast<double>(selected.size());
}

std::vector<Index> combine_classification(std::span<const std::vector<Index>> labels,
                                          std::span<const Index> selected) {
  if (selected.empty()) throw EmptySelection("combine_classification: nothing selected");
  for (Index i : selected) {
    if (i < 0 || static_cast<std::size_t>(i) >= labels.size()) throw InvalidArgument("combine_classification: index out of range");
  }
  const auto samples = labels[static_cast<std::size_t>(selected.front())].size();
  const Index k = class_count_of(labels, {});
  std::vector<Index> out(samples, 0);
  std::vector<Index> votes(static_cast<std::size_t>(k));
  for (std::size_t s = 0; s < samples; ++s) {
    std::fill(votes.begin(), votes.end(), 0);
    for (Index i : selected) {
      const auto& l = labels[static_cast<std::size_t>(i)];
      if (l.size() != samples) throw DimensionMismatch("combine_classification: label vector lengths differ");
      ++votes[static_cast<std::size_t>(l[s])];
    }
    out[s] = static_cast<Index>(std::max_element(votes.begin(), votes.end()) - votes.begin());
  }
  return out;
}

namespace {

// Member votes per validation row, with identical (votes, truth) rows merged into
// one pattern carrying a count; the error over patterns equals the per-row error.
class VoteTable {
 public:
  VoteTable(std::span<const std::vector<Index>> labels, std::span<const Index> truth)
      : members_(labels.size()), rows_(truth.size()) {
    if (truth.empty()) throw InvalidArgument("weighted_vote_error: empty validation set");
    for (const auto& l : labels) {
      if (l.size() != truth.size()) throw DimensionMismatch("weighted_vote_error: label vector lengths differ");
    }
    classes_ = static_cast<std::size_t>(class_count_of(labels, truth));
    std::map<std::vector<Index>, std::size_t> seen;
    std::vector<Index> key(members_ + 1);
    for (std::size_t s = 0; s < truth.size(); ++s) {
      for (std::size_t i = 0; i < members_; ++i) key[i] = labels[i][s];
      key[members_] = truth[s];
      auto [it, fresh] = seen.emplace(key, counts_.size());
      if (fresh) {
        flat_.insert(flat_.end(), key.begin(), key.end() - 1);
        truth_.push_back(truth[s]);
        counts_.push_back(0);
      }
      ++counts_[it->second];
    }
  }

  double error(const WeightVector& w) const {
    if (static_cast<std::size_t>(w.size()) != members_) throw DimensionMismatch("weighted_vote_error: weight count");
    std::vector<double> score(classes_);
    std::size_t wrong = 0;
    for (std::size_t s = 0; s < truth_.size(); ++s) {
      std::fill(score.begin(), score.end(), 0.0);
      const Index* row = flat_.data() + s * members_;
      for (std::size_t i = 0; i < members_; ++i) score[static_cast<std::size_t>(row[i])] += w[static_cast<Index>(i)];
      const auto winner = static_cast<Index>(std::max_element(score.begin(), score.end()) - score.begin());
      if (winner != truth_[s]) wrong += counts_[s];
    }
    return static_cast<double>(wrong) / static_cast<double>(rows_);
  }

 private:
  std::size_t members_;
  std::size_t rows_;
  std::size_t classes_ = 0;
  std::vector<Index> truth_;
  std::vector<Index> flat_;
  std::vector<std::size_t> counts_;
};

}  // namespace

double weighted_vote_error(const WeightVector& w, std::span<const std::vector<Index>> labels,
                           std::span<const Index> truth) {
  if (static_cast<std::size_t>(w.size()) != labels.size()) throw DimensionMismatch("weighted_vote_error: weight count");
  return VoteTable(labels, truth).error(w);
}

SelectionResult select_ensemble(std::span<const Matrix> outputs, const Matrix& targets, TaskKind task,
                                double lambda_w, const PsoConfig& config) {
  const auto n = static_cast<Index>(outputs.size());
  if (n < 1) throw InvalidArgument("select_ensemble: no learners");
  FitnessFunction fitness;
  if (task == TaskKind::Regression) {
    auto c = correlation_matrix(outputs, targets);
    fitness = [c = std::move(c)](const WeightVector& w) {
      const double e = ensemble_error(w, c);
      return e > 0.0 ? 1.0 / e : std::numeric_limits<double>::infinity();
    };
  } else {
    std::vector<std::vector<Index>> labels;
    labels.reserve(outputs.size());
    for (const auto& o : outputs) {
      if (o.rows() != targets.rows() || o.cols() != targets.cols()) {
        throw DimensionMismatch("select_ensemble: learner output shape differs from targets");
      }
      labels.push_back(argmax_rows(o));
    }
    const auto truth = argmax_rows(targets);
    fitness = [table = VoteTable(labels, truth)](const WeightVector& w) {
      const double e = table.error(w);
      return e > 0.0 ? 1.0 / e : std::numeric_limits<double>::infinity();
    };
  }
  auto pso = pso_optimize(fitness, n, config);
  SelectionResult out{pso.best_weights, select_members(pso.best_weights, lambda_w), std::move(pso.fitness_trace),
                      !std::isfinite(pso.best_fitness)};
  return out;
}

// ---------------------------------------------------------------------------
// Standalone bootstrap ensemble

std::vector<std::vector<Index>> bootstrap_indices(Index n, Index count, std::uint64_t seed) {
  if (n < 1) throw InvalidArgument("bootstrap: empty dataset");
  if (count < 1) throw InvalidArgument("bootstrap: count must be >= 1");
  std::vector<std::vector<Index>> out;
  out.reserve(static_cast<std::size_t>(count));
  for (Index t = 0; t < count; ++t) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
    std::uniform_int_distribution<Index> pick(0, n - 1);
    std::vector<Index> bag(static_cast<std::size_t>(n));
    for (auto& i : bag) i = pick(rng);
    out.push_back(std::move(bag));
  }
  return out;
}

std::vector<Dataset> bootstrap_samples(const Dataset& s, Index count, std::uint64_t seed) {
  std::vector<Dataset> out;
  for (const auto& bag : bootstrap_indices(s.size(), count, seed)) out.push_back(s.rows(bag));
  return out;
}

Matrix SelectiveEnsemble::predict(const Matrix& x) const {
  std::vector<Matrix> outputs;
  outputs.reserve(learners.size());
  for (Index i : selection.selected) outputs.push_back(learners[static_cast<std::size_t>(i)](x));
  std::vector<Index> all(outputs.size());
  std::iota(all.begin(), all.end(), Index{0});
  if (task == TaskKind::Regression) return combine_regression(outputs, all);
  std::vector<std::vector<Index>> labels;
  for (const auto& o : outputs) labels.push_back(argmax_rows(o));
  return one_hot(combine_classification(labels, all), class_count);
}

Matrix SelectiveEnsemble::predict_all(const Matrix& x) const {
  SelectiveEnsemble everyone = *this;
  everyone.selection.selected.resize(learners.size());
  std::iota(everyone.selection.selected.begin(), everyone.selection.selected.end(), Index{0});
  return everyone.predict(x);
}

SelectiveEnsemble psosen_standalone(const Dataset& s, const LearnerTrainer& trainer, Index count,
                                    std::optional<double> lambda_w, const PsoConfig& pso, std::uint64_t seed) {
  if (count < 2) throw InvalidArgument("psosen_standalone: need at least 2 learners");
  const auto bags = bootstrap_indices(s.size(), count, seed);

  SelectiveEnsemble out;
  out.task = s.task;
  out.class_count = s.class_count;
  std::vector<bool> in_bag(static_cast<std::size_t>(s.size()));
  std::vector<bool> out_of_bag(static_cast<std::size_t>(s.size()), false);
  for (Index t = 0; t < count; ++t) {
    const auto& bag = bags[static_cast<std::size_t>(t)];
    out.learners.push_back(trainer(s.rows(bag), t));
    std::fill(in_bag.begin(), in_bag.end(), false);
    for (Index i : bag) in_bag[static_cast<std::size_t>(i)] = true;
    for (std::size_t i = 0; i < in_bag.size(); ++i) {
      if (!in_bag[i]) out_of_bag[i] = true;
    }
  }
  for (std::size_t i = 0; i < out_of_bag.size(); ++i) {
    if (out_of_bag[i]) out.validation_rows.push_back(static_cast<Index>(i));
  }
  if (out.validation_rows.empty()) {
    out.validation_rows.resize(static_cast<std::size_t>(s.size()));
    std::iota(out.validation_rows.begin(), out.validation_rows.end(), Index{0});
  }

  const Dataset v = s.rows(out.validation_rows);
  std::vector<Matrix> outputs;
  outputs.reserve(out.learners.size());
  for (const auto& learner : out.learners) outputs.push_back(learner(v.x));
  const double threshold = lambda_w.value_or(1.0 / static_cast<double>(count));
  PsoConfig swarm = pso;
  swarm.seed = derive_seed(seed, static_cast<std::uint64_t>(count)) ^ pso.seed;
  out.selection = select_ensemble(outputs, v.t, s.task, threshold, swarm);
  return out;
}

}  // namespace roselm
