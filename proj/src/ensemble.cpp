#include "roselm/ensemble.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "roselm/errors.hpp"
#include "roselm/random.hpp"

namespace roselm {

namespace {

constexpr std::uint64_t kPsoStream = 0x5053'4F53'454EULL;

std::vector<Index> all_members(Index n) {
  std::vector<Index> out(static_cast<std::size_t>(n));
  std::iota(out.begin(), out.end(), Index{0});
  return out;
}

std::vector<Matrix> member_outputs(const EnsembleState& state, const Matrix& x) {
  if (x.cols() != state.members.front().layer.input_dim()) {
    throw DimensionMismatch("ensemble: input has " + std::to_string(x.cols()) + " columns, expected " +
                            std::to_string(state.members.front().layer.input_dim()));
  }
  std::vector<Matrix> out;
  out.reserve(state.members.size());
  for (const auto& m : state.members) out.push_back(m.predict(x));
  return out;
}

double rmse_over_members(std::span<const Matrix> outputs, const Matrix& t) {
  if (t.size() == 0) throw InvalidArgument("chunk_rmse: empty chunk");
  double total = 0.0;
  for (const auto& o : outputs) {
    if (o.rows() != t.rows() || o.cols() != t.cols()) throw DimensionMismatch("chunk_rmse: target shape mismatch");
    total += (o - t).squaredNorm() / static_cast<double>(t.size());
  }
  return std::sqrt(total / static_cast<double>(outputs.size()));
}

}  // namespace

void RoselmConfig::validate() const {
  if (n_learners < 1) throw InvalidArgument("n_learners must be >= 1");
  if (n_tilde < 1) throw InvalidArgument("n_tilde must be >= 1");
  if (std::isnan(lambda_rmse)) throw InvalidArgument("lambda_rmse must be set");
  if (lambda_rmse < 0.0) throw InvalidArgument("lambda_rmse must be >= 0");
  if (validation_buffer_capacity < 1) throw InvalidArgument("validation_buffer_capacity must be >= 1");
  const double lw = effective_lambda_w();
  if (!(lw >= 0.0 && lw < 1.0)) throw InvalidArgument("lambda_w must lie in [0, 1)");
  pso.validate();
}

double RoselmConfig::effective_lambda_w() const {
  if (lambda_w) return *lambda_w;
  // 1/N would be 1 for a lone member, outside [0, 1); the only member is kept either way.
  return n_learners > 1 ? 1.0 / static_cast<double>(n_learners) : 0.0;
}

ValidationBuffer::ValidationBuffer(Index capacity, Index input_dim, Index output_dim)
    : x_(capacity, input_dim), t_(capacity, output_dim) {
  if (capacity < 1) throw InvalidArgument("validation buffer capacity must be >= 1");
}

void ValidationBuffer::absorb(const Matrix& x, const Matrix& t) {
  if (x.rows() != t.rows() || x.cols() != x_.cols() || t.cols() != t_.cols()) {
    throw DimensionMismatch("validation buffer: chunk shape mismatch");
  }
  // Only the newest `capacity` rows can survive.
  const Index skip = std::max<Index>(0, x.rows() - capacity());
  for (Index r = skip; r < x.rows(); ++r) {
    x_.row(head_) = x.row(r);
    t_.row(head_) = t.row(r);
    head_ = (head_ + 1) % capacity();
    size_ = std::min(size_ + 1, capacity());
  }
}

Matrix ValidationBuffer::ordered(const Matrix& ring) const {
  Matrix out(size_, ring.cols());
  const Index start = size_ < capacity() ? 0 : head_;
  for (Index i = 0; i < size_; ++i) out.row(i) = ring.row((start + i) % capacity());
  return out;
}

Matrix ValidationBuffer::inputs() const { return ordered(x_); }
Matrix ValidationBuffer::targets() const { return ordered(t_); }

EnsembleState roselm_init(const RoselmConfig& config, const Matrix& x0, const Matrix& t0) {
  config.validate();
  if (x0.rows() != t0.rows()) throw DimensionMismatch("roselm_init: X0 and T0 row counts differ");
  if (config.task == TaskKind::Classification && t0.cols() < 2) {
    throw InvalidArgument("roselm_init: classification needs one-hot targets with >= 2 classes");
  }
  std::vector<OselmState> members;
  members.reserve(static_cast<std::size_t>(config.n_learners));
  for (Index i = 0; i < config.n_learners; ++i) {
    auto layer = init_hidden(x0.cols(), config.n_tilde, config.activation,
                             derive_seed(config.seed, static_cast<std::uint64_t>(i)));
    members.push_back(oselm_init(layer, x0, t0));
  }
  ValidationBuffer buffer(config.validation_buffer_capacity, x0.cols(), t0.cols());
  buffer.absorb(x0, t0);
  return EnsembleState{config, std::move(members), all_members(config.n_learners), std::move(buffer), 0};
}

double chunk_rmse(const EnsembleState& state, const Matrix& x, const Matrix& t) {
  return rmse_over_members(member_outputs(state, x), t);
}

Matrix combine_outputs(std::span<const Matrix> outputs, std::span<const Index> selected, TaskKind task) {
  if (task == TaskKind::Regression) return combine_regression(outputs, selected);
  std::vector<std::vector<Index>> labels;
  labels.reserve(outputs.size());
  for (const auto& o : outputs) labels.push_back(argmax_rows(o));
  return one_hot(combine_classification(labels, selected), outputs.front().cols());
}

Matrix roselm_step_in_place(EnsembleState& state, const Matrix& x, const Matrix& t, StepDiagnostics* diagnostics) {
  if (x.rows() == 0) throw InvalidArgument("roselm_step: empty chunk");
  if (x.rows() != t.rows()) throw DimensionMismatch("roselm_step: X and T row counts differ");
  if (t.cols() != state.output_dim()) throw DimensionMismatch("roselm_step: target width differs from ensemble");

  const auto outputs = member_outputs(state, x);
  StepDiagnostics diag;
  diag.rmse = rmse_over_members(outputs, t);

  const auto n = static_cast<Index>(state.members.size());
  if (diag.rmse > state.config.lambda_rmse) {
    diag.psosen_fired = true;
    PsoConfig pso = state.config.pso;
    pso.seed = derive_seed(derive_seed(state.config.seed, kPsoStream) ^ state.config.pso.seed,
                           static_cast<std::uint64_t>(state.steps));
    try {
      const Matrix v_x = state.buffer.inputs();
      const auto on_buffer = member_outputs(state, v_x);
      auto sel = select_ensemble(on_buffer, state.buffer.targets(), state.config.task,
                                 state.config.effective_lambda_w(), pso);
      diag.weights = sel.best_weights.values();
      if (sel.degenerate) {
        diag.fallback = true;
        state.selected = all_members(n);
      } else {
        state.selected = std::move(sel.selected);
      }
    } catch (const Error&) {
      diag.fallback = true;
      state.selected = all_members(n);
    }
  } else {
    state.selected = all_members(n);
  }
  diag.selected = state.selected;

  Matrix prediction = combine_outputs(outputs, state.selected, state.config.task);

  // Selection never changes what the members learn.
  for (auto& m : state.members) m.learn(x, t);
  state.buffer.absorb(x, t);
  ++state.steps;
  if (diagnostics) *diagnostics = std::move(diag);
  return prediction;
}

StepResult roselm_step(EnsembleState state, const Matrix& x, const Matrix& t) {
  StepDiagnostics diag;
  Matrix prediction = roselm_step_in_place(state, x, t, &diag);
  return StepResult{std::move(prediction), std::move(state), std::move(diag)};
}

Matrix roselm_predict(const EnsembleState& state, const Matrix& x) {
  return combine_outputs(member_outputs(state, x), state.selected, state.config.task);
}

}  // namespace roselm
