#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "roselm/dataset.hpp"
#include "roselm/oselm.hpp"
#include "roselm/psosen.hpp"

namespace roselm {

struct RoselmConfig {
  Index n_learners = 1;
  Index n_tilde = 0;
  ActivationKind activation = ActivationKind::Sigmoid;
  TaskKind task = TaskKind::Regression;
  /// Chunk RMSE above which PSOSEN re-selects the ensemble. No default: must be set.
  /// +inf never selects (plain averaging); 0 selects on every step with nonzero error.
  double lambda_rmse = std::numeric_limits<double>::quiet_NaN();
  /// Weight threshold for selection; 1 / n_learners when unset.
  std::optional<double> lambda_w;
  PsoConfig pso;
  Index validation_buffer_capacity = 256;
  std::uint64_t seed = 0;

  void validate() const;
  double effective_lambda_w() const;
};

/// Fixed-capacity FIFO of the most recent (x, t) rows.
class ValidationBuffer {
 public:
  ValidationBuffer(Index capacity, Index input_dim, Index output_dim);

  /// Appends rows in order, evicting the oldest once full.
  void absorb(const Matrix& x, const Matrix& t);

  Index size() const { return size_; }
  Index capacity() const { return x_.rows(); }
  /// Stored rows, oldest first.
  Matrix inputs() const;
  Matrix targets() const;

 private:
  Matrix ordered(const Matrix& ring) const;

  Matrix x_;
  Matrix t_;
  Index head_ = 0;  // next slot to overwrite
  Index size_ = 0;
};

struct StepDiagnostics {
  /// Chunk RMSE over members, computed before any member learns the chunk.
  double rmse = 0.0;
  bool psosen_fired = false;
  /// PSOSEN fired but failed or was degenerate, so every member was kept.
  bool fallback = false;
  std::vector<Index> selected;
  std::optional<Vector> weights;
};

/// N online learners sharing node count and dimensions, the currently selected
/// subset, and a rolling validation buffer.
struct EnsembleState {
  RoselmConfig config;
  std::vector<OselmState> members;
  std::vector<Index> selected;
  ValidationBuffer buffer;
  Index steps = 0;

  Index output_dim() const { return members.front().output_dim(); }
};

/// Member i gets hidden parameters from derive_seed(config.seed, i). The buffer is
/// primed with the last `capacity` rows of the seed chunk; all members start selected.
EnsembleState roselm_init(const RoselmConfig& config, const Matrix& x0, const Matrix& t0);

/// E = sqrt(mean over members of (mean over samples and outputs of squared error)).
double chunk_rmse(const EnsembleState& state, const Matrix& x, const Matrix& t);

struct StepResult {
  Matrix prediction;
  EnsembleState state;
  StepDiagnostics diagnostics;
};

/// One prequential step on a labelled chunk:
///  1. E = chunk_rmse on the chunk;
///  2. E > lambda_rmse: PSOSEN over the live members, scored on the buffer; else all members;
///  3. prediction = combination over the selected members;
///  4. every member learns the chunk;
///  5. the buffer absorbs the chunk.
/// Classification predictions are one-hot {-1, +1} rows of the vote.
StepResult roselm_step(EnsembleState state, const Matrix& x, const Matrix& t);

/// In-place form of roselm_step; returns the prediction.
Matrix roselm_step_in_place(EnsembleState& state, const Matrix& x, const Matrix& t,
                            StepDiagnostics* diagnostics = nullptr);

/// Combination of the currently selected members on x; does not mutate state.
Matrix roselm_predict(const EnsembleState& state, const Matrix& x);

/// Combines per-member outputs over `selected` (mean, or vote for classification).
Matrix combine_outputs(std::span<const Matrix> outputs, std::span<const Index> selected, TaskKind task);

}  // namespace roselm
