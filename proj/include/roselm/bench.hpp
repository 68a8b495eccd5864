#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "roselm/dataset.hpp"
#include "roselm/elm.hpp"
#include "roselm/psosen.hpp"

namespace roselm {

enum class Algorithm { Oselm, Eoselm, Roselm };

std::string to_string(Algorithm algorithm);
Algorithm parse_algorithm(std::string_view text);

/// Published per-dataset settings used when a run does not override them.
struct DatasetPreset {
  std::string name;
  TaskKind task;
  Index n_train;
  Index n_test;
  Index nodes_sigmoid;
  Index nodes_rbf;
  Index ensemble_sigmoid;
  Index ensemble_rbf;
};

/// Looks a preset up by file stem ("auto-mpg", "new-thyroid", ...). The
/// "new-thyroid-2class" stem maps to the new-thyroid settings.
std::optional<DatasetPreset> find_preset(std::string_view stem);

/// Where a run's data comes from. path == "synth" selects the synthetic quadratic.
struct DatasetSpec {
  std::string path;
  std::string schema;            ///< column spec; empty: last column is the target
  TaskKind task = TaskKind::Regression;
  Index n_train = 0;             ///< 0: preset value, else 75% of the rows
  SynthOptions synth;            ///< seed is replaced per trial

  bool synthetic() const { return path == "synth"; }
};

struct ExperimentConfig {
  DatasetSpec data;
  Algorithm algorithm = Algorithm::Roselm;
  ActivationKind activation = ActivationKind::Sigmoid;
  Index n_tilde = 0;        ///< 0: preset value
  Index ensemble_size = 0;  ///< 0: preset value (or 1); forced to 1 for OS-ELM
  ChunkPolicy chunk = ChunkPolicy::one_by_one();
  Index trials = 1;
  /// Required for ROS-ELM. EOS-ELM always runs with +inf.
  double lambda_rmse = std::numeric_limits<double>::quiet_NaN();
  std::optional<double> lambda_w;
  PsoConfig pso;
  Index buffer_capacity = 256;
  Index init_size = 0;      ///< 0: n_tilde + 10
  std::uint64_t seed = 0;
};

struct Summary {
  double mean = 0.0;
  double dev = 0.0;  ///< sample standard deviation across trials
};

Summary summarize(std::span<const double> values);

struct TrialRecord {
  Index trial = 0;
  std::uint64_t seed = 0;
  double train_metric = 0.0;
  double test_metric = 0.0;
  double fire_rate = 0.0;
  Index steps = 0;
  double train_seconds = 0.0;
  /// Prequential RMSE of the system output per streamed chunk.
  std::vector<double> curve;
  /// Chunk RMSE over members per streamed chunk (the selection trigger).
  std::vector<double> member_curve;
};

struct CurvePoint {
  Index step = 0;
  Index samples_seen = 0;
  double rmse = 0.0;         ///< mean over trials of the output's chunk RMSE
  double member_rmse = 0.0;  ///< mean over trials of the member chunk RMSE
};

struct TrialReport {
  std::string dataset;
  Algorithm algorithm = Algorithm::Oselm;
  ActivationKind activation = ActivationKind::Sigmoid;
  TaskKind task = TaskKind::Regression;
  Index n_tilde = 0;
  Index ensemble_size = 1;
  double lambda_rmse = std::numeric_limits<double>::infinity();
  double lambda_w = 1.0;
  std::string chunk;
  std::uint64_t seed = 0;

  std::vector<TrialRecord> trials;
  Summary train;
  Summary test;
  double fire_rate = 0.0;
  double mean_train_seconds = 0.0;
  std::vector<CurvePoint> curve;

  /// "rmse" or "accuracy".
  std::string metric() const { return task == TaskKind::Regression ? "rmse" : "accuracy"; }
  /// Rebuilds train/test/fire_rate/timing summaries from the per-trial records.
  void recompute_aggregates();
};

/// Runs cfg.trials independent trials. Trial i draws everything from
/// derive_seed(cfg.seed, i): its split, member parameters and PSO streams.
TrialReport run_experiment(const ExperimentConfig& cfg);

struct EnsembleSweep {
  TrialReport baseline;  ///< ensemble size 1
  std::vector<TrialReport> reports;
  Index recommended = 1;
  /// Set when no size matched the baseline metric and 1 was recommended.
  bool warning = false;
};

/// Among sizes whose mean test metric is no worse than the size-1 baseline, picks
/// the one with the lowest test deviation (smaller size on ties). Returns
/// {1, true} when none qualifies.
std::pair<Index, bool> recommend_ensemble_size(const TrialReport& baseline, std::span<const TrialReport> reports);

EnsembleSweep sweep_ensemble_size(const ExperimentConfig& base, std::span<const Index> sizes);

/// One ROS-ELM report per threshold.
std::vector<TrialReport> sweep_lambda_rmse(const ExperimentConfig& base, std::span<const double> thresholds);

enum class ReportFormat { Table, Csv, Json };
ReportFormat parse_report_format(std::string_view text);

/// Table: one row per report in the layout of the comparison tables (mean and
/// deviation columns). Csv: the mean learning curve as step rows. Json: the full
/// report, with timing confined to a separate "timing" object.
std::string emit_report(const TrialReport& report, ReportFormat format);
std::string emit_reports(std::span<const TrialReport> reports, ReportFormat format);
std::string emit_sweep(const EnsembleSweep& sweep, ReportFormat format);
std::string emit_threshold_sweep(std::span<const TrialReport> reports, ReportFormat format);

/// Inverse of the Json format (timing included).
TrialReport parse_report_json(std::string_view text);

/// A trained predictor detached from its training stream, as saved by `train`.
struct TrainedModel {
  Algorithm algorithm = Algorithm::Oselm;
  TaskKind task = TaskKind::Regression;
  NormalizationSpec normalization;
  std::vector<ElmModel> members;
  std::vector<Index> selected;
  std::vector<std::string> feature_names;
  std::vector<std::string> class_labels;

  /// Combined output in normalized units (regression) or as a {-1,+1} one-hot vote.
  Matrix predict_normalized(const Matrix& x_raw) const;
  /// Regression outputs mapped back to the original target scale.
  Matrix predict(const Matrix& x_raw) const;

  std::string to_json() const;
  static TrainedModel from_json(std::string_view text);
};

/// Streams every row of cfg.data (synthetic: its training part) through the
/// configured algorithm. The optional record receives the learning curve, fire
/// rate, training time and training metric.
TrainedModel train_model(const ExperimentConfig& cfg, TrialRecord* record = nullptr);

struct EvalResult {
  std::string metric;  ///< "rmse" (normalized units) or "accuracy"
  double value = 0.0;
  double raw_rmse = 0.0;  ///< regression only: RMSE in target units
  Index rows = 0;
};

/// Scores model on ds. Class labels are matched by name, not by position.
EvalResult evaluate_model(const TrainedModel& model, const Dataset& ds);

/// Loads the dataset named by spec (or generates the synthetic one) without splitting.
Dataset load_dataset(const DatasetSpec& spec);

}  // namespace roselm
