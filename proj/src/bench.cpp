#include "roselm/bench.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <json.hpp>
#include <sstream>

#include "roselm/ensemble.hpp"
#include "roselm/errors.hpp"
#include "roselm/oselm.hpp"
#include "roselm/random.hpp"

namespace roselm {

namespace {

using nlohmann::json;

// Streams drawn from a trial seed. Stream 0.. are the members themselves.
constexpr std::uint64_t kSplitStream = 0xA11CE;
constexpr std::uint64_t kSynthStream = 0xB0B;
constexpr Index kSynthNodes = 20;

const std::array<DatasetPreset, 10> kPresets{{
    {"auto-mpg", TaskKind::Regression, 320, 72, 25, 25, 20, 20},
    {"abalone", TaskKind::Regression, 3000, 1177, 25, 25, 5, 25},
    {"california-housing", TaskKind::Regression, 8000, 12640, 50, 50, 5, 5},
    {"mackey-glass", TaskKind::Regression, 4000, 500, 120, 120, 5, 5},
    {"zoo", TaskKind::Classification, 71, 30, 35, 35, 25, 15},
    {"wine", TaskKind::Classification, 120, 58, 30, 30, 5, 5},
    {"new-thyroid", TaskKind::Classification, 140, 75, 20, 20, 15, 15},
    {"monks-1", TaskKind::Classification, 300, 132, 80, 80, 15, 20},
    {"image-segmentation", TaskKind::Classification, 1500, 810, 180, 180, 20, 5},
    {"satellite-image", TaskKind::Classification, 4435, 2000, 400, 400, 20, 10},
}};

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  std::replace(out.begin(), out.end(), '_', '-');
  return out;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

json num(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

double num_from(const json& j) {
  if (j.is_number()) return j.get<double>();
  const auto s = j.get<std::string>();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  throw ParseError("bad number '" + s + "'", 0, 0);
}

double rmse(const Matrix& y, const Matrix& t) {
  return std::sqrt((y - t).squaredNorm() / static_cast<double>(t.size()));
}

double metric(const Matrix& y, const Matrix& t, TaskKind task) {
  if (task == TaskKind::Regression) return rmse(y, t);
  const auto a = argmax_rows(y);
  const auto b = argmax_rows(t);
  Index hits = 0;
  for (std::size_t i = 0; i < a.size(); ++i) hits += a[i] == b[i];
  return static_cast<double>(hits) / static_cast<double>(a.size());
}

struct ResolvedConfig {
  ExperimentConfig cfg;
  std::string name;
  Dataset full;  // empty when synthetic
};

// Fills preset-driven defaults. whole: every row is training data (no test split).
ResolvedConfig resolve(const ExperimentConfig& in, bool whole = false) {
  ResolvedConfig r{in, {}, {}};
  auto& cfg = r.cfg;
  if (cfg.trials < 1) throw InvalidArgument("trials must be >= 1");
  std::optional<DatasetPreset> preset;
  if (cfg.data.synthetic()) {
    r.name = "synth";
  } else {
    r.name = std::filesystem::path(cfg.data.path).stem().string();
    preset = find_preset(r.name);
    r.full = load_dataset(cfg.data);
    cfg.data.task = r.full.task;
  }
  const bool rbf = cfg.activation == ActivationKind::Rbf;
  if (cfg.n_tilde == 0) {
    if (preset) {
      cfg.n_tilde = rbf ? preset->nodes_rbf : preset->nodes_sigmoid;
    } else if (cfg.data.synthetic()) {
      cfg.n_tilde = kSynthNodes;
    } else {
      throw InvalidArgument("--nodes is required for dataset '" + r.name + "'");
    }
  }
  if (cfg.algorithm == Algorithm::Oselm) {
    cfg.ensemble_size = 1;
  } else if (cfg.ensemble_size == 0) {
    cfg.ensemble_size = preset ? (rbf ? preset->ensemble_rbf : preset->ensemble_sigmoid) : 1;
  }
  if (cfg.ensemble_size < 1) throw InvalidArgument("ensemble size must be >= 1");
  if (cfg.algorithm == Algorithm::Eoselm) cfg.lambda_rmse = std::numeric_limits<double>::infinity();
  if (cfg.algorithm == Algorithm::Roselm && std::isnan(cfg.lambda_rmse))
    throw InvalidArgument("ROS-ELM needs lambda_rmse");
  if (cfg.init_size == 0) cfg.init_size = cfg.n_tilde + 10;
  if (cfg.init_size < cfg.n_tilde) throw InsufficientInitData("init size must be >= node count");
  if (!cfg.data.synthetic()) {
    const Index n = r.full.size();
    if (whole) {
      cfg.data.n_train = n;
    } else if (cfg.data.n_train == 0) {
      cfg.data.n_train = preset && preset->n_train < n ? preset->n_train
                                                       : static_cast<Index>(std::llround(0.75 * static_cast<double>(n)));
    }
    if (!whole && cfg.data.n_train >= n) throw InvalidArgument("n_train must leave at least one test row");
  } else {
    cfg.data.n_train = cfg.data.synth.n_train;
  }
  if (cfg.init_size > cfg.data.n_train) throw InsufficientInitData("init size exceeds the training set");
  cfg.pso.validate();
  return r;
}

struct Fitted {
  std::vector<ElmModel> members;
  std::vector<Index> selected;
};

Matrix fitted_output(const Fitted& f, const Matrix& x, TaskKind task) {
  std::vector<Matrix> out;
  out.reserve(f.members.size());
  for (const auto& m : f.members) out.push_back(predict(m, x));
  return combine_outputs(out, f.selected, task);
}

// Initializes on the first init_size rows of a normalized training set and
// streams the rest, scoring each chunk before learning it.
Fitted fit_stream(const ExperimentConfig& cfg, const Dataset& train, std::uint64_t seed, TrialRecord& rec) {
  const Index n0 = cfg.init_size;
  const Matrix x0 = train.x.topRows(n0);
  const Matrix t0 = train.t.topRows(n0);
  const auto stream = train.slice(n0, train.size() - n0);
  const auto ranges = cfg.chunk.ranges(stream.size());

  Fitted fitted;
  Index fired = 0;
  const auto start = std::chrono::steady_clock::now();
  if (cfg.algorithm == Algorithm::Oselm) {
    auto state = oselm_init(init_hidden(train.input_dim(), cfg.n_tilde, cfg.activation, derive_seed(seed, 0)), x0, t0);
    const std::array<Index, 1> only{0};
    for (const auto& c : ranges) {
      const Matrix x = stream.x.middleRows(c.begin, c.count);
      const Matrix t = stream.t.middleRows(c.begin, c.count);
      const std::array<Matrix, 1> out{state.predict(x)};
      // Same arithmetic as the ensemble's member RMSE with one member.
      rec.member_curve.push_back(std::sqrt(((out[0] - t).squaredNorm() / static_cast<double>(t.size())) / 1.0));
      rec.curve.push_back(rmse(combine_outputs(out, only, train.task), t));
      state.learn(x, t);
    }
    fitted.members.push_back(ElmModel{state.layer, state.beta});
    fitted.selected = {0};
  } else {
    RoselmConfig rc;
    rc.n_learners = cfg.ensemble_size;
    rc.n_tilde = cfg.n_tilde;
    rc.activation = cfg.activation;
    rc.task = train.task;
    rc.lambda_rmse = cfg.lambda_rmse;
    rc.lambda_w = cfg.lambda_w;
    rc.pso = cfg.pso;
    rc.validation_buffer_capacity = cfg.buffer_capacity;
    rc.seed = seed;
    auto state = roselm_init(rc, x0, t0);
    StepDiagnostics diag;
    for (const auto& c : ranges) {
      const Matrix x = stream.x.middleRows(c.begin, c.count);
      const Matrix t = stream.t.middleRows(c.begin, c.count);
      const Matrix y = roselm_step_in_place(state, x, t, &diag);
      rec.member_curve.push_back(diag.rmse);
      rec.curve.push_back(rmse(y, t));
      fired += diag.psosen_fired;
    }
    for (const auto& m : state.members) fitted.members.push_back(ElmModel{m.layer, m.beta});
    fitted.selected = state.selected;
  }
  rec.train_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  rec.steps = static_cast<Index>(ranges.size());
  rec.fire_rate = rec.steps ? static_cast<double>(fired) / static_cast<double>(rec.steps) : 0.0;
  rec.train_metric = metric(fitted_output(fitted, train.x, train.task), train.t, train.task);
  return fitted;
}

TrialRecord run_trial(const ResolvedConfig& r, Index trial) {
  const auto& cfg = r.cfg;
  TrialRecord rec;
  rec.trial = trial;
  rec.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(trial));

  Dataset train, test;
  if (cfg.data.synthetic()) {
    auto opts = cfg.data.synth;
    opts.seed = derive_seed(rec.seed, kSynthStream);
    std::tie(train, test) = synth_quadratic(opts);
  } else {
    std::tie(train, test) = split(r.full, cfg.data.n_train, derive_seed(rec.seed, kSplitStream));
  }
  const auto norm = NormalizationSpec::fit(train);
  train = norm.apply(train);
  test = norm.apply(test);

  const auto fitted = fit_stream(cfg, train, rec.seed, rec);
  rec.test_metric = metric(fitted_output(fitted, test.x, test.task), test.t, test.task);
  return rec;
}

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from(const json& j, Index cols) {
  Matrix m(static_cast<Index>(j.size()), cols);
  for (Index i = 0; i < m.rows(); ++i) {
    const auto& row = j[static_cast<std::size_t>(i)];
    if (static_cast<Index>(row.size()) != cols) throw ParseError("model json: ragged matrix", 0, 0);
    for (Index k = 0; k < cols; ++k) m(i, k) = row[static_cast<std::size_t>(k)].get<double>();
  }
  return m;
}

json vector_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vector vector_from(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()));
}

json affine_json(const AffineMap& m) { return {{"scale", vector_json(m.scale)}, {"offset", vector_json(m.offset)}}; }

AffineMap affine_from(const json& j) { return {vector_from(j.at("scale")), vector_from(j.at("offset"))}; }

std::vector<CurvePoint> mean_curve(const std::vector<TrialRecord>& trials, Index n0, const ChunkPolicy& chunk,
                                   Index stream_size) {
  std::vector<CurvePoint> curve;
  if (trials.empty()) return curve;
  const auto ranges = chunk.ranges(stream_size);
  Index seen = n0;
  for (std::size_t k = 0; k < ranges.size(); ++k) {
    seen += ranges[k].count;
    CurvePoint p;
    p.step = static_cast<Index>(k);
    p.samples_seen = seen;
    for (const auto& t : trials) {
      p.rmse += t.curve[k];
      p.member_rmse += t.member_curve[k];
    }
    p.rmse /= static_cast<double>(trials.size());
    p.member_rmse /= static_cast<double>(trials.size());
    curve.push_back(p);
  }
  return curve;
}

json report_to_json(const TrialReport& r) {
  json j;
  j["dataset"] = r.dataset;
  j["algorithm"] = to_string(r.algorithm);
  j["activation"] = to_string(r.activation);
  j["task"] = r.task == TaskKind::Regression ? "regression" : "classification";
  j["nodes"] = r.n_tilde;
  j["ensemble"] = r.ensemble_size;
  j["lambda_rmse"] = num(r.lambda_rmse);
  j["lambda_w"] = num(r.lambda_w);
  j["chunk"] = r.chunk;
  j["seed"] = r.seed;
  j["metric"] = r.metric();
  j["summary"] = {{"train_mean", num(r.train.mean)}, {"train_dev", num(r.train.dev)},
                  {"test_mean", num(r.test.mean)},   {"test_dev", num(r.test.dev)},
                  {"fire_rate", num(r.fire_rate)}};
  json trials = json::array();
  json seconds = json::array();
  for (const auto& t : r.trials) {
    trials.push_back({{"trial", t.trial},
                      {"seed", t.seed},
                      {"train", num(t.train_metric)},
                      {"test", num(t.test_metric)},
                      {"fire_rate", num(t.fire_rate)},
                      {"steps", t.steps}});
    seconds.push_back(t.train_seconds);
  }
  j["trials"] = std::move(trials);
  json curve = json::array();
  for (const auto& p : r.curve)
    curve.push_back({{"step", p.step}, {"samples", p.samples_seen}, {"rmse", num(p.rmse)},
                     {"member_rmse", num(p.member_rmse)}});
  j["curve"] = std::move(curve);
  j["timing"] = {{"mean_train_seconds", r.mean_train_seconds}, {"train_seconds", std::move(seconds)}};
  return j;
}

TrialReport report_from_json(const json& j) {
  TrialReport r;
  r.dataset = j.at("dataset").get<std::string>();
  r.algorithm = parse_algorithm(j.at("algorithm").get<std::string>());
  r.activation = parse_activation(j.at("activation").get<std::string>());
  r.task = j.at("task").get<std::string>() == "regression" ? TaskKind::Regression : TaskKind::Classification;
  r.n_tilde = j.at("nodes").get<Index>();
  r.ensemble_size = j.at("ensemble").get<Index>();
  r.lambda_rmse = num_from(j.at("lambda_rmse"));
  r.lambda_w = num_from(j.at("lambda_w"));
  r.chunk = j.at("chunk").get<std::string>();
  r.seed = j.at("seed").get<std::uint64_t>();
  const auto& s = j.at("summary");
  r.train = {num_from(s.at("train_mean")), num_from(s.at("train_dev"))};
  r.test = {num_from(s.at("test_mean")), num_from(s.at("test_dev"))};
  r.fire_rate = num_from(s.at("fire_rate"));
  const auto& timing = j.at("timing");
  const auto& seconds = timing.at("train_seconds");
  for (std::size_t i = 0; i < j.at("trials").size(); ++i) {
    const auto& t = j.at("trials")[i];
    TrialRecord rec;
    rec.trial = t.at("trial").get<Index>();
    rec.seed = t.at("seed").get<std::uint64_t>();
    rec.train_metric = num_from(t.at("train"));
    rec.test_metric = num_from(t.at("test"));
    rec.fire_rate = num_from(t.at("fire_rate"));
    rec.steps = t.at("steps").get<Index>();
    if (i < seconds.size()) rec.train_seconds = seconds[i].get<double>();
    r.trials.push_back(rec);
  }
  for (const auto& p : j.at("curve"))
    r.curve.push_back({p.at("step").get<Index>(), p.at("samples").get<Index>(), num_from(p.at("rmse")),
                       num_from(p.at("member_rmse"))});
  r.mean_train_seconds = timing.at("mean_train_seconds").get<double>();
  return r;
}

std::string metric_cell(const TrialReport& r, double v) {
  return r.task == TaskKind::Regression ? fmt("%.4f", v) : fmt("%.2f%%", 100.0 * v);
}

std::string lambda_cell(double v) { return std::isinf(v) ? std::string("inf") : fmt("%g", v); }

// Left-aligned text table with column widths fitted to the content.
std::string render(const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width;
  for (const auto& row : rows) {
    width.resize(std::max(width.size(), row.size()));
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::ostringstream out;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      if (c) out << "  ";
      out << rows[r][c];
      if (c + 1 < rows[r].size()) out << std::string(width[c] - rows[r][c].size(), ' ');
    }
    out << '\n';
    if (r == 0) {
      std::size_t total = 0;
      for (auto w : width) total += w + 2;
      out << std::string(total - 2, '-') << '\n';
    }
  }
  return out.str();
}

std::string table(std::span<const TrialReport> reports) {
  const bool reg = reports.empty() || reports.front().task == TaskKind::Regression;
  const std::string m = reg ? "RMSE" : "Accuracy";
  std::vector<std::vector<std::string>> rows{{"Dataset", "Algorithm", "#Nodes", "#Network", "Training time (s)",
                                              "Training " + m, "Testing " + m, "Testing Dev", "PSOSEN rate"}};
  for (const auto& r : reports) {
    rows.push_back({r.dataset, to_string(r.algorithm), std::to_string(r.n_tilde),
                    r.algorithm == Algorithm::Oselm ? "" : std::to_string(r.ensemble_size),
                    fmt("%.4f", r.mean_train_seconds), metric_cell(r, r.train.mean), metric_cell(r, r.test.mean),
                    fmt("%.4f", r.test.dev), fmt("%.3f", r.fire_rate)});
  }
  return render(rows);
}

std::string curve_csv(std::span<const TrialReport> reports, bool with_algorithm) {
  std::ostringstream out;
  out.precision(17);
  if (with_algorithm) out << "algorithm,";
  out << "step,samples,rmse,member_rmse\n";
  for (const auto& r : reports)
    for (const auto& p : r.curve) {
      if (with_algorithm) out << to_string(r.algorithm) << ',';
      out << p.step << ',' << p.samples_seen << ',' << p.rmse << ',' << p.member_rmse << '\n';
    }
  return out.str();
}

}  // namespace

std::string to_string(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::Oselm: return "OS-ELM";
    case Algorithm::Eoselm: return "EOS-ELM";
    case Algorithm::Roselm: return "ROS-ELM";
  }
  return "?";
}

Algorithm parse_algorithm(std::string_view text) {
  auto s = lower(text);
  s.erase(std::remove(s.begin(), s.end(), '-'), s.end());
  if (s == "oselm") return Algorithm::Oselm;
  if (s == "eoselm") return Algorithm::Eoselm;
  if (s == "roselm") return Algorithm::Roselm;
  throw InvalidArgument("unknown algorithm '" + std::string(text) + "'");
}

std::optional<DatasetPreset> find_preset(std::string_view stem) {
  auto s = lower(stem);
  if (s == "new-thyroid-2class") s = "new-thyroid";
  for (const auto& p : kPresets)
    if (p.name == s) return p;
  return std::nullopt;
}

Dataset load_dataset(const DatasetSpec& spec) {
  if (spec.synthetic()) {
    auto [train, test] = synth_quadratic(spec.synth);
    Dataset all = train;
    all.x.conservativeResize(train.size() + test.size(), Eigen::NoChange);
    all.t.conservativeResize(train.size() + test.size(), Eigen::NoChange);
    all.x.bottomRows(test.size()) = test.x;
    all.t.bottomRows(test.size()) = test.t;
    return all;
  }
  return load_delimited(spec.path, Schema::parse(spec.schema, spec.task));
}

Summary summarize(std::span<const double> values) {
  Summary s;
  if (values.empty()) return s;
  for (double v : values) s.mean += v;
  s.mean /= static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.dev = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return s;
}

void TrialReport::recompute_aggregates() {
  std::vector<double> tr, te, fr, sec;
  for (const auto& t : trials) {
    tr.push_back(t.train_metric);
    te.push_back(t.test_metric);
    fr.push_back(t.fire_rate);
    sec.push_back(t.train_seconds);
  }
  train = summarize(tr);
  test = summarize(te);
  fire_rate = summarize(fr).mean;
  mean_train_seconds = summarize(sec).mean;
}

TrialReport run_experiment(const ExperimentConfig& config) {
  const auto r = resolve(config);
  const auto& cfg = r.cfg;
  TrialReport report;
  report.dataset = r.name;
  report.algorithm = cfg.algorithm;
  report.activation = cfg.activation;
  report.task = cfg.data.task;
  report.n_tilde = cfg.n_tilde;
  report.ensemble_size = cfg.ensemble_size;
  report.lambda_rmse = cfg.algorithm == Algorithm::Oselm ? std::numeric_limits<double>::infinity() : cfg.lambda_rmse;
  report.lambda_w = cfg.lambda_w.value_or(cfg.ensemble_size > 1 ? 1.0 / static_cast<double>(cfg.ensemble_size) : 0.0);
  report.chunk = cfg.chunk.to_string();
  report.seed = cfg.seed;
  for (Index i = 0; i < cfg.trials; ++i) report.trials.push_back(run_trial(r, i));
  report.recompute_aggregates();
  report.curve = mean_curve(report.trials, cfg.init_size, cfg.chunk, cfg.data.n_train - cfg.init_size);
  return report;
}

std::pair<Index, bool> recommend_ensemble_size(const TrialReport& baseline, std::span<const TrialReport> reports) {
  const bool reg = baseline.task == TaskKind::Regression;
  const TrialReport* best = nullptr;
  for (const auto& r : reports) {
    const bool no_worse = reg ? r.test.mean <= baseline.test.mean : r.test.mean >= baseline.test.mean;
    if (!no_worse) continue;
    if (!best || r.test.dev < best->test.dev || (r.test.dev == best->test.dev && r.ensemble_size < best->ensemble_size))
      best = &r;
  }
  if (best) return {best->ensemble_size, false};
  return {1, true};
}

EnsembleSweep sweep_ensemble_size(const ExperimentConfig& base, std::span<const Index> sizes) {
  if (sizes.empty()) throw InvalidArgument("sweep_ensemble_size: no sizes");
  EnsembleSweep sweep;
  auto cfg = base;
  cfg.ensemble_size = 1;
  sweep.baseline = run_experiment(cfg);
  for (Index n : sizes) {
    if (n < 1) throw InvalidArgument("sweep_ensemble_size: sizes must be >= 1");
    cfg.ensemble_size = n;
    sweep.reports.push_back(run_experiment(cfg));
  }
  std::tie(sweep.recommended, sweep.warning) = recommend_ensemble_size(sweep.baseline, sweep.reports);
  return sweep;
}

std::vector<TrialReport> sweep_lambda_rmse(const ExperimentConfig& base, std::span<const double> thresholds) {
  if (thresholds.empty()) throw InvalidArgument("sweep_lambda_rmse: no thresholds");
  std::vector<TrialReport> out;
  auto cfg = base;
  cfg.algorithm = Algorithm::Roselm;
  for (double l : thresholds) {
    if (std::isnan(l) || l < 0.0) throw InvalidArgument("sweep_lambda_rmse: thresholds must be >= 0");
    cfg.lambda_rmse = l;
    out.push_back(run_experiment(cfg));
  }
  return out;
}

ReportFormat parse_report_format(std::string_view text) {
  const auto s = lower(text);
  if (s == "table") return ReportFormat::Table;
  if (s == "csv") return ReportFormat::Csv;
  if (s == "json") return ReportFormat::Json;
  throw InvalidArgument("unknown format '" + std::string(text) + "'");
}

std::string emit_report(const TrialReport& report, ReportFormat format) {
  switch (format) {
    case ReportFormat::Table: return table(std::span(&report, 1));
    case ReportFormat::Csv: return curve_csv(std::span(&report, 1), false);
    case ReportFormat::Json: return report_to_json(report).dump(2) + "\n";
  }
  return {};
}

std::string emit_reports(std::span<const TrialReport> reports, ReportFormat format) {
  if (reports.size() == 1) return emit_report(reports.front(), format);
  switch (format) {
    case ReportFormat::Table: return table(reports);
    case ReportFormat::Csv: return curve_csv(reports, true);
    case ReportFormat::Json: {
      json j = json::array();
      for (const auto& r : reports) j.push_back(report_to_json(r));
      return j.dump(2) + "\n";
    }
  }
  return {};
}

std::string emit_sweep(const EnsembleSweep& sweep, ReportFormat format) {
  std::vector<const TrialReport*> all{&sweep.baseline};
  for (const auto& r : sweep.reports) all.push_back(&r);
  switch (format) {
    case ReportFormat::Table: {
      const auto& b = sweep.baseline;
      std::vector<std::vector<std::string>> rows{
          {"#Network", b.task == TaskKind::Regression ? "Testing RMSE" : "Testing Accuracy", "Testing Dev",
           "PSOSEN rate"}};
      for (const auto* r : all)
        rows.push_back({r == &b ? "1 (single)" : std::to_string(r->ensemble_size), metric_cell(*r, r->test.mean), fmt("%.4f", r->test.dev),
                        fmt("%.3f", r->fire_rate)});
      auto text = render(rows) + "recommended: " + std::to_string(sweep.recommended) + "\n";
      if (sweep.warning) text += "warning: no ensemble size matched the single-network metric\n";
      return text;
    }
    case ReportFormat::Csv: {
      std::ostringstream out;
      out.precision(17);
      out << "ensemble,train_mean,test_mean,test_dev,fire_rate,recommended\n";
      for (const auto* r : all)
        out << r->ensemble_size << ',' << r->train.mean << ',' << r->test.mean << ',' << r->test.dev << ','
            << r->fire_rate << ',' << (r->ensemble_size == sweep.recommended && r != &sweep.baseline ? 1 : 0) << '\n';
      return out.str();
    }
    case ReportFormat::Json: {
      json j;
      j["baseline"] = report_to_json(sweep.baseline);
      j["reports"] = json::array();
      for (const auto& r : sweep.reports) j["reports"].push_back(report_to_json(r));
      j["recommended"] = sweep.recommended;
      j["warning"] = sweep.warning;
      return j.dump(2) + "\n";
    }
  }
  return {};
}

std::string emit_threshold_sweep(std::span<const TrialReport> reports, ReportFormat format) {
  switch (format) {
    case ReportFormat::Table: {
      const bool reg = reports.empty() || reports.front().task == TaskKind::Regression;
      std::vector<std::vector<std::string>> rows{
          {"lambda_rmse", reg ? "Testing RMSE" : "Testing Accuracy", "Testing Dev", "PSOSEN rate",
           "Training time (s)"}};
      for (const auto& r : reports)
        rows.push_back({lambda_cell(r.lambda_rmse), metric_cell(r, r.test.mean), fmt("%.4f", r.test.dev),
                        fmt("%.3f", r.fire_rate), fmt("%.4f", r.mean_train_seconds)});
      return render(rows);
    }
    case ReportFormat::Csv: {
      std::ostringstream out;
      out.precision(17);
      out << "lambda_rmse,train_mean,test_mean,test_dev,fire_rate\n";
      for (const auto& r : reports)
        out << lambda_cell(r.lambda_rmse) << ',' << r.train.mean << ',' << r.test.mean << ',' << r.test.dev << ','
            << r.fire_rate << '\n';
      return out.str();
    }
    case ReportFormat::Json: {
      json j = json::array();
      for (const auto& r : reports) j.push_back(report_to_json(r));
      return j.dump(2) + "\n";
    }
  }
  return {};
}

TrialReport parse_report_json(std::string_view text) {
  try {
    return report_from_json(json::parse(text));
  } catch (const json::exception& e) {
    throw ParseError(std::string("report json: ") + e.what(), 0, 0);
  }
}

Matrix TrainedModel::predict_normalized(const Matrix& x_raw) const {
  if (members.empty()) throw InvalidArgument("model has no members");
  if (x_raw.cols() != members.front().layer.input_dim())
    throw DimensionMismatch("model expects " + std::to_string(members.front().layer.input_dim()) + " inputs, got " +
                            std::to_string(x_raw.cols()));
  return fitted_output(Fitted{members, selected}, normalization.inputs.apply(x_raw), task);
}

Matrix TrainedModel::predict(const Matrix& x_raw) const {
  const Matrix y = predict_normalized(x_raw);
  return task == TaskKind::Regression ? normalization.denormalize_outputs(y) : y;
}

std::string TrainedModel::to_json() const {
  json j;
  j["format"] = "roselm-model/1";
  j["algorithm"] = roselm::to_string(algorithm);
  j["task"] = task == TaskKind::Regression ? "regression" : "classification";
  j["feature_names"] = feature_names;
  j["class_labels"] = class_labels;
  j["normalization"] = {{"lo", normalization.lo}, {"hi", normalization.hi},
                        {"inputs", affine_json(normalization.inputs)}};
  if (normalization.outputs) j["normalization"]["outputs"] = affine_json(*normalization.outputs);
  j["selected"] = selected;
  j["members"] = json::array();
  for (const auto& m : members) {
    j["members"].push_back({{"activation", roselm::to_string(m.layer.activation())},
                            {"weights", matrix_json(m.layer.weights())},
                            {"biases", vector_json(m.layer.biases())},
                            {"beta", matrix_json(m.beta)}});
  }
  return j.dump(1) + "\n";
}

TrainedModel TrainedModel::from_json(std::string_view text) {
  try {
    const auto j = json::parse(text);
    if (j.at("format").get<std::string>() != "roselm-model/1") throw ParseError("unsupported model format", 0, 0);
    TrainedModel m;
    m.algorithm = parse_algorithm(j.at("algorithm").get<std::string>());
    m.task = j.at("task").get<std::string>() == "regression" ? TaskKind::Regression : TaskKind::Classification;
    m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    m.class_labels = j.at("class_labels").get<std::vector<std::string>>();
    const auto& n = j.at("normalization");
    m.normalization.task = m.task;
    m.normalization.lo = n.at("lo").get<double>();
    m.normalization.hi = n.at("hi").get<double>();
    m.normalization.inputs = affine_from(n.at("inputs"));
    if (n.contains("outputs")) m.normalization.outputs = affine_from(n.at("outputs"));
    m.selected = j.at("selected").get<std::vector<Index>>();
    const auto in_dim = m.normalization.inputs.scale.size();
    for (const auto& e : j.at("members")) {
      Matrix w = matrix_from(e.at("weights"), in_dim);
      HiddenLayer layer(parse_activation(e.at("activation").get<std::string>()), std::move(w),
                        vector_from(e.at("biases")));
      const auto& beta = e.at("beta");
      if (beta.empty()) throw ParseError("model json: empty beta", 0, 0);
      m.members.push_back(ElmModel{std::move(layer), matrix_from(beta, static_cast<Index>(beta.front().size()))});
    }
    if (m.members.empty()) throw ParseError("model json: no members", 0, 0);
    for (Index i : m.selected)
      if (i < 0 || i >= static_cast<Index>(m.members.size())) throw ParseError("model json: bad selection", 0, 0);
    return m;
  } catch (const json::exception& e) {
    throw ParseError(std::string("model json: ") + e.what(), 0, 0);
  }
}

TrainedModel train_model(const ExperimentConfig& config, TrialRecord* record) {
  const auto r = resolve(config, true);
  const auto& cfg = r.cfg;
  Dataset train;
  if (cfg.data.synthetic()) {
    train = synth_quadratic(cfg.data.synth).first;
  } else {
    train = r.full;
  }
  TrainedModel model;
  model.algorithm = cfg.algorithm;
  model.task = train.task;
  model.feature_names = train.feature_names;
  model.class_labels = train.class_labels;
  model.normalization = NormalizationSpec::fit(train);
  const auto norm = model.normalization.apply(train);
  TrialRecord rec;
  rec.seed = cfg.seed;
  auto fitted = fit_stream(cfg, norm, cfg.seed, rec);
  model.members = std::move(fitted.members);
  model.selected = std::move(fitted.selected);
  if (record) *record = std::move(rec);
  return model;
}

EvalResult evaluate_model(const TrainedModel& model, const Dataset& ds) {
  ds.validate();
  if (ds.task != model.task) throw SchemaMismatch("dataset task differs from the model's");
  EvalResult res;
  res.rows = ds.size();
  if (res.rows == 0) throw InvalidArgument("evaluate: empty dataset");
  const Matrix y = model.predict_normalized(ds.x);
  if (model.task == TaskKind::Regression) {
    if (ds.output_dim() != y.cols()) throw DimensionMismatch("evaluate: target width differs from the model's");
    res.metric = "rmse";
    res.value = rmse(y, model.normalization.outputs->apply(ds.t));
    res.raw_rmse = rmse(model.normalization.denormalize_outputs(y), ds.t);
    return res;
  }
  const auto predicted = argmax_rows(y);
  const auto local = ds.labels();
  Index hits = 0;
  for (Index i = 0; i < res.rows; ++i) {
    const auto& name = ds.class_labels.at(static_cast<std::size_t>(local[static_cast<std::size_t>(i)]));
    const auto it = std::find(model.class_labels.begin(), model.class_labels.end(), name);
    if (it == model.class_labels.end()) throw SchemaMismatch("class '" + name + "' unknown to the model");
    hits += (it - model.class_labels.begin()) == predicted[static_cast<std::size_t>(i)];
  }
  res.metric = "accuracy";
  res.value = static_cast<double>(hits) / static_cast<double>(res.rows);
  return res;
}

}  // namespace roselm
