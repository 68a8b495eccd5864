#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "roselm/bench.hpp"
#include "roselm/errors.hpp"

using namespace roselm;

namespace {

ExperimentConfig synth(Algorithm algo, Index trials = 1) {
  ExperimentConfig c;
  c.data.path = "synth";
  c.data.synth.n_train = 600;
  c.data.synth.n_test = 200;
  c.algorithm = algo;
  c.n_tilde = 20;
  c.ensemble_size = 4;
  c.chunk = ChunkPolicy::fixed(25);
  c.trials = trials;
  c.lambda_rmse = 0.01;
  c.pso.iterations = 20;
  c.seed = 3;
  return c;
}

std::string without_timing(const TrialReport& r) {
  auto j = nlohmann::json::parse(emit_report(r, ReportFormat::Json));
  j.erase("timing");
  return j.dump();
}

std::string data(const char* name) { return (std::filesystem::path(ROSELM_DATA_DIR) / name).string(); }

}  // namespace

TEST_CASE("single OS-ELM trial fits the synthetic quadratic") {
  auto c = synth(Algorithm::Oselm);
  c.data.synth = SynthOptions{};
  c.chunk = ChunkPolicy::one_by_one();
  const auto r = run_experiment(c);
  REQUIRE(r.trials.size() == 1);
  CHECK(r.test.mean < 0.05);
  CHECK(r.ensemble_size == 1);
  CHECK(r.curve.size() == 4500 - 30);
  CHECK(r.metric() == "rmse");
}

TEST_CASE("experiments are deterministic apart from timing") {
  const auto c = synth(Algorithm::Roselm, 2);
  CHECK(without_timing(run_experiment(c)) == without_timing(run_experiment(c)));
  auto other = c;
  other.seed = 4;
  CHECK(without_timing(run_experiment(c)) != without_timing(run_experiment(other)));
}

TEST_CASE("aggregates are recomputable from trial records") {
  const auto r = run_experiment(synth(Algorithm::Eoselm, 4));
  double mean = 0.0;
  for (const auto& t : r.trials) mean += t.test_metric;
  mean /= 4.0;
  double ss = 0.0;
  for (const auto& t : r.trials) ss += (t.test_metric - mean) * (t.test_metric - mean);
  CHECK(std::abs(r.test.mean - mean) <= 1e-12);
  CHECK(std::abs(r.test.dev - std::sqrt(ss / 3.0)) <= 1e-12);
  auto copy = r;
  copy.test = {};
  copy.recompute_aggregates();
  CHECK(std::abs(copy.test.mean - r.test.mean) <= 1e-12);
}

TEST_CASE("an infinite threshold reduces ROS-ELM to EOS-ELM") {
  auto ros = synth(Algorithm::Roselm, 2);
  ros.lambda_rmse = std::numeric_limits<double>::infinity();
  const auto a = run_experiment(ros);
  const auto b = run_experiment(synth(Algorithm::Eoselm, 2));
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(a.trials[i].test_metric == b.trials[i].test_metric);
    CHECK(a.trials[i].train_metric == b.trials[i].train_metric);
    CHECK(a.trials[i].curve == b.trials[i].curve);
  }
  CHECK(a.fire_rate == 0.0);
}

TEST_CASE("a single member reduces both ensembles to OS-ELM") {
  const auto os = run_experiment(synth(Algorithm::Oselm, 2));
  for (auto algo : {Algorithm::Eoselm, Algorithm::Roselm}) {
    auto c = synth(algo, 2);
    c.ensemble_size = 1;
    c.lambda_rmse = 0.0;
    const auto r = run_experiment(c);
    for (std::size_t i = 0; i < 2; ++i) {
      CHECK(r.trials[i].test_metric == os.trials[i].test_metric);
      CHECK(r.trials[i].train_metric == os.trials[i].train_metric);
      CHECK(r.trials[i].curve == os.trials[i].curve);
      CHECK(r.trials[i].member_curve == os.trials[i].member_curve);
    }
  }
}

TEST_CASE("threshold sweep fire rates") {
  const std::vector<double> thresholds{0.0, 0.02, 0.05, 0.2, std::numeric_limits<double>::infinity()};
  const auto reports = sweep_lambda_rmse(synth(Algorithm::Roselm, 2), thresholds);
  REQUIRE(reports.size() == thresholds.size());
  CHECK(reports.front().fire_rate == 1.0);
  CHECK(reports.back().fire_rate == 0.0);
  for (std::size_t i = 1; i < reports.size(); ++i) CHECK(reports[i].fire_rate <= reports[i - 1].fire_rate);
  const auto eos = run_experiment(synth(Algorithm::Eoselm, 2));
  CHECK(reports.back().test.mean == eos.test.mean);
  CHECK(reports.back().test.dev == eos.test.dev);
  CHECK_THROWS_AS(sweep_lambda_rmse(synth(Algorithm::Roselm), std::vector<double>{-1.0}), InvalidArgument);
}

TEST_CASE("ensemble-size recommendation rule") {
  TrialReport base;
  base.test = {0.10, 0.02};
  auto make = [](Index n, double mean, double dev) {
    TrialReport r;
    r.ensemble_size = n;
    r.test = {mean, dev};
    return r;
  };
  const std::vector<TrialReport> mixed{make(5, 0.09, 0.010), make(10, 0.11, 0.001), make(15, 0.10, 0.008),
                                       make(20, 0.095, 0.008)};
  CHECK(recommend_ensemble_size(base, mixed) == std::pair<Index, bool>{15, false});
  const std::vector<TrialReport> worse{make(5, 0.2, 0.001), make(10, 0.3, 0.001)};
  CHECK(recommend_ensemble_size(base, worse) == std::pair<Index, bool>{1, true});

  TrialReport cls;
  cls.task = TaskKind::Classification;
  cls.test = {0.90, 0.07};
  const std::vector<TrialReport> acc{make(5, 0.91, 0.03), make(10, 0.89, 0.01)};
  CHECK(recommend_ensemble_size(cls, acc) == std::pair<Index, bool>{5, false});

  const std::vector<Index> one{3};
  const auto sweep = sweep_ensemble_size(synth(Algorithm::Eoselm, 3), one);
  CHECK(sweep.baseline.ensemble_size == 1);
  REQUIRE(sweep.reports.size() == 1);
  CHECK(sweep.recommended == (sweep.warning ? 1 : 3));
  CHECK_FALSE(sweep.warning);
}

TEST_CASE("report formats") {
  auto r = run_experiment(synth(Algorithm::Roselm, 3));
  const auto back = parse_report_json(emit_report(r, ReportFormat::Json));
  CHECK(std::abs(back.test.mean - r.test.mean) <= 1e-9);
  CHECK(std::abs(back.test.dev - r.test.dev) <= 1e-9);
  CHECK(std::abs(back.train.mean - r.train.mean) <= 1e-9);
  CHECK(back.trials.size() == 3);
  CHECK(back.curve.size() == r.curve.size());
  CHECK(back.algorithm == Algorithm::Roselm);
  auto again = back;
  again.recompute_aggregates();
  CHECK(std::abs(again.test.dev - r.test.dev) <= 1e-12);

  const auto csv = emit_report(r, ReportFormat::Csv);
  CHECK(csv.rfind("step,samples,rmse,member_rmse\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == static_cast<long>(r.curve.size()) + 1);
  r.curve.clear();
  CHECK(emit_report(r, ReportFormat::Csv) == "step,samples,rmse,member_rmse\n");

  const std::vector<TrialReport> three{run_experiment(synth(Algorithm::Oselm)), run_experiment(synth(Algorithm::Eoselm)),
                                       run_experiment(synth(Algorithm::Roselm))};
  const auto table = emit_reports(three, ReportFormat::Table);
  std::istringstream lines(table);
  std::string line;
  std::vector<std::string> rows;
  while (std::getline(lines, line)) rows.push_back(line);
  REQUIRE(rows.size() == 5);  // header, rule, one row per algorithm
  CHECK(rows[0].find("Testing Dev") != std::string::npos);
  CHECK(rows[2].find("OS-ELM") != std::string::npos);
  CHECK(rows[3].find("EOS-ELM") != std::string::npos);
  CHECK(rows[4].find("ROS-ELM") != std::string::npos);
  CHECK(nlohmann::json::parse(emit_reports(three, ReportFormat::Json)).size() == 3);
  CHECK_THROWS_AS(parse_report_json("{}"), ParseError);
  CHECK(parse_report_format("CSV") == ReportFormat::Csv);
}

TEST_CASE("configuration errors") {
  auto c = synth(Algorithm::Roselm);
  c.trials = 0;
  CHECK_THROWS_AS(run_experiment(c), InvalidArgument);
  c = synth(Algorithm::Roselm);
  c.lambda_rmse = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(run_experiment(c), InvalidArgument);
  c = synth(Algorithm::Oselm);
  c.init_size = 5;
  CHECK_THROWS_AS(run_experiment(c), InsufficientInitData);
  c = synth(Algorithm::Oselm);
  c.data.path = "/nonexistent.csv";
  CHECK_THROWS_AS(run_experiment(c), ParseError);
  CHECK(parse_algorithm("ROS-ELM") == Algorithm::Roselm);
  CHECK(parse_algorithm("eoselm") == Algorithm::Eoselm);
  CHECK_THROWS_AS(parse_algorithm("elm"), InvalidArgument);
}

TEST_CASE("presets fill node count, ensemble size and split") {
  REQUIRE(find_preset("auto-mpg"));
  CHECK(find_preset("new-thyroid-2class")->nodes_rbf == 20);
  CHECK_FALSE(find_preset("iris"));
  ExperimentConfig c;
  c.data.path = data("auto-mpg.csv");
  c.algorithm = Algorithm::Eoselm;
  c.chunk = ChunkPolicy::fixed(20);
  c.trials = 2;
  const auto r = run_experiment(c);
  CHECK(r.n_tilde == 25);
  CHECK(r.ensemble_size == 20);
  CHECK(r.dataset == "auto-mpg");
  CHECK(r.curve.back().samples_seen == 320);
}

TEST_CASE("OS-ELM on Auto-MPG lands near the published testing RMSE") {
  ExperimentConfig c;
  c.data.path = data("auto-mpg.csv");
  c.algorithm = Algorithm::Oselm;
  c.n_tilde = 25;
  c.trials = 50;
  const auto r = run_experiment(c);
  CHECK(std::abs(r.test.mean - 0.0745) <= 0.02);
}

TEST_CASE("classification experiment reports accuracy") {
  ExperimentConfig c;
  c.data.path = data("new-thyroid-2class.csv");
  c.data.task = TaskKind::Classification;
  c.algorithm = Algorithm::Roselm;
  c.activation = ActivationKind::Rbf;
  c.ensemble_size = 5;
  c.lambda_rmse = 0.3;
  c.pso.iterations = 20;
  c.chunk = ChunkPolicy::fixed(10);
  c.trials = 3;
  const auto r = run_experiment(c);
  CHECK(r.metric() == "accuracy");
  CHECK(r.test.mean > 0.8);
  CHECK(r.test.mean <= 1.0);
  CHECK(emit_report(r, ReportFormat::Table).find("%") != std::string::npos);
}

TEST_CASE("trained models survive a save and load") {
  ExperimentConfig c;
  c.data.path = data("auto-mpg.csv");
  c.algorithm = Algorithm::Roselm;
  c.ensemble_size = 5;
  c.lambda_rmse = 0.05;
  c.pso.iterations = 20;
  c.chunk = ChunkPolicy::fixed(20);
  TrialRecord rec;
  const auto m = train_model(c, &rec);
  CHECK(m.members.size() == 5);
  CHECK(rec.steps > 0);
  const auto back = TrainedModel::from_json(m.to_json());
  const auto ds = load_dataset(c.data);
  CHECK(back.predict(ds.x) == m.predict(ds.x));
  const auto e = evaluate_model(back, ds);
  CHECK(e.metric == "rmse");
  CHECK(e.rows == 392);
  CHECK(e.value == doctest::Approx(rec.train_metric).epsilon(1e-12));
  CHECK(e.raw_rmse > e.value);
  CHECK_THROWS_AS(TrainedModel::from_json("{\"format\":\"other\"}"), ParseError);

  ExperimentConfig k;
  k.data.path = data("new-thyroid-2class.csv");
  k.data.task = TaskKind::Classification;
  k.algorithm = Algorithm::Oselm;
  const auto cm = train_model(k);
  const auto cds = load_dataset(k.data);
  const auto ce = evaluate_model(TrainedModel::from_json(cm.to_json()), cds);
  CHECK(ce.metric == "accuracy");
  CHECK(ce.value > 0.85);
  CHECK_THROWS_AS(evaluate_model(cm, ds), SchemaMismatch);
}
