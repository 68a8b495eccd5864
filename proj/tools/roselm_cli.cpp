// roselm: command-line driver for training, evaluation and the benchmark sweeps.
//
//   roselm bench --dataset data/auto-mpg.csv --algo all --trials 50 --lambda-rmse 0.1
//   roselm sweep-ensemble --dataset data/new-thyroid.csv --task cls --activation rbf --lambda-rmse 0.3
//   roselm train --dataset data/auto-mpg.csv --algo roselm --lambda-rmse 0.1 --out model.json
//   roselm eval --model model.json --dataset data/auto-mpg.csv
//
// Every flag can also be set in a key = value file passed with --config;
// flags on the command line win.

#include <CLI11.hpp>
#include <cmath>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "roselm/bench.hpp"
#include "roselm/errors.hpp"

namespace {

using namespace roselm;

struct Options {
  std::string dataset;
  std::string schema;
  std::string task;
  std::string algo = "roselm";
  std::string activation = "sigmoid";
  Index nodes = 0;
  Index ensemble = 0;
  std::string chunk = "1";
  Index trials = 1;
  std::string lambda_rmse;
  std::string lambda_w;
  Index pso_swarm = 30;
  Index pso_iters = 200;
  std::uint64_t seed = 0;
  std::string out;
  std::string format = "table";
  Index n_train = 0;
  Index n_test = 1000;
  double noise = 0.0;
  std::string x_range = "-3,3";
  std::string sizes = "5,10,15,20,25,30";
  std::string thresholds;
  std::string model;
};

double parse_real(const std::string& text, const char* what) {
  if (text == "inf" || text == "+inf" || text == "infinity") return std::numeric_limits<double>::infinity();
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) throw InvalidArgument(std::string("bad value for ") + what + ": '" + text + "'");
  return v;
}

template <class T, class F>
std::vector<T> parse_list(const std::string& text, F&& one) {
  std::vector<T> out;
  std::stringstream in(text);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    if (!tok.empty()) out.push_back(one(tok));
  }
  return out;
}

TaskKind parse_task(const std::string& text) {
  if (text == "reg" || text == "regression") return TaskKind::Regression;
  if (text == "cls" || text == "classification") return TaskKind::Classification;
  throw InvalidArgument("--task must be reg or cls");
}

ExperimentConfig experiment(const Options& o, Algorithm algo) {
  if (o.dataset.empty()) throw InvalidArgument("--dataset is required (a file path or 'synth')");
  ExperimentConfig c;
  c.data.path = o.dataset;
  c.data.schema = o.schema;
  if (!o.task.empty()) {
    c.data.task = parse_task(o.task);
  } else if (auto p = find_preset(std::filesystem::path(o.dataset).stem().string())) {
    c.data.task = p->task;
  }
  c.data.n_train = o.n_train;
  if (c.data.synthetic()) {
    if (o.n_train > 0) c.data.synth.n_train = o.n_train;
    c.data.synth.n_test = o.n_test;
    c.data.synth.noise_sd = o.noise;
  }
  c.algorithm = algo;
  c.activation = parse_activation(o.activation);
  c.n_tilde = o.nodes;
  c.ensemble_size = o.ensemble;
  c.chunk = ChunkPolicy::parse(o.chunk);
  c.trials = o.trials;
  if (!o.lambda_rmse.empty()) c.lambda_rmse = parse_real(o.lambda_rmse, "--lambda-rmse");
  if (!o.lambda_w.empty()) c.lambda_w = parse_real(o.lambda_w, "--lambda-w");
  c.pso.swarm_size = o.pso_swarm;
  c.pso.iterations = o.pso_iters;
  c.seed = o.seed;
  return c;
}

std::vector<Algorithm> algorithms(const std::string& text) {
  if (text == "all") return {Algorithm::Oselm, Algorithm::Eoselm, Algorithm::Roselm};
  return parse_list<Algorithm>(text, [](const std::string& s) { return parse_algorithm(s); });
}

void emit(const Options& o, const std::string& text) {
  if (o.out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(o.out);
  if (!f) throw InvalidArgument("cannot write " + o.out);
  f << text;
}

std::string read_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ParseError("cannot open " + path, 0, 0);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

int run_bench(const Options& o) {
  std::vector<TrialReport> reports;
  for (auto a : algorithms(o.algo)) reports.push_back(run_experiment(experiment(o, a)));
  emit(o, emit_reports(reports, parse_report_format(o.format)));
  return 0;
}

int run_sweep_ensemble(const Options& o) {
  const auto sizes = parse_list<Index>(o.sizes, [](const std::string& s) {
    return static_cast<Index>(parse_real(s, "--sizes"));
  });
  const auto sweep = sweep_ensemble_size(experiment(o, parse_algorithm(o.algo)), sizes);
  emit(o, emit_sweep(sweep, parse_report_format(o.format)));
  if (sweep.warning) std::cerr << "warning: no ensemble size matched the single-network metric; recommending 1\n";
  return 0;
}

int run_sweep_threshold(const Options& o) {
  if (o.thresholds.empty()) throw InvalidArgument("--thresholds is required, e.g. 0,0.05,0.1,inf");
  const auto values = parse_list<double>(o.thresholds, [](const std::string& s) { return parse_real(s, "--thresholds"); });
  auto base = experiment(o, Algorithm::Roselm);
  emit(o, emit_threshold_sweep(sweep_lambda_rmse(base, values), parse_report_format(o.format)));
  return 0;
}

int run_train(const Options& o) {
  if (o.out.empty()) throw InvalidArgument("--out is required for the model file");
  TrialRecord rec;
  const auto model = train_model(experiment(o, parse_algorithm(o.algo)), &rec);
  std::ofstream f(o.out);
  if (!f) throw InvalidArgument("cannot write " + o.out);
  f << model.to_json();
  std::cerr << to_string(model.algorithm) << ": " << model.members.size() << " member(s), " << rec.steps
            << " chunks, training " << (model.task == TaskKind::Regression ? "rmse " : "accuracy ")
            << rec.train_metric << ", selection rate " << rec.fire_rate << ", " << rec.train_seconds << " s\n";
  return 0;
}

int run_eval(const Options& o) {
  if (o.model.empty()) throw InvalidArgument("--model is required");
  if (o.dataset.empty()) throw InvalidArgument("--dataset is required");
  const auto model = TrainedModel::from_json(read_file(o.model));
  DatasetSpec spec;
  spec.path = o.dataset;
  spec.schema = o.schema;
  spec.task = model.task;
  const auto res = evaluate_model(model, load_dataset(spec));
  std::ostringstream text;
  switch (parse_report_format(o.format)) {
    case ReportFormat::Json: {
      nlohmann::json j{{"metric", res.metric}, {"value", res.value}, {"rows", res.rows}};
      if (res.metric == "rmse") j["raw_rmse"] = res.raw_rmse;
      text << j.dump(2) << '\n';
      break;
    }
    case ReportFormat::Csv:
      text << "metric,value,raw_rmse,rows\n" << res.metric << ',' << res.value << ',' << res.raw_rmse << ',' << res.rows << '\n';
      break;
    case ReportFormat::Table:
      text << res.metric << ": " << res.value;
      if (res.metric == "rmse") text << " (normalized), " << res.raw_rmse << " (target units)";
      text << " over " << res.rows << " rows\n";
      break;
  }
  const Options to_stdout = [&] {
    auto c = o;
    c.out.clear();
    return c;
  }();
  emit(o.out.empty() ? to_stdout : o, text.str());
  return 0;
}

int run_synth(const Options& o) {
  if (o.out.empty()) throw InvalidArgument("--out PREFIX is required; writes PREFIX-train.csv and PREFIX-test.csv");
  SynthOptions s;
  if (o.n_train > 0) s.n_train = o.n_train;
  s.n_test = o.n_test;
  s.noise_sd = o.noise;
  s.seed = o.seed;
  const auto range = parse_list<double>(o.x_range, [](const std::string& v) { return parse_real(v, "--x-range"); });
  if (range.size() != 2) throw InvalidArgument("--x-range takes LO,HI");
  s.x_lo = range[0];
  s.x_hi = range[1];
  const auto [train, test] = synth_quadratic(s);
  write_delimited(train, o.out + "-train.csv");
  write_delimited(test, o.out + "-test.csv");
  std::cerr << "wrote " << o.out << "-train.csv (" << train.size() << " rows) and " << o.out << "-test.csv ("
            << test.size() << " rows)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online sequential ELM ensembles with PSO-based selection"};
  app.set_config("--config", "", "key = value file supplying any of the flags below");
  app.require_subcommand(1, 1);

  Options o;
  app.add_option("--dataset", o.dataset, "Delimited data file, or 'synth' for the quadratic stream");
  app.add_option("--schema", o.schema, "Column roles, e.g. 'target=last;ignore=0;header'");
  app.add_option("--task", o.task, "reg or cls (default: preset for known files, else reg)");
  app.add_option("--algo", o.algo, "oselm, eoselm, roselm; bench also takes a list or 'all'");
  app.add_option("--activation", o.activation, "sigmoid or rbf");
  app.add_option("--nodes", o.nodes, "Hidden nodes per network (default: preset)");
  app.add_option("--ensemble", o.ensemble, "Networks in the ensemble (default: preset)");
  app.add_option("--chunk", o.chunk, "Chunk policy: 1, a fixed size, or a list like 3,2");
  app.add_option("--trials", o.trials, "Independent trials");
  app.add_option("--lambda-rmse", o.lambda_rmse, "Chunk RMSE above which selection runs (inf disables)");
  app.add_option("--lambda-w", o.lambda_w, "Weight threshold for selection (default 1/N)");
  app.add_option("--pso-swarm", o.pso_swarm, "Particles");
  app.add_option("--pso-iters", o.pso_iters, "PSO iterations");
  app.add_option("--seed", o.seed, "Base seed");
  app.add_option("--out", o.out, "Output path (stdout if omitted)");
  app.add_option("--format", o.format, "table, csv or json")->check(CLI::IsMember({"table", "csv", "json"}));
  app.add_option("--n-train", o.n_train, "Training rows per trial (default: preset or 75%)");
  app.add_option("--n-test", o.n_test, "Synthetic test rows");
  app.add_option("--noise", o.noise, "Synthetic noise standard deviation");
  app.add_option("--x-range", o.x_range, "Synthetic input range LO,HI");
  app.add_option("--sizes", o.sizes, "Ensemble sizes for sweep-ensemble");
  app.add_option("--thresholds", o.thresholds, "lambda_rmse values for sweep-threshold");
  app.add_option("--model", o.model, "Model file for eval");

  auto* train = app.add_subcommand("train", "Stream a whole dataset and save the model")->fallthrough();
  auto* eval = app.add_subcommand("eval", "Score a saved model on a dataset")->fallthrough();
  auto* bench = app.add_subcommand("bench", "Multi-trial comparison table or learning curves")->fallthrough();
  auto* sweep_e = app.add_subcommand("sweep-ensemble", "Pick the ensemble size")->fallthrough();
  auto* sweep_t = app.add_subcommand("sweep-threshold", "Accuracy and selection rate per lambda_rmse")->fallthrough();
  auto* synth = app.add_subcommand("synth", "Write the synthetic quadratic train/test files")->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (train->parsed()) return run_train(o);
    if (eval->parsed()) return run_eval(o);
    if (bench->parsed()) return run_bench(o);
    if (sweep_e->parsed()) return run_sweep_ensemble(o);
    if (sweep_t->parsed()) return run_sweep_threshold(o);
    if (synth->parsed()) return run_synth(o);
  } catch (const roselm::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
