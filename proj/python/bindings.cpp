#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cmath>
#include <limits>

#include "roselm/bench.hpp"
#include "roselm/ensemble.hpp"
#include "roselm/errors.hpp"

namespace py = pybind11;
using namespace roselm;

namespace {

TaskKind parse_task(const std::string& text) {
  if (text == "reg" || text == "regression") return TaskKind::Regression;
  if (text == "cls" || text == "classification") return TaskKind::Classification;
  throw InvalidArgument("task must be 'reg' or 'cls'");
}

py::object json_loads(const std::string& text) { return py::module_::import("json").attr("loads")(text); }

PsoConfig pso_config(Index swarm, Index iters, std::uint64_t seed) {
  PsoConfig c;
  c.swarm_size = swarm;
  c.iterations = iters;
  c.seed = seed;
  return c;
}

py::dict diagnostics_dict(const StepDiagnostics& d) {
  py::dict out;
  out["rmse"] = d.rmse;
  out["psosen_fired"] = d.psosen_fired;
  out["fallback"] = d.fallback;
  out["selected"] = d.selected;
  if (d.weights) {
    out["weights"] = *d.weights;
  } else {
    out["weights"] = py::none();
  }
  return out;
}

// Online ensemble: initialize on a seed chunk, then stream labelled chunks.
class OnlineEnsemble {
 public:
  explicit OnlineEnsemble(RoselmConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

  void init(const Matrix& x0, const Matrix& t0) { state_ = roselm_init(cfg_, x0, t0); }

  py::tuple step(const Matrix& x, const Matrix& t) {
    StepDiagnostics d;
    Matrix pred = roselm_step_in_place(live(), x, t, &d);
    return py::make_tuple(std::move(pred), diagnostics_dict(d));
  }

  Matrix predict(const Matrix& x) const { return roselm_predict(live(), x); }
  double chunk_rmse_of(const Matrix& x, const Matrix& t) const { return chunk_rmse(live(), x, t); }
  std::vector<Index> selected() const { return live().selected; }
  Index steps() const { return live().steps; }
  Index buffer_size() const { return live().buffer.size(); }
  bool initialized() const { return state_.has_value(); }

 private:
  EnsembleState& live() {
    if (!state_) throw InvalidArgument("call init() before streaming");
    return *state_;
  }
  const EnsembleState& live() const {
    if (!state_) throw InvalidArgument("call init() before streaming");
    return *state_;
  }

  RoselmConfig cfg_;
  std::optional<EnsembleState> state_;
};

ExperimentConfig experiment(const std::string& dataset, const std::string& algo, const std::string& task,
                            const std::string& schema, const std::string& activation, Index nodes, Index ensemble,
                            const std::string& chunk, Index trials, double lambda_rmse, std::optional<double> lambda_w,
                            Index pso_swarm, Index pso_iters, std::uint64_t seed, Index n_train) {
  ExperimentConfig c;
  c.data.path = dataset;
  c.data.schema = schema;
  if (!task.empty()) {
    c.data.task = parse_task(task);
  } else if (auto p = find_preset(std::filesystem::path(dataset).stem().string())) {
    c.data.task = p->task;
  }
  c.data.n_train = n_train;
  if (c.data.synthetic() && n_train > 0) c.data.synth.n_train = n_train;
  c.algorithm = parse_algorithm(algo);
  c.activation = parse_activation(activation);
  c.n_tilde = nodes;
  c.ensemble_size = ensemble;
  c.chunk = ChunkPolicy::parse(chunk);
  c.trials = trials;
  c.lambda_rmse = lambda_rmse;
  c.lambda_w = lambda_w;
  c.pso.swarm_size = pso_swarm;
  c.pso.iterations = pso_iters;
  c.seed = seed;
  return c;
}

}  // namespace

PYBIND11_MODULE(roselm, m) {
  m.doc() = "Online sequential ELM ensembles with PSO-based selective ensembling";

  auto& base = py::register_exception<Error>(m, "RoselmError", PyExc_RuntimeError);
  const py::tuple value_error = py::make_tuple(base, py::handle(PyExc_ValueError));
  py::register_exception<InvalidArgument>(m, "InvalidArgument", value_error);
  py::register_exception<DimensionMismatch>(m, "DimensionMismatch", value_error);
  py::register_exception<InsufficientInitData>(m, "InsufficientInitData", value_error);
  py::register_exception<SchemaMismatch>(m, "SchemaMismatch", value_error);
  py::register_exception<ParseError>(m, "ParseError", value_error);

  m.def("hidden_output",
        [](const Matrix& x, Index n_tilde, const std::string& activation, std::uint64_t seed) {
          return hidden_output(init_hidden(x.cols(), n_tilde, parse_activation(activation), seed), x);
        },
        py::arg("x"), py::arg("n_tilde"), py::arg("activation") = "sigmoid", py::arg("seed") = 0);

  m.def("elm_fit_predict",
        [](const Matrix& x, const Matrix& t, const Matrix& x_test, Index n_tilde, const std::string& activation,
           std::uint64_t seed) {
          const auto model = train_batch(init_hidden(x.cols(), n_tilde, parse_activation(activation), seed), x, t);
          return predict(model, x_test);
        },
        py::arg("x"), py::arg("t"), py::arg("x_test"), py::arg("n_tilde"), py::arg("activation") = "sigmoid",
        py::arg("seed") = 0, "Batch ELM trained on (x, t), evaluated on x_test.");

  py::class_<OselmState>(m, "OsElm", "A single online sequential ELM learner.")
      .def(py::init([](const Matrix& x0, const Matrix& t0, Index n_tilde, const std::string& activation,
                       std::uint64_t seed) {
             return oselm_init(init_hidden(x0.cols(), n_tilde, parse_activation(activation), seed), x0, t0);
           }),
           py::arg("x0"), py::arg("t0"), py::arg("n_tilde"), py::arg("activation") = "sigmoid", py::arg("seed") = 0)
      .def("learn", &OselmState::learn, py::arg("x"), py::arg("t"))
      .def("predict", &OselmState::predict, py::arg("x"))
      .def_readonly("beta", &OselmState::beta)
      .def_readonly("p", &OselmState::p)
      .def_readonly("updates", &OselmState::updates);

  py::class_<OnlineEnsemble>(m, "OnlineEnsemble",
                             "N online learners whose selected subset is re-chosen by PSO when the chunk "
                             "RMSE exceeds lambda_rmse.")
      .def(py::init([](Index n_learners, Index n_tilde, double lambda_rmse, const std::string& activation,
                       const std::string& task, std::optional<double> lambda_w, Index pso_swarm, Index pso_iters,
                       Index buffer_capacity, std::uint64_t seed) {
             RoselmConfig c;
             c.n_learners = n_learners;
             c.n_tilde = n_tilde;
             c.lambda_rmse = lambda_rmse;
             c.activation = parse_activation(activation);
             c.task = parse_task(task);
             c.lambda_w = lambda_w;
             c.pso.swarm_size = pso_swarm;
             c.pso.iterations = pso_iters;
             c.validation_buffer_capacity = buffer_capacity;
             c.seed = seed;
             return OnlineEnsemble(c);
           }),
           py::arg("n_learners"), py::arg("n_tilde"), py::arg("lambda_rmse"), py::arg("activation") = "sigmoid",
           py::arg("task") = "reg", py::arg("lambda_w") = py::none(), py::arg("pso_swarm") = 30,
           py::arg("pso_iters") = 200, py::arg("buffer_capacity") = 256, py::arg("seed") = 0)
      .def("init", &OnlineEnsemble::init, py::arg("x0"), py::arg("t0"))
      .def("step", &OnlineEnsemble::step, py::arg("x"), py::arg("t"),
           "Predicts the chunk, re-selects if needed, then learns it. Returns (prediction, diagnostics).")
      .def("predict", &OnlineEnsemble::predict, py::arg("x"))
      .def("chunk_rmse", &OnlineEnsemble::chunk_rmse_of, py::arg("x"), py::arg("t"))
      .def_property_readonly("selected", &OnlineEnsemble::selected)
      .def_property_readonly("steps", &OnlineEnsemble::steps)
      .def_property_readonly("buffer_size", &OnlineEnsemble::buffer_size)
      .def_property_readonly("initialized", &OnlineEnsemble::initialized);

  m.def("select_ensemble",
        [](const std::vector<Matrix>& outputs, const Matrix& targets, const std::string& task,
           std::optional<double> lambda_w, Index pso_swarm, Index pso_iters, std::uint64_t seed) {
          const double lw = lambda_w.value_or(outputs.empty() ? 0.0 : 1.0 / static_cast<double>(outputs.size()));
          const auto r = select_ensemble(outputs, targets, parse_task(task), lw, pso_config(pso_swarm, pso_iters, seed));
          py::dict out;
          out["weights"] = r.best_weights.values();
          out["selected"] = r.selected;
          out["fitness_trace"] = r.fitness_trace;
          out["degenerate"] = r.degenerate;
          return out;
        },
        py::arg("outputs"), py::arg("targets"), py::arg("task") = "reg", py::arg("lambda_w") = py::none(),
        py::arg("pso_swarm") = 30, py::arg("pso_iters") = 200, py::arg("seed") = 0,
        "PSO-evolved weights over learner outputs on a validation set, plus the thresholded selection.");

  m.def("synth_quadratic",
        [](Index n_train, Index n_test, double x_lo, double x_hi, double noise_sd, std::uint64_t seed) {
          SynthOptions s{n_train, n_test, x_lo, x_hi, noise_sd, seed};
          auto [train, test] = synth_quadratic(s);
          return py::make_tuple(train.x, train.t, test.x, test.t);
        },
        py::arg("n_train") = 4500, py::arg("n_test") = 1000, py::arg("x_lo") = -3.0, py::arg("x_hi") = 3.0,
        py::arg("noise_sd") = 0.0, py::arg("seed") = 0, "Returns (x_train, y_train, x_test, y_test).");

  m.def("run_experiment",
        [](const std::string& dataset, const std::string& algo, const std::string& task, const std::string& schema,
           const std::string& activation, Index nodes, Index ensemble, const std::string& chunk, Index trials,
           double lambda_rmse, std::optional<double> lambda_w, Index pso_swarm, Index pso_iters, std::uint64_t seed,
           Index n_train) {
          const auto cfg = experiment(dataset, algo, task, schema, activation, nodes, ensemble, chunk, trials,
                                      lambda_rmse, lambda_w, pso_swarm, pso_iters, seed, n_train);
          const auto report = run_experiment(cfg);
          return json_loads(emit_report(report, ReportFormat::Json));
        },
        py::arg("dataset"), py::arg("algo") = "roselm", py::arg("task") = "", py::arg("schema") = "",
        py::arg("activation") = "sigmoid", py::arg("nodes") = 0, py::arg("ensemble") = 0, py::arg("chunk") = "1",
        py::arg("trials") = 1, py::arg("lambda_rmse") = std::numeric_limits<double>::quiet_NaN(),
        py::arg("lambda_w") = py::none(), py::arg("pso_swarm") = 30, py::arg("pso_iters") = 200,
        py::arg("seed") = 0, py::arg("n_train") = 0,
        "Multi-trial benchmark on a data file (or 'synth'); returns the report as a dict.");
}
