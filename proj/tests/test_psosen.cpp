#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "oracles.hpp"
#include "roselm/errors.hpp"
#include "roselm/psosen.hpp"

using namespace roselm;

namespace {

Matrix diag2(double a, double b) {
  Matrix c = Matrix::Zero(2, 2);
  c(0, 0) = a;
  c(1, 1) = b;
  return c;
}

}  // namespace

TEST_CASE("WeightVector invariants") {
  Vector ok(3);
  ok << 0.2, 0.3, 0.5;
  CHECK(WeightVector(ok).size() == 3);
  Vector neg(2);
  neg << -0.1, 1.1;
  CHECK_THROWS_AS(WeightVector{neg}, InvalidArgument);
  Vector off(2);
  off << 0.5, 0.6;
  CHECK_THROWS_AS(WeightVector{off}, InvalidArgument);

  Vector raw(3);
  raw << -2.0, 3.0, 0.5;
  const auto p = WeightVector::project(raw);
  CHECK(p[0] == 0.0);
  CHECK(p[1] == doctest::Approx(2.0 / 3.0));
  CHECK(p[2] == doctest::Approx(1.0 / 3.0));
  CHECK(WeightVector::project(Vector::Constant(4, -1.0))[2] == 0.25);
}

TEST_CASE("bootstrap of a single sample repeats it") {
  Dataset s;
  s.x = Matrix::Constant(1, 2, 3.0);
  s.t = Matrix::Constant(1, 1, 4.0);
  const auto bags = bootstrap_samples(s, 1, 0);
  REQUIRE(bags.size() == 1);
  CHECK(bags[0].size() == 1);
  CHECK(bags[0].x == s.x);
}

TEST_CASE("bootstrap keeps about 1 - 1/e of the originals") {
  double total = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto bag = bootstrap_indices(1000, 1, seed).front();
    total += static_cast<double>(std::set<Index>(bag.begin(), bag.end()).size()) / 1000.0;
  }
  CHECK(total / 100.0 == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(0.03 / 0.632));
  CHECK(bootstrap_indices(50, 3, 9) == bootstrap_indices(50, 3, 9));
  CHECK(bootstrap_indices(50, 3, 9) != bootstrap_indices(50, 3, 10));
}

TEST_CASE("correlation_matrix small cases") {
  Matrix t = Matrix::Zero(3, 1);
  Matrix p0(3, 1), p1(3, 1);
  p0 << 1, 0, -1;
  p1 << 1, 1, 1;
  const std::vector<Matrix> preds{p0, p1};
  const auto c = correlation_matrix(preds, t).values();
  CHECK(c(0, 0) == doctest::Approx(2.0 / 3.0));
  CHECK(c(0, 1) == doctest::Approx(0.0));
  CHECK(c(1, 0) == doctest::Approx(0.0));
  CHECK(c(1, 1) == doctest::Approx(1.0));

  std::mt19937_64 rng(1);
  const Matrix target = oracle::uniform(10, 2, rng);
  const Matrix same = oracle::uniform(10, 2, rng);
  const std::vector<Matrix> twins{same, same, target};
  const auto c2 = correlation_matrix(twins, target).values();
  CHECK(c2(0, 0) == doctest::Approx(c2(0, 1)));
  CHECK(c2(1, 1) == doctest::Approx(c2(0, 0)));
  CHECK(c2.row(2).cwiseAbs().maxCoeff() == 0.0);
  CHECK(c2.col(2).cwiseAbs().maxCoeff() == 0.0);

  const std::vector<Matrix> bad{Matrix::Zero(3, 1), Matrix::Zero(2, 1)};
  CHECK_THROWS_AS(correlation_matrix(bad, Matrix::Zero(3, 1)), DimensionMismatch);
}

TEST_CASE("correlation_matrix diagonal is each learner's squared error") {
  std::mt19937_64 rng(2);
  const Matrix t = oracle::uniform(20, 3, rng);
  std::vector<Matrix> preds;
  for (int i = 0; i < 4; ++i) preds.push_back(oracle::uniform(20, 3, rng));
  const auto c = correlation_matrix(preds, t).values();
  for (int i = 0; i < 4; ++i) CHECK(std::abs(c(i, i) - std::pow(oracle::rmse(preds[static_cast<std::size_t>(i)], t), 2)) < 1e-10);
  CHECK(c == c.transpose());
}

TEST_CASE("ensemble_error reductions and the weighted-predictor identity") {
  const CorrelationMatrix c(diag2(2.0, 5.0));
  CHECK(ensemble_error(WeightVector::one_hot(2, 1), c) == 5.0);
  CHECK(ensemble_error(WeightVector::uniform(4), CorrelationMatrix(Matrix::Identity(4, 4))) == doctest::Approx(0.25));

  std::mt19937_64 rng(3);
  const Matrix t = oracle::uniform(25, 2, rng);
  std::vector<Matrix> preds;
  for (int i = 0; i < 5; ++i) preds.push_back(oracle::uniform(25, 2, rng));
  const auto cm = correlation_matrix(preds, t);
  for (int rep = 0; rep < 20; ++rep) {
    const Vector w = oracle::random_simplex(5, rng);
    CHECK(std::abs(ensemble_error(WeightVector(w), cm) - oracle::weighted_mse(preds, t, w)) < 1e-10);
  }
}

TEST_CASE("analytic_weights closed-form cases") {
  const auto a = analytic_weights(CorrelationMatrix(Matrix::Identity(2, 2)));
  CHECK(a[0] == doctest::Approx(0.5));
  CHECK(a[1] == doctest::Approx(0.5));
  const auto b = analytic_weights(CorrelationMatrix(diag2(1.0, 3.0)));
  CHECK(b[0] == doctest::Approx(0.75));
  CHECK(b[1] == doctest::Approx(0.25));
  const Vector grid = oracle::grid_min_2(diag2(1.0, 3.0));
  CHECK(std::abs(grid(0) - b[0]) <= 1e-5);
}

TEST_CASE("analytic_weights matches grid search on random 2x2 matrices") {
  std::mt19937_64 rng(4);
  for (int rep = 0; rep < 30; ++rep) {
    const Matrix a = oracle::uniform(4, 2, rng);
    const Matrix c = a.transpose() * a + 0.05 * Matrix::Identity(2, 2);
    const auto w = analytic_weights(CorrelationMatrix(c));
    const Vector g = oracle::grid_min_2(c);
    CHECK(std::abs(w[0] - g(0)) <= 2e-5);
  }
}

TEST_CASE("analytic_weights stays on the simplex when the unconstrained optimum does not") {
  // Strongly correlated learners: the unconstrained optimum puts negative weight on one.
  Matrix c(2, 2);
  c << 1.0, 1.2, 1.2, 2.0;
  const auto w = analytic_weights(CorrelationMatrix(c));
  const Vector g = oracle::grid_min_2(c);
  CHECK(w[1] == 0.0);
  CHECK(std::abs(w[0] - g(0)) <= 1e-5);
}

TEST_CASE("analytic_weights rejects near-singular matrices") {
  Matrix c = Matrix::Constant(2, 2, 1.0);
  c(1, 1) += 1e-14;
  CHECK_THROWS_AS(analytic_weights(CorrelationMatrix(c)), IllConditioned);
}

TEST_CASE("pso_optimize with one learner") {
  PsoConfig cfg;
  const auto r = pso_optimize([](const WeightVector&) { return 2.0; }, 1, cfg);
  CHECK(r.best_weights[0] == 1.0);
  CHECK(r.fitness_trace.size() == 200);
}

TEST_CASE("pso_optimize approaches the analytic optimum of diag(1, 3)") {
  const CorrelationMatrix c(diag2(1.0, 3.0));
  PsoConfig cfg;
  cfg.seed = 42;
  const auto r = pso_optimize([&](const WeightVector& w) { return 1.0 / ensemble_error(w, c); }, 2, cfg);
  const auto exact = analytic_weights(c);
  CHECK((r.best_weights.values() - exact.values()).cwiseAbs().sum() <= 0.05);
  CHECK(std::is_sorted(r.fitness_trace.begin(), r.fitness_trace.end()));
}

TEST_CASE("pso_optimize is deterministic and keeps every particle feasible") {
  std::mt19937_64 rng(5);
  const Matrix a = oracle::uniform(12, 6, rng);
  const CorrelationMatrix c(a.transpose() * a + 0.1 * Matrix::Identity(6, 6));
  PsoConfig cfg;
  cfg.seed = 7;
  cfg.iterations = 50;
  int infeasible = 0;
  auto f = [&](const WeightVector& w) {
    if (w.values().minCoeff() < 0.0 || w.values().maxCoeff() > 1.0 || std::abs(w.values().sum() - 1.0) > 1e-9)
      ++infeasible;
    return 1.0 / ensemble_error(w, c);
  };
  const auto r1 = pso_optimize(f, 6, cfg);
  const auto r2 = pso_optimize(f, 6, cfg);
  CHECK(infeasible == 0);
  CHECK(r1.best_weights.values() == r2.best_weights.values());
  CHECK(r1.fitness_trace == r2.fitness_trace);
  CHECK(std::is_sorted(r1.fitness_trace.begin(), r1.fitness_trace.end()));
}

TEST_CASE("pso_optimize with degenerate fitness returns a feasible point") {
  PsoConfig cfg;
  cfg.iterations = 5;
  const auto r = pso_optimize([](const WeightVector&) { return std::numeric_limits<double>::quiet_NaN(); }, 3, cfg);
  CHECK(std::abs(r.best_weights.values().sum() - 1.0) < 1e-9);
  CHECK(std::isinf(r.best_fitness));
}

TEST_CASE("PsoConfig validation") {
  PsoConfig cfg;
  cfg.swarm_size = 1;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  cfg = PsoConfig{};
  cfg.inertia = 1.5;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  cfg = PsoConfig{};
  cfg.velocity_clamp = 0.0;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
}

TEST_CASE("select_members") {
  Vector w(3);
  w << 0.6, 0.3, 0.1;
  CHECK(select_members(WeightVector(w), 0.25) == std::vector<Index>{0, 1});
  CHECK(select_members(WeightVector::uniform(4), 0.0) == std::vector<Index>{0, 1, 2, 3});
  w << 0.4, 0.35, 0.25;
  CHECK(select_members(WeightVector(w), 0.5) == std::vector<Index>{0});
  CHECK(select_members(WeightVector(w), 0.2) == std::vector<Index>{0, 1, 2});
  CHECK_THROWS_AS(select_members(WeightVector(w), 1.0), InvalidArgument);
}

TEST_CASE("combine_regression") {
  const std::vector<Matrix> one{Matrix::Constant(2, 1, 1.0), Matrix::Constant(2, 1, 3.0)};
  CHECK(combine_regression(one, std::vector<Index>{1}) == one[1]);
  CHECK(combine_regression(one, std::vector<Index>{0, 1}) == Matrix::Constant(2, 1, 2.0));
  const Matrix v = Matrix::Constant(3, 2, 0.1);
  const std::vector<Matrix> same(7, v);
  CHECK(combine_regression(same, std::vector<Index>{0, 1, 2, 3, 4, 5, 6}).isApprox(v, 1e-15));
  CHECK_THROWS_AS(combine_regression(one, std::vector<Index>{}), EmptySelection);
}

TEST_CASE("combine_classification") {
  const std::vector<std::vector<Index>> votes{{0, 1}, {0, 2}, {1, 2}};
  CHECK(combine_classification(votes, std::vector<Index>{0, 1, 2}) == std::vector<Index>{0, 2});
  CHECK(combine_classification(votes, std::vector<Index>{2}) == votes[2]);
  CHECK(combine_classification(votes, std::vector<Index>{0, 2}) == std::vector<Index>{0, 1});
  CHECK_THROWS_AS(combine_classification(votes, std::vector<Index>{}), EmptySelection);
}

TEST_CASE("weighted_vote_error") {
  const std::vector<std::vector<Index>> labels{{0, 1, 1}, {1, 1, 0}};
  const std::vector<Index> truth{0, 1, 0};
  Vector w(2);
  w << 0.7, 0.3;
  CHECK(weighted_vote_error(WeightVector(w), labels, truth) == doctest::Approx(1.0 / 3.0));
  w << 0.3, 0.7;
  CHECK(weighted_vote_error(WeightVector(w), labels, truth) == doctest::Approx(1.0 / 3.0));
  // Both ties resolve to class 0.
  CHECK(weighted_vote_error(WeightVector::uniform(2), labels, truth) == 0.0);
}

namespace {

Dataset line_data(Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Dataset d;
  d.x = oracle::uniform(n, 1, rng);
  d.t = 0.5 * d.x.array() + 0.2;
  return d;
}

// Linear least squares on [x, 1]; learner `bad` fits shuffled targets.
LearnerTrainer linear_trainer(Index bad) {
  return [bad](const Dataset& s, Index index) -> Learner {
    Matrix a(s.size(), 2);
    a.col(0) = s.x.col(0);
    a.col(1).setOnes();
    Matrix t = s.t;
    if (index == bad) t = -3.0 * t.array() + 1.0;
    const Matrix coef = oracle::lstsq(a, t);
    return [coef](const Matrix& x) {
      Matrix out = x.col(0) * coef(0, 0);
      out.array() += coef(1, 0);
      return out;
    };
  };
}

}  // namespace

TEST_CASE("psosen_standalone down-weights a corrupted learner") {
  int lower = 0;
  PsoConfig pso;
  pso.iterations = 60;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto ens = psosen_standalone(line_data(60, seed), linear_trainer(1), 2, std::nullopt, pso, seed);
    lower += ens.selection.best_weights[1] < ens.selection.best_weights[0];
  }
  CHECK(lower >= 90);
}

TEST_CASE("psosen_standalone with lambda 0 keeps every learner") {
  PsoConfig pso;
  pso.iterations = 20;
  const auto ens = psosen_standalone(line_data(40, 3), linear_trainer(0), 5, 0.0, pso, 3);
  CHECK(ens.selection.selected == std::vector<Index>{0, 1, 2, 3, 4});
  CHECK(!ens.validation_rows.empty());
  CHECK_THROWS_AS(psosen_standalone(line_data(40, 3), linear_trainer(0), 1, 0.0, pso, 3), InvalidArgument);
}
