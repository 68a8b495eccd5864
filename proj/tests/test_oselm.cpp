#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "roselm/errors.hpp"
#include "roselm/oselm.hpp"

using namespace roselm;

namespace {

struct Problem {
  Matrix x, t;
};

Problem smooth_problem(Index n, Index dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Problem p{oracle::uniform(n, dim, rng), Matrix(n, 1)};
  for (Index i = 0; i < n; ++i) p.t(i, 0) = std::sin(p.x.row(i).sum()) + 0.1 * p.x(i, 0) * p.x(i, 0);
  return p;
}

}  // namespace

TEST_CASE("oselm_init with zero targets gives zero beta and k = 0") {
  std::mt19937_64 rng(1);
  const auto s = oselm_init(init_hidden(2, 5, ActivationKind::Sigmoid, 1), oracle::uniform(12, 2, rng),
                            Matrix::Zero(12, 1));
  CHECK(s.beta.cwiseAbs().maxCoeff() == 0.0);
  CHECK(s.updates == 0);
  CHECK(s.p == s.p.transpose());
}

TEST_CASE("oselm_init matches batch training on the same chunk") {
  const auto pr = smooth_problem(40, 3, 2);
  const auto layer = init_hidden(3, 10, ActivationKind::Rbf, 2);
  const auto s = oselm_init(layer, pr.x, pr.t);
  const Matrix h = hidden_output(layer, pr.x);
  CHECK(oracle::rel_frobenius(s.beta, oracle::lstsq(h, pr.t)) < 1e-8);
  CHECK(oracle::rel_frobenius(s.p, oracle::direct_inverse(h.transpose() * h)) < 1e-8);
}

TEST_CASE("oselm_init needs at least as many rows as nodes") {
  const auto pr = smooth_problem(9, 2, 3);
  CHECK_THROWS_AS(oselm_init(init_hidden(2, 10, ActivationKind::Sigmoid, 0), pr.x, pr.t), InsufficientInitData);
}

TEST_CASE("a chunk the model already predicts exactly leaves beta unchanged") {
  const auto pr = smooth_problem(40, 2, 4);
  const auto s = oselm_init(init_hidden(2, 8, ActivationKind::Sigmoid, 4), pr.x, pr.t);
  std::mt19937_64 rng(4);
  const Matrix x = oracle::uniform(5, 2, rng);
  const auto next = oselm_update(s, x, s.predict(x));
  CHECK((next.beta - s.beta).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(next.updates == 1);
  CHECK(s.updates == 0);
}

TEST_CASE("one-by-one feed matches batch ELM over all samples") {
  // Five inputs keep H'H well conditioned, so beta itself is well determined.
  const auto pr = smooth_problem(230, 5, 5);
  const auto layer = init_hidden(5, 20, ActivationKind::Sigmoid, 5);
  auto s = oselm_init(layer, pr.x.topRows(30), pr.t.topRows(30));
  for (Index i = 30; i < 230; ++i) s = oselm_update(std::move(s), pr.x.row(i), pr.t.row(i));
  CHECK(s.updates == 200);
  const Matrix h = hidden_output(layer, pr.x);
  CHECK(oracle::rel_frobenius(s.beta, oracle::lstsq(h, pr.t)) < 1e-6);
  CHECK((s.p - s.p.transpose()).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("mixed chunk sizes reach the same beta") {
  const auto pr = smooth_problem(300, 3, 6);
  const auto layer = init_hidden(3, 15, ActivationKind::Rbf, 6);
  auto s = oselm_init(layer, pr.x.topRows(25), pr.t.topRows(25));
  const std::array<Index, 3> sizes{1, 7, 20};
  Index at = 25, k = 0;
  while (at < 300) {
    const Index c = std::min<Index>(sizes[static_cast<std::size_t>(k++ % 3)], 300 - at);
    s.learn(pr.x.middleRows(at, c), pr.t.middleRows(at, c));
    at += c;
  }
  CHECK(s.updates == k);
  const Matrix h = hidden_output(layer, pr.x);
  CHECK(oracle::rel_frobenius(s.beta, oracle::lstsq(h, pr.t)) < 1e-6);
}

TEST_CASE("oselm_update shape errors") {
  const auto pr = smooth_problem(30, 2, 7);
  const auto s = oselm_init(init_hidden(2, 5, ActivationKind::Sigmoid, 7), pr.x, pr.t);
  CHECK_THROWS(oselm_update(s, Matrix::Zero(0, 2), Matrix::Zero(0, 1)));
  CHECK_THROWS_AS(oselm_update(s, Matrix::Zero(1, 3), Matrix::Zero(1, 1)), DimensionMismatch);
  CHECK_THROWS_AS(oselm_update(s, Matrix::Zero(1, 2), Matrix::Zero(1, 2)), DimensionMismatch);
}
