#include <doctest.h>

#include <cmath>

#include "minigrpo/adam.hpp"
#include "minigrpo/errors.hpp"
#include "test_util.hpp"

using namespace minigrpo;
using testsupport::tiny_vocab;

namespace {
Policy small_policy(std::uint64_t seed) {
  return Policy::init(tiny_vocab(), 1, 2, 2, seed);
}

GradBuffer constant_grad(std::size_t n, double value) {
  GradBuffer g(n);
  for (double& v : g.g) v = value;
  return g;
}
}  // namespace

TEST_CASE("adam: zero gradient leaves weights alone but advances time") {
  Policy p = small_policy(1);
  const std::vector<double> before = p.weights();
  AdamState st(p.param_count());
  adam_step(p, GradBuffer(p.param_count()), st, 0.1);
  CHECK(p.weights() == before);
  CHECK(st.t == 1);
}

TEST_CASE("adam: first step has magnitude ~lr in the gradient sign") {
  Policy p = small_policy(2);
  const std::vector<double> before = p.weights();
  AdamState st(p.param_count());
  const double lr = 1e-3;
  GradBuffer g(p.param_count());
  for (std::size_t i = 0; i < g.size(); ++i) g.g[i] = (i % 2 == 0) ? 0.37 : -2.1;
  adam_step(p, g, st, lr);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double delta = p.weights()[i] - before[i];
    const double expected = lr * g.g[i] / (std::abs(g.g[i]) + st.eps);
    CHECK(delta == doctest::Approx(expected).epsilon(1e-12));
    CHECK(std::abs(std::abs(delta) - lr) < 1e-6);
  }
}

TEST_CASE("adam: repeated identical gradients never grow the step") {
  Policy p = small_policy(3);
  AdamState st(p.param_count());
  const GradBuffer g = constant_grad(p.param_count(), 0.8);
  std::vector<double> prev = p.weights();
  adam_step(p, g, st, 1e-2);
  std::vector<double> first_delta(p.param_count());
  for (std::size_t i = 0; i < first_delta.size(); ++i) {
    first_delta[i] = std::abs(p.weights()[i] - prev[i]);
  }
  prev = p.weights();
  adam_step(p, g, st, 1e-2);
  for (std::size_t i = 0; i < first_delta.size(); ++i) {
    const double second = std::abs(p.weights()[i] - prev[i]);
    CHECK(second <= first_delta[i] + 1e-12);
  }
}

TEST_CASE("adam: ascent direction maximizes") {
  Policy p = small_policy(4);
  AdamState st(p.param_count());
  const GradBuffer g = constant_grad(p.param_count(), 1.0);
  const std::vector<double> before = p.weights();
  adam_step(p, g, st, 1e-2);
  for (std::size_t i = 0; i < before.size(); ++i) CHECK(p.weights()[i] > before[i]);
}

TEST_CASE("adam: lr=0 freezes the parameters over many steps") {
  Policy p = small_policy(5);
  const std::vector<double> before = p.weights();
  AdamState st(p.param_count());
  GradBuffer g = constant_grad(p.param_count(), -0.3);
  for (int i = 0; i < 25; ++i) adam_step(p, g, st, 0.0);
  CHECK(p.weights() == before);
  CHECK(st.t == 25);
}

TEST_CASE("adam: non-finite gradient aborts without touching state") {
  Policy p = small_policy(6);
  const std::vector<double> before = p.weights();
  AdamState st(p.param_count());
  GradBuffer g(p.param_count());
  g.g[0] = std::nan("");
  CHECK_THROWS_AS(adam_step(p, g, st, 1e-2), NumericalError);
  CHECK(p.weights() == before);
  CHECK(st.t == 0);
  for (double v : st.m) CHECK(v == 0.0);
}

TEST_CASE("adam: size mismatches are contract errors") {
  Policy p = small_policy(7);
  AdamState st(p.param_count());
  CHECK_THROWS_AS(adam_step(p, GradBuffer(3), st, 1e-2), ContractViolation);
  AdamState bad(3);
  CHECK_THROWS_AS(adam_step(p, GradBuffer(p.param_count()), bad, 1e-2),
                  ContractViolation);
}
