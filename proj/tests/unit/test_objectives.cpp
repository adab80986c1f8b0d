#include <doctest.h>

#include <cmath>

#include "finite_diff.hpp"
#include "instances.hpp"
#include "minigrpo/errors.hpp"
#include "minigrpo/objectives.hpp"
#include "test_util.hpp"

using namespace minigrpo;
using testsupport::make_group;
using testsupport::ObjectiveInstance;
using testsupport::ObjectiveKind;
using testsupport::random_objective_instance;
using testsupport::tiny_vocab;

TEST_CASE("objectives: importance ratio") {
  CHECK(importance_ratio(-1.5, -1.5) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(importance_ratio(-1.0 + std::log(2.0), -1.0) ==
        doctest::Approx(2.0).epsilon(1e-12));
  CHECK(importance_ratio(-1.0 - std::log(4.0), -1.0) ==
        doctest::Approx(0.25).epsilon(1e-12));
  CHECK(importance_ratio(0.0, -20.0) == 1e6);  // clamped
  CHECK_THROWS_AS(importance_ratio(std::nan(""), 0.0), InputError);
}

TEST_CASE("objectives: clipped term") {
  const ClipConfig clip{0.2, 0.28};
  SUBCASE("positive advantage clips high") {
    const ClippedTerm t = clipped_term(1.5, 1.0, clip);
    CHECK(t.value == doctest::Approx(1.28).epsilon(1e-12));
    CHECK(t.clipped);
  }
  SUBCASE("negative advantage clips low") {
    const ClippedTerm t = clipped_term(0.5, -1.0, clip);
    CHECK(t.value == doctest::Approx(-0.8).epsilon(1e-12));
    CHECK(t.clipped);
  }
  SUBCASE("identity ratio never clips") {
    for (double a : {-2.0, 0.0, 0.7}) {
      const ClippedTerm t = clipped_term(1.0, a, clip);
      CHECK(t.value == a);
      CHECK(!t.clipped);
    }
  }
  SUBCASE("below-range ratio with positive advantage keeps the raw branch") {
    // min(0.5*A, 0.8*A) with A>0 is the raw term: gradient must flow.
    const ClippedTerm t = clipped_term(0.5, 1.0, clip);
    CHECK(t.value == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(!t.clipped);
  }
  SUBCASE("validation") {
    CHECK_THROWS_AS((ClipConfig{0.0, 0.2}).validate(), ConfigError);
    CHECK_THROWS_AS((ClipConfig{1.2, 1.3}).validate(), ConfigError);
    CHECK_THROWS_AS((ClipConfig{0.3, 0.2}).validate(), ConfigError);
  }
}

TEST_CASE("objectives: k3 estimator") {
  CHECK(kl_k3(-2.0, -2.0) == 0.0);
  // ratio pi_ref/pi_theta = 2 -> 2 - ln2 - 1
  CHECK(kl_k3(-1.0 + std::log(2.0), -1.0) ==
        doctest::Approx(0.306852819).epsilon(1e-9));
  // ratio 0.5 -> 0.5 + ln2 - 1
  CHECK(kl_k3(-1.0 + std::log(0.5), -1.0) ==
        doctest::Approx(0.193147181).epsilon(1e-9));

  RngStream rng = RngStream::keyed(3, RngPurpose::weight_init);
  for (int i = 0; i < 10000; ++i) {
    const double a = -5.0 * rng.next_double();
    const double b = -5.0 * rng.next_double();
    const double k = kl_k3(a, b);
    CHECK(k >= 0.0);
    if (a != b) CHECK(k > 0.0);
  }
}

namespace {

// Two one-token rollouts (equal lengths), rewards {1,0}, prompt [eos].
std::vector<RolloutGroup> pair_group(const Vocab& v) {
  return {make_group(v, {{{2}, 1}, {{3}, 0}})};
}

}  // namespace

TEST_CASE("objectives: grpo on-policy plug-in value") {
  const Vocab v = tiny_vocab();
  Policy p = Policy::init(v, 2, 3, 4, 5);
  const std::vector<RolloutGroup> groups = pair_group(v);
  for (Aggregation agg : {Aggregation::token, Aggregation::sequence}) {
    const ObjectiveReport r = grpo_objective(groups, p, p, p, 0.0, 0.2, agg);
    CHECK(r.value == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(r.clip_fraction == 0.0);
    CHECK(r.mean_kl == 0.0);  // ref == new
  }
}

TEST_CASE("objectives: KL term reacts to beta and vanishes at ref == new") {
  const Vocab v = tiny_vocab();
  Policy old_p = Policy::init(v, 2, 3, 4, 7);
  Policy new_p = old_p;
  for (double& w : new_p.weights()) w += 0.01;
  Policy ref = Policy::init(v, 2, 3, 4, 8);
  const std::vector<RolloutGroup> groups = pair_group(v);

  const ObjectiveReport self = grpo_objective(groups, new_p, old_p, new_p, 0.5, 0.2);
  CHECK(self.mean_kl == doctest::Approx(0.0).epsilon(1e-15));

  const ObjectiveReport b1 = grpo_objective(groups, new_p, old_p, ref, 0.1, 0.2);
  const ObjectiveReport b2 = grpo_objective(groups, new_p, old_p, ref, 0.9, 0.2);
  CHECK(b1.mean_kl > 0.0);
  CHECK(b1.mean_kl == doctest::Approx(b2.mean_kl).epsilon(1e-12));
  CHECK(b2.value < b1.value);
  CHECK(b1.value - b2.value ==
        doctest::Approx(0.8 * b1.mean_kl).epsilon(1e-9));
}

TEST_CASE("objectives: grpopp entropy bonus") {
  const Vocab v = tiny_vocab();
  const std::vector<RolloutGroup> groups = pair_group(v);

  SUBCASE("alpha=0 equals the bare clip-higher objective") {
    Policy p = Policy::init(v, 2, 3, 4, 9);
    const ObjectiveReport bare =
        grpopp_objective(groups, p, p, 0.0, ClipConfig{0.2, 0.28});
    const ObjectiveReport bonus =
        grpopp_objective(groups, p, p, 0.013, ClipConfig{0.2, 0.28});
    CHECK(bonus.value - bare.value ==
          doctest::Approx(0.013 * bare.mean_entropy).epsilon(1e-12));
  }

  SUBCASE("uniform policy contributes alpha*ln V") {
    Policy uniform(v, 2, 3, 4);  // zero weights -> exactly uniform
    const ObjectiveReport r =
        grpopp_objective(groups, uniform, uniform, 0.001, ClipConfig{0.2, 0.28});
    CHECK(r.mean_entropy == doctest::Approx(std::log(8.0)).epsilon(1e-12));
    // on-policy mean of {+1,-1} advantages is 0; only the bonus remains
    CHECK(r.value == doctest::Approx(0.001 * std::log(8.0)).epsilon(1e-9));
  }

  SUBCASE("contract: unfiltered groups are rejected") {
    Policy p = Policy::init(v, 2, 3, 4, 9);
    const std::vector<RolloutGroup> allcorrect = {
        make_group(v, {{{2}, 1}, {{3}, 1}})};
    CHECK_THROWS_AS(
        grpopp_objective(allcorrect, p, p, 0.0, ClipConfig{0.2, 0.28}),
        ContractViolation);
    const std::vector<RolloutGroup> allwrong = {
        make_group(v, {{{2}, 0}, {{3}, 0}})};
    CHECK_THROWS_AS(
        grpopp_objective(allwrong, p, p, 0.0, ClipConfig{0.2, 0.28}),
        ContractViolation);
  }
}

TEST_CASE("objectives: lgrpo") {
  const Vocab v = tiny_vocab();
  Policy p = Policy::init(v, 2, 3, 4, 11);
  const ClipConfig clip{0.2, 0.28};

  SUBCASE("mixed groups reduce to unshaped advantages") {
    const std::vector<RolloutGroup> groups = {
        make_group(v, {{{2, 4}, 1}, {{3}, 0}, {{5, 6, 7}, 1}})};
    const ObjectiveCoeffs coeffs{0.01, 0.05, 0.7};
    const ObjectiveReport shaped =
        lgrpo_objective(groups, p, p, p, coeffs, clip, 8);

    std::vector<std::vector<double>> adv = {
        group_advantages({1.0, 0.0, 1.0}).a};
    SurrogateOptions opts;
    opts.alpha = coeffs.alpha;
    opts.beta = coeffs.beta;
    opts.clip = clip;
    const ObjectiveReport plain = assemble_surrogate(
        groups, broadcast_advantages(groups, adv), p, p, &p, opts);
    CHECK(shaped.value == doctest::Approx(plain.value).epsilon(1e-15));
    for (std::size_t i = 0; i < shaped.grad.size(); ++i) {
      CHECK(shaped.grad.g[i] == doctest::Approx(plain.grad.g[i]).epsilon(1e-15));
    }
  }

  SUBCASE("all-correct pair pushes probability toward the shorter rollout") {
    const std::vector<RolloutGroup> groups = {
        make_group(v, {{{2, 3, 4, 5}, 1}, {{6, 7}, 1}})};
    SurrogateTrace trace;
    lgrpo_objective(groups, p, p, p, ObjectiveCoeffs{0.0, 0.0, 0.5}, clip, 8,
                    Aggregation::token, &trace);
    REQUIRE(trace.tokens.size() == 6);
    for (int t = 0; t < 4; ++t) CHECK(trace.tokens[t].policy_coeff < 0.0);
    for (int t = 4; t < 6; ++t) CHECK(trace.tokens[t].policy_coeff > 0.0);
  }

  SUBCASE("lambda=0 makes all-correct groups silent") {
    const std::vector<RolloutGroup> groups = {
        make_group(v, {{{2, 3, 4, 5}, 1}, {{6, 7}, 1}})};
    const ObjectiveReport r = lgrpo_objective(
        groups, p, p, p, ObjectiveCoeffs{0.0, 0.0, 0.0}, clip, 8);
    for (double g : r.grad.g) CHECK(g == 0.0);
  }

  SUBCASE("contract: all-incorrect group rejected") {
    const std::vector<RolloutGroup> groups = {
        make_group(v, {{{2}, 0}, {{3}, 0}})};
    CHECK_THROWS_AS(lgrpo_objective(groups, p, p, p, ObjectiveCoeffs{}, clip, 8),
                    ContractViolation);
  }
}

TEST_CASE("objectives: ppo on-policy value is the mean advantage") {
  const Vocab v = tiny_vocab();
  Policy p = Policy::init(v, 2, 3, 4, 13);
  const std::vector<RolloutGroup> groups = {
      make_group(v, {{{2, 3}, 1}, {{4}, 0}})};
  const std::vector<std::vector<std::vector<double>>> adv = {
      {{0.5, -1.0}, {2.0}}};
  const ObjectiveReport r =
      ppo_surrogate(groups, p, p, adv, ClipConfig::symmetric(0.2));
  CHECK(r.value == doctest::Approx((0.5 - 1.0 + 2.0) / 3.0).epsilon(1e-12));
  CHECK(r.clip_fraction == 0.0);

  SUBCASE("all-zero advantages mean zero value and gradient") {
    const std::vector<std::vector<std::vector<double>>> zeros = {
        {{0.0, 0.0}, {0.0}}};
    const ObjectiveReport z =
        ppo_surrogate(groups, p, p, zeros, ClipConfig::symmetric(0.2));
    CHECK(z.value == 0.0);
    for (double g : z.grad.g) CHECK(g == 0.0);
  }
}

TEST_CASE("objectives: clip deadband zeroes the gradient coefficient") {
  const Vocab v = tiny_vocab();
  Policy old_p(v, 1, 2, 2);  // uniform
  Policy new_p = old_p;
  // push token 2's logit up so its ratio passes 1+eps_high
  new_p.weights()[new_p.b2_offset() + 2] = 1.0;

  const std::vector<RolloutGroup> groups = {make_group(v, {{{2}, 1}, {{3}, 0}})};
  SurrogateTrace trace;
  grpopp_objective(groups, new_p, old_p, 0.0, ClipConfig{0.2, 0.28},
                   Aggregation::token, &trace);
  REQUIRE(trace.tokens.size() == 2);
  CHECK(trace.tokens[0].ratio > 1.28);
  CHECK(trace.tokens[0].clipped);
  CHECK(trace.tokens[0].policy_coeff == 0.0);
  // the incorrect rollout's token got rarer: ratio < 1, A < 0, not clipped
  CHECK(trace.tokens[1].ratio < 1.0);
  CHECK(!trace.tokens[1].clipped);
  CHECK(trace.tokens[1].policy_coeff != 0.0);
}

TEST_CASE("objectives: token and sequence aggregation coincide on-policy") {
  const Vocab v = tiny_vocab();
  Policy p = Policy::init(v, 2, 3, 4, 17);
  const std::vector<RolloutGroup> groups = {
      make_group(v, {{{2, 3, 4}, 1}, {{5}, 0}}),
      make_group(v, {{{6}, 0}, {{7, 2}, 1}})};
  const ObjectiveReport tok =
      grpo_objective(groups, p, p, p, 0.3, 0.2, Aggregation::token);
  const ObjectiveReport seq =
      grpo_objective(groups, p, p, p, 0.3, 0.2, Aggregation::sequence);
  REQUIRE(tok.grad.size() == seq.grad.size());
  for (std::size_t i = 0; i < tok.grad.size(); ++i) {
    CHECK(tok.grad.g[i] == seq.grad.g[i]);
  }
  CHECK(tok.clip_fraction == 0.0);
  CHECK(seq.clip_fraction == 0.0);
}

TEST_CASE("objectives: analytic gradients match finite differences") {
  for (ObjectiveKind kind : {ObjectiveKind::ppo, ObjectiveKind::grpo,
                             ObjectiveKind::grpopp, ObjectiveKind::lgrpo}) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      CAPTURE(testsupport::objective_kind_name(kind));
      CAPTURE(seed);
      ObjectiveInstance inst = random_objective_instance(kind, seed);
      const GradBuffer analytic = inst.eval().grad;
      const GradBuffer fd = testsupport::finite_diff_grad(
          inst.policy, [&]() { return inst.eval().value; });
      CHECK(testsupport::max_relative_error(analytic, fd) < 1e-6);
    }
  }
}
