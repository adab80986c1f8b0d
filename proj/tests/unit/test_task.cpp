#include <doctest.h>

#include <algorithm>
#include <set>

#include "minigrpo/errors.hpp"
#include "minigrpo/task.hpp"

using namespace minigrpo;

namespace {
const Vocab& vocab() {
  static const Vocab v = Vocab::standard();
  return v;
}

bool contains_subsequence(const std::vector<TokenId>& hay,
                          const std::vector<TokenId>& needle, int* count) {
  *count = 0;
  if (needle.empty()) return false;
  for (std::size_t i = 0; i + needle.size() <= hay.size(); ++i) {
    if (std::equal(needle.begin(), needle.end(), hay.begin() + static_cast<std::ptrdiff_t>(i))) {
      ++*count;
    }
  }
  return *count > 0;
}
}  // namespace

TEST_CASE("task: generation is deterministic and exact") {
  const DifficultyMix mix{0.5, 0.3, 0.2};
  const std::vector<Question> a = generate_questions(vocab(), 50, 7, mix);
  const std::vector<Question> b = generate_questions(vocab(), 50, 7, mix);
  REQUIRE(a.size() == 50);
  std::set<std::uint64_t> ids;
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].id == b[i].id);
    CHECK(a[i].a == b[i].a);
    CHECK(a[i].b == b[i].b);
    CHECK(a[i].op == b[i].op);
    ids.insert(a[i].id);
    // ground truth equals exact evaluation
    switch (a[i].op) {
      case Op::add: CHECK(a[i].answer == a[i].a + a[i].b); break;
      case Op::sub: CHECK(a[i].answer == a[i].a - a[i].b); break;
      case Op::mul_mod:
        CHECK(a[i].answer == (a[i].a * a[i].b) % a[i].modulus);
        break;
    }
    CHECK(a[i].answer >= -9);
    CHECK(a[i].answer <= 99);
  }
  CHECK(ids.size() == 50);
  CHECK(generate_questions(vocab(), 50, 8, mix)[0].id != a[0].id);
  CHECK_THROWS_AS(generate_questions(vocab(), 0, 7, mix), ConfigError);
  CHECK_THROWS_AS(generate_questions(vocab(), 5, 7, DifficultyMix{0.5, 0.0, 0.0}),
                  ConfigError);
}

TEST_CASE("task: difficulty bands") {
  const std::vector<Question> easy =
      generate_questions(vocab(), 200, 3, DifficultyMix{1, 0, 0});
  for (const Question& q : easy) {
    CHECK(q.difficulty == Difficulty::easy);
    CHECK(q.a >= 0);
    CHECK(q.a <= 9);
    CHECK(q.b >= 0);
    CHECK(q.b <= 9);
  }
  const std::vector<Question> hard =
      generate_questions(vocab(), 200, 3, DifficultyMix{0, 0, 1});
  for (const Question& q : hard) {
    CHECK(q.difficulty == Difficulty::hard);
    CHECK(q.op != Op::add);
    CHECK(q.a >= 100);
    CHECK(q.a <= 999);
    CHECK(q.b >= 100);
    CHECK(q.b <= 999);
    CHECK(q.answer >= 0);
    CHECK(q.answer <= 99);
  }
}

TEST_CASE("task: prompt rendering") {
  const std::vector<Question> qs =
      generate_questions(vocab(), 100, 11, DifficultyMix{0.6, 0.3, 0.1});

  SUBCASE("pure and injective") {
    std::set<std::vector<TokenId>> prompts;
    for (const Question& q : qs) {
      CHECK(render_prompt(vocab(), q) == q.prompt);  // same question, same prompt
      prompts.insert(q.prompt);
    }
    std::set<std::tuple<std::int64_t, std::int64_t, int>> keys;
    for (const Question& q : qs) keys.insert({q.a, q.b, static_cast<int>(q.op)});
    CHECK(prompts.size() == keys.size());
  }

  SUBCASE("ends with the assistant cue and contains the expression once") {
    for (const Question& q : qs) {
      REQUIRE(!q.prompt.empty());
      CHECK(q.prompt.back() == vocab().assistant_cue);
      int count = 0;
      CHECK(contains_subsequence(q.prompt, q.expr, &count));
      CHECK(count == 1);
    }
  }
}

TEST_CASE("task: response parsing") {
  const Vocab& v = vocab();
  const TokenId d4 = v.digit[4];
  const TokenId d2 = v.digit[2];
  const TokenId d0 = v.digit[0];

  SUBCASE("well-formed with boxed 42") {
    const std::vector<TokenId> r = {v.think_open,  v.digit[1], v.think_close,
                                    v.answer_open, v.boxed,    d4,
                                    d2,            v.answer_close, v.eos};
    const ParsedResponse p = parse_response(v, r);
    CHECK(p.well_formed);
    REQUIRE(p.boxed_value.has_value());
    CHECK(*p.boxed_value == 42);
    CHECK(p.length == 9);
    CHECK(p.think_span.begin == 1);
    CHECK(p.think_span.end == 2);
    CHECK(p.answer_span.begin == 4);
    CHECK(p.answer_span.end == 7);
  }

  SUBCASE("missing </think> is malformed, no value") {
    const std::vector<TokenId> r = {v.think_open, v.digit[1], v.answer_open,
                                    v.boxed, d4, v.answer_close, v.eos};
    const ParsedResponse p = parse_response(v, r);
    CHECK(!p.well_formed);
    CHECK(!p.boxed_value.has_value());
  }

  SUBCASE("empty think span is well-formed") {
    const std::vector<TokenId> r = {v.think_open, v.think_close, v.answer_open,
                                    v.boxed, d4, v.answer_close, v.eos};
    const ParsedResponse p = parse_response(v, r);
    CHECK(p.well_formed);
    CHECK(p.think_span.empty());
    CHECK(*p.boxed_value == 4);
  }

  SUBCASE("negative and zero-padded values") {
    const std::vector<TokenId> neg = {v.think_open, v.think_close, v.answer_open,
                                      v.boxed, v.minus, d4, v.answer_close};
    CHECK(*parse_response(v, neg).boxed_value == -4);
    const std::vector<TokenId> padded = {v.think_open, v.think_close,
                                         v.answer_open, v.boxed, d0, d4, d2,
                                         v.answer_close, v.eos};
    CHECK(*parse_response(v, padded).boxed_value == 42);
  }

  SUBCASE("total over garbage") {
    CHECK(!parse_response(v, std::vector<TokenId>{}).well_formed);
    CHECK(!parse_response(v, std::vector<TokenId>{v.eos}).well_formed);
    CHECK(!parse_response(v, std::vector<TokenId>{v.answer_open, v.boxed, d4})
               .well_formed);
    // trailing junk after </answer> <eos>
    const std::vector<TokenId> junk = {v.think_open, v.think_close, v.answer_open,
                                       v.boxed, d4, v.answer_close, v.eos, d4};
    CHECK(!parse_response(v, junk).well_formed);
    // structural token inside think
    const std::vector<TokenId> tag_inside = {v.think_open, v.boxed, v.think_close,
                                             v.answer_open, v.boxed, d4,
                                             v.answer_close};
    CHECK(!parse_response(v, tag_inside).well_formed);
    // no digits
    const std::vector<TokenId> nodigits = {v.think_open, v.think_close,
                                           v.answer_open, v.boxed,
                                           v.answer_close};
    CHECK(!parse_response(v, nodigits).well_formed);
  }
}

TEST_CASE("task: equivalence and reward") {
  const Vocab& v = vocab();
  auto boxed = [&](std::vector<TokenId> digits) {
    std::vector<TokenId> r = {v.think_open, v.think_close, v.answer_open, v.boxed};
    r.insert(r.end(), digits.begin(), digits.end());
    r.push_back(v.answer_close);
    r.push_back(v.eos);
    return parse_response(v, r);
  };

  CHECK(is_equivalent(boxed({v.digit[4], v.digit[2]}), 42));
  CHECK(is_equivalent(boxed({v.digit[0], v.digit[4], v.digit[2]}), 42));  // "042"
  CHECK(is_equivalent(boxed({v.minus, v.digit[0]}), 0));                  // "-0"
  CHECK(!is_equivalent(boxed({v.digit[4]}), 42));
  ParsedResponse malformed;
  CHECK(!is_equivalent(malformed, 0));
  CHECK(accuracy_reward(boxed({v.digit[7]}), 7) == 1);
  CHECK(accuracy_reward(boxed({v.digit[7]}), 8) == 0);
}

TEST_CASE("task: truncation is judged by parse result alone") {
  const Vocab& v = vocab();
  // Structure happens to complete exactly at the length cap, no <eos> emitted.
  const std::vector<TokenId> r = {v.think_open, v.think_close, v.answer_open,
                                  v.boxed, v.digit[7], v.answer_close};
  const ParsedResponse p = parse_response(v, r);
  CHECK(p.well_formed);
  CHECK(accuracy_reward(p, 7) == 1);
  // Truncated mid-structure scores zero.
  const std::vector<TokenId> cut = {v.think_open, v.think_close, v.answer_open,
                                    v.boxed, v.digit[7]};
  CHECK(accuracy_reward(parse_response(v, cut), 7) == 0);
}

TEST_CASE("task: canonical responses round-trip for 10k generated questions") {
  const std::vector<Question> qs = generate_questions(
      vocab(), 10000, 13, DifficultyMix{0.4, 0.3, 0.3});
  RngStream rng = RngStream::keyed(17, RngPurpose::question_gen);
  for (const Question& q : qs) {
    const int copies = static_cast<int>(rng.next_below(4));
    const std::vector<TokenId> resp =
        canonical_response(vocab(), q, copies, q.answer);
    const ParsedResponse p = parse_response(vocab(), resp);
    REQUIRE(p.well_formed);
    CHECK(accuracy_reward(p, q.answer) == 1);
    CHECK(p.think_span.size() == copies * static_cast<int>(q.expr.size()));
    // a short correct answer always exists
    if (copies == 0) CHECK(static_cast<int>(resp.size()) <= 8);
  }
}
