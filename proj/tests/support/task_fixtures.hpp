#pragma once

#include <map>
#include <utility>
#include <vector>

#include "minigrpo/task.hpp"
#include "scripted_policy.hpp"

namespace testsupport {

inline minigrpo::Question easy_add(const minigrpo::Vocab& v, std::int64_t a,
                                   std::int64_t b, std::uint64_t id = 1) {
  minigrpo::Question q;
  q.id = id;
  q.a = a;
  q.b = b;
  q.op = minigrpo::Op::add;
  q.answer = a + b;
  q.difficulty = minigrpo::Difficulty::easy;
  q.expr = minigrpo::render_int(v, a);
  q.expr.push_back(v.plus);
  const auto rhs = minigrpo::render_int(v, b);
  q.expr.insert(q.expr.end(), rhs.begin(), rhs.end());
  q.prompt = minigrpo::render_prompt(v, q);
  return q;
}

// assistant -> <think></think><answer> boxed <digit> </answer><eos>
inline std::map<minigrpo::TokenId,
                std::vector<std::pair<minigrpo::TokenId, double>>>
template_rules(const minigrpo::Vocab& v, minigrpo::TokenId answer_digit) {
  std::map<minigrpo::TokenId, std::vector<std::pair<minigrpo::TokenId, double>>> rules;
  rules[v.assistant_cue] = {{v.think_open, 1.0}};
  rules[v.think_open] = {{v.think_close, 1.0}};
  rules[v.think_close] = {{v.answer_open, 1.0}};
  rules[v.answer_open] = {{v.boxed, 1.0}};
  rules[v.boxed] = {{answer_digit, 1.0}};
  for (int d = 0; d <= 9; ++d) rules[v.digit[d]] = {{v.answer_close, 1.0}};
  rules[v.answer_close] = {{v.eos, 1.0}};
  return rules;
}

// Emits the full template deterministically, answering `digit` always.
inline minigrpo::Policy oracle_policy(const minigrpo::Vocab& v, int k, int digit) {
  return scripted_policy(v, k, template_rules(v, v.digit[digit]));
}

// Correct answer `digit` half the time, `digit+1 mod 10` otherwise.
inline minigrpo::Policy coin_policy(const minigrpo::Vocab& v, int k, int digit) {
  auto rules = template_rules(v, v.digit[digit]);
  rules[v.boxed] = {{v.digit[digit], 1.0}, {v.digit[(digit + 1) % 10], 1.0}};
  return scripted_policy(v, k, rules);
}

// Never opens a think tag: every response is malformed.
inline minigrpo::Policy malformed_policy(const minigrpo::Vocab& v, int k) {
  std::map<minigrpo::TokenId, std::vector<std::pair<minigrpo::TokenId, double>>> rules;
  rules[v.assistant_cue] = {{v.eos, 1.0}};
  return scripted_policy(v, k, rules);
}

}  // namespace testsupport
