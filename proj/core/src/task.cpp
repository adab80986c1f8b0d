#include "minigrpo/task.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "minigrpo/errors.hpp"

namespace minigrpo {

std::string op_name(Op op) {
  switch (op) {
    case Op::add: return "ADD";
    case Op::sub: return "SUB";
    case Op::mul_mod: return "MULMOD";
  }
  return "?";
}

std::string difficulty_name(Difficulty d) {
  switch (d) {
    case Difficulty::easy: return "EASY";
    case Difficulty::medium: return "MEDIUM";
    case Difficulty::hard: return "HARD";
  }
  return "?";
}

std::optional<Op> op_from_name(const std::string& s) {
  if (s == "ADD") return Op::add;
  if (s == "SUB") return Op::sub;
  if (s == "MULMOD") return Op::mul_mod;
  return std::nullopt;
}

std::optional<Difficulty> difficulty_from_name(const std::string& s) {
  if (s == "EASY") return Difficulty::easy;
  if (s == "MEDIUM") return Difficulty::medium;
  if (s == "HARD") return Difficulty::hard;
  return std::nullopt;
}

void DifficultyMix::validate() const {
  if (easy < 0 || medium < 0 || hard < 0) {
    throw ConfigError("difficulty weights must be nonnegative");
  }
  const double sum = easy + medium + hard;
  if (std::abs(sum - 1.0) > 1e-9) {
    throw ConfigError("difficulty weights must sum to 1, got " +
                      std::to_string(sum));
  }
}

namespace {

struct Operands {
  std::int64_t a;
  std::int64_t b;
  std::int64_t modulus;
};

Operands make_operands(Difficulty d, Op op, RngStream& rng) {
  Operands o{0, 0, 0};
  switch (d) {
    case Difficulty::easy:
      o.a = static_cast<std::int64_t>(rng.next_below(10));
      o.b = static_cast<std::int64_t>(rng.next_below(10));
      if (op == Op::mul_mod) o.modulus = 10;
      break;
    case Difficulty::medium:
      o.a = 10 + static_cast<std::int64_t>(rng.next_below(40));
      o.b = 10 + static_cast<std::int64_t>(rng.next_below(40));
      if (op == Op::sub && o.b > o.a) std::swap(o.a, o.b);
      if (op == Op::mul_mod) o.modulus = 100;
      break;
    case Difficulty::hard:
      o.a = 100 + static_cast<std::int64_t>(rng.next_below(900));
      if (op == Op::sub) {
        const std::int64_t lo = std::max<std::int64_t>(100, o.a - 99);
        o.b = lo + static_cast<std::int64_t>(rng.next_below(
                       static_cast<std::uint64_t>(o.a - lo + 1)));
      } else {
        o.b = 100 + static_cast<std::int64_t>(rng.next_below(900));
      }
      if (op == Op::mul_mod) o.modulus = 100;
      break;
  }
  return o;
}

std::int64_t eval_op(Op op, const Operands& o) {
  switch (op) {
    case Op::add: return o.a + o.b;
    case Op::sub: return o.a - o.b;
    case Op::mul_mod: return (o.a * o.b) % o.modulus;
  }
  return 0;
}

Op pick_op(Difficulty d, RngStream& rng) {
  if (d == Difficulty::hard) {
    // Plain 3-digit addition cannot produce a two-digit answer, so hard
    // questions draw from sub and mul only.
    return rng.next_below(2) == 0 ? Op::sub : Op::mul_mod;
  }
  switch (rng.next_below(3)) {
    case 0: return Op::add;
    case 1: return Op::sub;
    default: return Op::mul_mod;
  }
}

Difficulty pick_difficulty(const DifficultyMix& mix, RngStream& rng) {
  const double u = rng.next_double();
  if (u < mix.easy) return Difficulty::easy;
  if (u < mix.easy + mix.medium) return Difficulty::medium;
  return Difficulty::hard;
}

std::vector<TokenId> expression_tokens(const Vocab& vocab, const Question& q) {
  std::vector<TokenId> expr = render_int(vocab, q.a);
  switch (q.op) {
    case Op::add: expr.push_back(vocab.plus); break;
    case Op::sub: expr.push_back(vocab.minus); break;
    case Op::mul_mod: expr.push_back(vocab.times); break;
  }
  const std::vector<TokenId> rhs = render_int(vocab, q.b);
  expr.insert(expr.end(), rhs.begin(), rhs.end());
  if (q.op == Op::mul_mod) {
    expr.push_back(vocab.percent);
    const std::vector<TokenId> mod = render_int(vocab, q.modulus);
    expr.insert(expr.end(), mod.begin(), mod.end());
  }
  return expr;
}

}  // namespace

Question generate_question(const Vocab& vocab, std::uint64_t id_hint,
                           const DifficultyMix& mix, RngStream& rng) {
  vocab.check_task_symbols();
  Question q;
  q.id = id_hint;
  q.difficulty = pick_difficulty(mix, rng);
  q.op = pick_op(q.difficulty, rng);
  const Operands o = make_operands(q.difficulty, q.op, rng);
  q.a = o.a;
  q.b = o.b;
  q.modulus = o.modulus;
  q.answer = eval_op(q.op, o);
  q.expr = expression_tokens(vocab, q);
  q.prompt = render_prompt(vocab, q);
  return q;
}

std::vector<Question> generate_questions(const Vocab& vocab, int n,
                                         std::uint64_t seed,
                                         const DifficultyMix& mix) {
  if (n < 1) throw ConfigError("generate_questions: n must be >= 1");
  vocab.check_task_symbols();
  mix.validate();
  std::vector<Question> out;
  out.reserve(static_cast<std::size_t>(n));
  std::set<std::uint64_t> ids;
  for (int j = 0; j < n; ++j) {
    RngStream rng = RngStream::keyed(seed, RngPurpose::question_gen,
                                     static_cast<std::uint64_t>(j));
    std::uint64_t id = mix64(mix64(seed) ^ static_cast<std::uint64_t>(j + 1));
    while (!ids.insert(id).second) id = mix64(id);
    out.push_back(generate_question(vocab, id, mix, rng));
  }
  return out;
}

std::vector<TokenId> render_int(const Vocab& vocab, std::int64_t value) {
  std::vector<TokenId> out;
  std::uint64_t mag;
  if (value < 0) {
    out.push_back(vocab.minus);
    mag = static_cast<std::uint64_t>(-value);
  } else {
    mag = static_cast<std::uint64_t>(value);
  }
  TokenId digits[20];
  int n = 0;
  do {
    digits[n++] = vocab.digit[mag % 10];
    mag /= 10;
  } while (mag != 0);
  for (int i = n - 1; i >= 0; --i) out.push_back(digits[i]);
  return out;
}

std::vector<TokenId> render_prompt(const Vocab& vocab, const Question& q) {
  std::vector<TokenId> p = {vocab.system_cue,   vocab.think_open,
                            vocab.think_close,  vocab.answer_open,
                            vocab.answer_close, vocab.boxed,
                            vocab.user_cue};
  const std::vector<TokenId> expr =
      q.expr.empty() ? expression_tokens(vocab, q) : q.expr;
  p.insert(p.end(), expr.begin(), expr.end());
  p.push_back(vocab.assistant_cue);
  return p;
}

ParsedResponse parse_response(const Vocab& vocab,
                              std::span<const TokenId> tokens) {
  ParsedResponse r;
  r.length = static_cast<int>(tokens.size());
  const int n = r.length;
  int i = 0;

  if (i >= n || tokens[static_cast<std::size_t>(i)] != vocab.think_open) return r;
  ++i;
  const int think_begin = i;
  while (i < n && !vocab.is_structural(tokens[static_cast<std::size_t>(i)])) ++i;
  if (i >= n || tokens[static_cast<std::size_t>(i)] != vocab.think_close) return r;
  const int think_end = i;
  ++i;

  if (i >= n || tokens[static_cast<std::size_t>(i)] != vocab.answer_open) return r;
  ++i;
  const int answer_begin = i;
  if (i >= n || tokens[static_cast<std::size_t>(i)] != vocab.boxed) return r;
  ++i;

  bool negative = false;
  if (i < n && tokens[static_cast<std::size_t>(i)] == vocab.minus) {
    negative = true;
    ++i;
  }
  std::int64_t value = 0;
  int digit_count = 0;
  while (i < n) {
    const int d = vocab.digit_value(tokens[static_cast<std::size_t>(i)]);
    if (d < 0) break;
    if (++digit_count > 12) return r;  // caps the accumulator well below overflow
    value = value * 10 + d;
    ++i;
  }
  if (digit_count == 0) return r;

  if (i >= n || tokens[static_cast<std::size_t>(i)] != vocab.answer_close) return r;
  const int answer_end = i;
  ++i;
  if (i < n && tokens[static_cast<std::size_t>(i)] == vocab.eos) ++i;
  if (i != n) return r;

  r.well_formed = true;
  r.think_span = {think_begin, think_end};
  r.answer_span = {answer_begin, answer_end};
  r.boxed_value = negative ? -value : value;
  return r;
}

bool is_equivalent(const ParsedResponse& parsed, std::int64_t ground_truth) {
  return parsed.well_formed && parsed.boxed_value.has_value() &&
         *parsed.boxed_value == ground_truth;
}

int accuracy_reward(const ParsedResponse& parsed, std::int64_t ground_truth) {
  return is_equivalent(parsed, ground_truth) ? 1 : 0;
}

std::vector<TokenId> canonical_response(const Vocab& vocab, const Question& q,
                                        int copies, std::int64_t answer_value) {
  std::vector<TokenId> out;
  out.push_back(vocab.think_open);
  for (int c = 0; c < copies; ++c) {
    out.insert(out.end(), q.expr.begin(), q.expr.end());
  }
  out.push_back(vocab.think_close);
  out.push_back(vocab.answer_open);
  out.push_back(vocab.boxed);
  const std::vector<TokenId> digits = render_int(vocab, answer_value);
  out.insert(out.end(), digits.begin(), digits.end());
  out.push_back(vocab.answer_close);
  out.push_back(vocab.eos);
  return out;
}

std::int64_t sample_answer_value(const Question& q, RngStream& rng) {
  const Operands o = make_operands(q.difficulty, q.op, rng);
  return eval_op(q.op, o);
}

}  // namespace minigrpo
