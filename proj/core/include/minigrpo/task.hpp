#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "minigrpo/rng.hpp"
#include "minigrpo/vocab.hpp"

namespace minigrpo {

enum class Op { add, sub, mul_mod };
enum class Difficulty { easy, medium, hard };

std::string op_name(Op op);
std::string difficulty_name(Difficulty d);
std::optional<Op> op_from_name(const std::string& s);
std::optional<Difficulty> difficulty_from_name(const std::string& s);

// One synthetic verifiable question. The expression is rendered into the
// prompt token-by-token; mul questions carry their modulus explicitly so the
// task stays well posed.
struct Question {
  std::uint64_t id = 0;
  std::int64_t a = 0;
  std::int64_t b = 0;
  Op op = Op::add;
  std::int64_t modulus = 0;  // only meaningful for mul_mod
  std::int64_t answer = 0;
  Difficulty difficulty = Difficulty::easy;
  std::vector<TokenId> prompt;
  std::vector<TokenId> expr;  // the "a op b [% m]" token span inside the prompt
};

struct DifficultyMix {
  double easy = 1.0;
  double medium = 0.0;
  double hard = 0.0;
  void validate() const;
};

// Index ranges are half-open over response token positions.
struct Span {
  int begin = 0;
  int end = 0;
  int size() const { return end - begin; }
  bool empty() const { return begin >= end; }
};

struct ParsedResponse {
  bool well_formed = false;
  Span think_span;
  Span answer_span;
  std::optional<std::int64_t> boxed_value;
  int length = 0;  // generated tokens including <eos>, excluding the prompt
};

// Deterministic question generation. Operand bands by difficulty:
// easy a,b in [0,9]; medium a,b in [10,49]; hard a,b in [100,999].
// Every ground truth lands in [-9, 99] so a correct answer always fits a
// response of at most 8 generated tokens. That forces two band-specific
// rules: medium/hard sub keeps a >= b (hard additionally keeps a-b <= 99),
// and hard drops plain add (no 3-digit-operand sum fits two digits).
std::vector<Question> generate_questions(const Vocab& vocab, int n,
                                         std::uint64_t seed,
                                         const DifficultyMix& mix);

// Single question draw, used by streaming training.
Question generate_question(const Vocab& vocab, std::uint64_t id_hint,
                           const DifficultyMix& mix, RngStream& rng);

// Decimal rendering: optional '-', then digits with no leading zeros.
std::vector<TokenId> render_int(const Vocab& vocab, std::int64_t value);

// Prompt template, desk-scale: system cue, the four tag tokens plus `boxed`
// as the format instruction, user cue, the expression, assistant cue.
std::vector<TokenId> render_prompt(const Vocab& vocab, const Question& q);

// Total single-pass parse; malformed input yields well_formed=false, never an
// exception. Accepted shape:
//   <think> (non-structural tokens) </think> <answer> boxed [-] digit+ </answer> [<eos>]
ParsedResponse parse_response(const Vocab& vocab,
                              std::span<const TokenId> tokens);

// True iff well formed and the boxed integer equals the ground truth
// (leading zeros and "-0" normalize away via numeric comparison).
bool is_equivalent(const ParsedResponse& parsed, std::int64_t ground_truth);

// Rule-based binary accuracy.
int accuracy_reward(const ParsedResponse& parsed, std::int64_t ground_truth);

// Reference response: <think> with `copies` repetitions of the expression,
// then the boxed answer tokens. The shortest (copies=0) is 6+digits tokens.
std::vector<TokenId> canonical_response(const Vocab& vocab, const Question& q,
                                        int copies, std::int64_t answer_value);

// Random value from the same answer distribution as `q`'s op/band; used by
// the supervised warm-start so the template is imprinted without leaking the
// true answers.
std::int64_t sample_answer_value(const Question& q, RngStream& rng);

}  // namespace minigrpo
