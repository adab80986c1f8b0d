#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace minigrpo {

using TokenId = std::int32_t;

// Token table for the toy task language. Tags are single tokens, not
// character sequences; digits are individual tokens "0".."9".
struct Vocab {
  std::vector<std::string> tokens;

  // Cached ids of the required symbols.
  TokenId pad = -1;
  TokenId eos = -1;
  TokenId think_open = -1;
  TokenId think_close = -1;
  TokenId answer_open = -1;
  TokenId answer_close = -1;
  TokenId boxed = -1;
  std::array<TokenId, 10> digit{};
  TokenId plus = -1;
  TokenId minus = -1;
  TokenId times = -1;
  TokenId percent = -1;
  TokenId system_cue = -1;
  TokenId user_cue = -1;
  TokenId assistant_cue = -1;

  // Builds from a token list; validates distinctness, size >= 8 and the
  // presence of <pad> and <eos>. Throws ConfigError otherwise.
  static Vocab from_tokens(std::vector<std::string> names);

  // Task entry points call this; the policy itself never needs the tags.
  void check_task_symbols() const;

  // The 24-token default used by the desk presets.
  static Vocab standard();

  int size() const { return static_cast<int>(tokens.size()); }

  // -1 when absent.
  TokenId id_of(std::string_view name) const;

  const std::string& name(TokenId id) const;

  bool is_digit(TokenId id) const;
  // Digit value for a digit token, -1 otherwise.
  int digit_value(TokenId id) const;
  // True for structural tokens that may not appear inside tag spans.
  bool is_structural(TokenId id) const;
};

}  // namespace minigrpo
