#include "minigrpo/vocab.hpp"

#include <set>

#include "minigrpo/errors.hpp"

namespace minigrpo {

Vocab Vocab::from_tokens(std::vector<std::string> names) {
  Vocab v;
  v.tokens = std::move(names);
  if (v.tokens.size() < 8) {
    throw ConfigError("vocab needs at least 8 tokens, got " +
                      std::to_string(v.tokens.size()));
  }
  std::set<std::string> seen;
  for (const auto& t : v.tokens) {
    if (!seen.insert(t).second) {
      throw ConfigError("duplicate vocab token: '" + t + "'");
    }
  }

  auto require = [&](std::string_view name) -> TokenId {
    TokenId id = v.id_of(name);
    if (id < 0) {
      throw ConfigError("vocab is missing required token '" +
                        std::string(name) + "'");
    }
    return id;
  };

  // The policy layer needs only padding and end-of-sequence; the remaining
  // task symbols are cached when present and checked by the task module.
  v.pad = require("<pad>");
  v.eos = require("<eos>");
  v.think_open = v.id_of("<think>");
  v.think_close = v.id_of("</think>");
  v.answer_open = v.id_of("<answer>");
  v.answer_close = v.id_of("</answer>");
  v.boxed = v.id_of("boxed");
  for (int d = 0; d < 10; ++d) {
    v.digit[static_cast<std::size_t>(d)] = v.id_of(std::string(1, char('0' + d)));
  }
  v.plus = v.id_of("+");
  v.minus = v.id_of("-");
  v.times = v.id_of("*");
  v.percent = v.id_of("%");
  v.system_cue = v.id_of("system");
  v.user_cue = v.id_of("user");
  v.assistant_cue = v.id_of("assistant");
  return v;
}

void Vocab::check_task_symbols() const {
  std::vector<std::string> missing;
  auto need = [&](TokenId id, const char* name) {
    if (id < 0) missing.push_back(name);
  };
  need(think_open, "<think>");
  need(think_close, "</think>");
  need(answer_open, "<answer>");
  need(answer_close, "</answer>");
  need(boxed, "boxed");
  for (int d = 0; d < 10; ++d) {
    if (digit[static_cast<std::size_t>(d)] < 0) {
      missing.push_back(std::string(1, char('0' + d)));
    }
  }
  need(plus, "+");
  need(minus, "-");
  need(times, "*");
  need(percent, "%");
  need(system_cue, "system");
  need(user_cue, "user");
  need(assistant_cue, "assistant");
  if (!missing.empty()) {
    std::string what = "vocab is missing task symbols:";
    for (const std::string& m : missing) what += " '" + m + "'";
    throw ConfigError(what);
  }
}

Vocab Vocab::standard() {
  std::vector<std::string> names = {
      "<pad>", "<eos>", "<think>", "</think>", "<answer>", "</answer>",
      "boxed", "0", "1", "2", "3", "4", "5", "6", "7", "8", "9",
      "+", "-", "*", "%", "system", "user", "assistant"};
  return from_tokens(std::move(names));
}

TokenId Vocab::id_of(std::string_view name) const {
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i] == name) return static_cast<TokenId>(i);
  }
  return -1;
}

const std::string& Vocab::name(TokenId id) const {
  if (id < 0 || id >= size()) {
    throw InputError("token id out of range: " + std::to_string(id));
  }
  return tokens[static_cast<std::size_t>(id)];
}

bool Vocab::is_digit(TokenId id) const { return digit_value(id) >= 0; }

int Vocab::digit_value(TokenId id) const {
  for (int d = 0; d < 10; ++d) {
    if (digit[static_cast<std::size_t>(d)] == id) return d;
  }
  return -1;
}

bool Vocab::is_structural(TokenId id) const {
  return id == pad || id == eos || id == think_open || id == think_close ||
         id == answer_open || id == answer_close || id == boxed;
}

}  // namespace minigrpo
