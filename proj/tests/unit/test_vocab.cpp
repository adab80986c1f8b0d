#include <doctest.h>

#include "minigrpo/errors.hpp"
#include "minigrpo/vocab.hpp"

using namespace minigrpo;

TEST_CASE("vocab: standard table carries every task symbol") {
  const Vocab v = Vocab::standard();
  CHECK(v.size() == 24);
  CHECK_NOTHROW(v.check_task_symbols());
  CHECK(v.pad >= 0);
  CHECK(v.eos >= 0);
  CHECK(v.digit_value(v.digit[7]) == 7);
  CHECK(v.is_structural(v.boxed));
  CHECK(!v.is_structural(v.digit[3]));
  CHECK(v.name(v.think_open) == "<think>");
}

TEST_CASE("vocab: validation") {
  CHECK_THROWS_AS(Vocab::from_tokens({"<pad>", "<eos>", "a"}), ConfigError);
  CHECK_THROWS_AS(
      Vocab::from_tokens({"<pad>", "<eos>", "a", "a", "b", "c", "d", "e"}),
      ConfigError);
  CHECK_THROWS_AS(
      Vocab::from_tokens({"x", "y", "a", "b", "c", "d", "e", "f"}),
      ConfigError);
  const Vocab tiny =
      Vocab::from_tokens({"<pad>", "<eos>", "a", "b", "c", "d", "e", "f"});
  CHECK(tiny.size() == 8);
  CHECK_THROWS_AS(tiny.check_task_symbols(), ConfigError);
  CHECK(tiny.id_of("nope") == -1);
  CHECK_THROWS_AS(tiny.name(99), InputError);
}
