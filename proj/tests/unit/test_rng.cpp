#include <doctest.h>

#include <set>

#include "minigrpo/rng.hpp"

using namespace minigrpo;

TEST_CASE("rng: identical keys reproduce identical streams") {
  RngStream a = RngStream::keyed(42, RngPurpose::rollout, 1, 2, 3);
  RngStream b = RngStream::keyed(42, RngPurpose::rollout, 1, 2, 3);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("rng: every key field matters") {
  const std::uint64_t base = RngStream::keyed(1, RngPurpose::rollout, 1, 2, 3).next_u64();
  CHECK(base != RngStream::keyed(2, RngPurpose::rollout, 1, 2, 3).next_u64());
  CHECK(base != RngStream::keyed(1, RngPurpose::evaluation, 1, 2, 3).next_u64());
  CHECK(base != RngStream::keyed(1, RngPurpose::rollout, 9, 2, 3).next_u64());
  CHECK(base != RngStream::keyed(1, RngPurpose::rollout, 1, 9, 3).next_u64());
  CHECK(base != RngStream::keyed(1, RngPurpose::rollout, 1, 2, 9).next_u64());
  // swapped fields must not collide
  CHECK(RngStream::keyed(1, RngPurpose::rollout, 2, 1, 0).next_u64() !=
        RngStream::keyed(1, RngPurpose::rollout, 1, 2, 0).next_u64());
}

TEST_CASE("rng: next_double in [0,1) and roughly uniform") {
  RngStream rng = RngStream::keyed(7, RngPurpose::weight_init);
  const int n = 100000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.next_double();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  CHECK(sum / n == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("rng: next_below stays in range and hits all buckets") {
  RngStream rng = RngStream::keyed(9, RngPurpose::weight_init);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 2000; ++i) {
    const std::uint64_t v = rng.next_below(7);
    REQUIRE(v < 7);
    seen.insert(v);
  }
  CHECK(seen.size() == 7);
}
