#pragma once

#include <stdexcept>
#include <string>

namespace minigrpo {

// Invalid run configuration (CLI maps this to exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed data handed to an operation: out-of-range token ids, bad files,
// bad corpus lines.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite values where finite math was expected.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A caller broke a documented precondition between modules (a bug, not bad input).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Batch filling ran out of attempts before collecting enough groups
// (CLI maps this to exit code 3).
class BatchStarvation : public std::runtime_error {
 public:
  BatchStarvation(const std::string& what, int collected, int discarded)
      : std::runtime_error(what), collected_(collected), discarded_(discarded) {}
  int collected() const noexcept { return collected_; }
  int discarded() const noexcept { return discarded_; }

 private:
  int collected_;
  int discarded_;
};

}  // namespace minigrpo
