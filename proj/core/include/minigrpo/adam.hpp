#pragma once

#include <cstdint>
#include <vector>

#include "minigrpo/policy.hpp"

namespace minigrpo {

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::int64_t t = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  AdamState() = default;
  explicit AdamState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}
};

// Bias-corrected Adam, ascent direction (the objectives are maximized; there
// is no separate loss sign anywhere else). A non-finite gradient aborts the
// step with the state untouched.
void adam_step(Policy& policy, const GradBuffer& grad, AdamState& state,
               double lr);

}  // namespace minigrpo
