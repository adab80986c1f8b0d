#include "minigrpo/adam.hpp"

#include <cmath>

#include "minigrpo/errors.hpp"

namespace minigrpo {

void adam_step(Policy& policy, const GradBuffer& grad, AdamState& state,
               double lr) {
  const std::size_t n = policy.param_count();
  if (grad.size() != n) {
    throw ContractViolation("gradient size does not match param count");
  }
  if (state.m.size() != n || state.v.size() != n) {
    throw ContractViolation("Adam state size does not match param count");
  }
  if (!grad.all_finite()) {
    throw NumericalError("non-finite gradient; Adam step aborted");
  }

  state.t += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  std::vector<double>& w = policy.weights();
  for (std::size_t i = 0; i < n; ++i) {
    const double g = grad.g[i];
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g;
    const double mhat = state.m[i] / bc1;
    const double vhat = state.v[i] / bc2;
    w[i] += lr * mhat / (std::sqrt(vhat) + state.eps);
  }
}

}  // namespace minigrpo
