#include "minigrpo/reward_shaping.hpp"

#include <algorithm>
#include <cmath>

#include "minigrpo/errors.hpp"

namespace minigrpo {

namespace {

void check_group(const std::vector<double>& rewards) {
  if (rewards.size() < 2) {
    throw ContractViolation("reward group must have size >= 2");
  }
  for (double r : rewards) {
    if (!std::isfinite(r)) throw InputError("non-finite reward in group");
  }
}

void check_binary(const std::vector<double>& rewards,
                  const std::vector<int>& lengths) {
  check_group(rewards);
  if (lengths.size() != rewards.size()) {
    throw ContractViolation("rewards/lengths size mismatch");
  }
  for (double r : rewards) {
    if (r != 0.0 && r != 1.0) {
      throw InputError("length shaping expects binary accuracy rewards");
    }
  }
}

bool all_correct(const std::vector<double>& rewards) {
  return std::all_of(rewards.begin(), rewards.end(),
                     [](double r) { return r == 1.0; });
}

}  // namespace

AdvantageVector group_advantages(const std::vector<double>& rewards) {
  check_group(rewards);
  const std::size_t g = rewards.size();
  double mean = 0.0;
  for (double r : rewards) mean += r;
  mean /= static_cast<double>(g);
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  var /= static_cast<double>(g);
  const double sd = std::sqrt(var);

  AdvantageVector out;
  out.a.assign(g, 0.0);
  if (sd < 1e-8) {
    out.degenerate = true;
    return out;
  }
  for (std::size_t i = 0; i < g; ++i) out.a[i] = (rewards[i] - mean) / sd;
  return out;
}

std::vector<double> lgrpo_shaped_rewards(const std::vector<double>& rewards,
                                         const std::vector<int>& lengths,
                                         int max_response_len, double lambda) {
  check_binary(rewards, lengths);
  for (int l : lengths) {
    if (l > max_response_len) {
      throw InputError("rollout length exceeds max_response_len");
    }
  }
  std::vector<double> shaped = rewards;
  if (!all_correct(rewards)) return shaped;
  for (std::size_t i = 0; i < shaped.size(); ++i) {
    shaped[i] += lambda * (1.0 - static_cast<double>(lengths[i]) /
                                     static_cast<double>(max_response_len));
  }
  return shaped;
}

std::vector<double> variant_minmax(const std::vector<double>& rewards,
                                   const std::vector<int>& lengths,
                                   double lambda) {
  check_binary(rewards, lengths);
  std::vector<double> shaped = rewards;
  if (!all_correct(rewards)) return shaped;
  const auto [lo_it, hi_it] = std::minmax_element(lengths.begin(), lengths.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  if (hi == lo) return shaped;  // degenerate range contributes nothing
  for (std::size_t i = 0; i < shaped.size(); ++i) {
    shaped[i] += lambda * (hi - static_cast<double>(lengths[i])) / (hi - lo);
  }
  return shaped;
}

std::vector<double> variant_groupshare(const std::vector<double>& rewards,
                                       const std::vector<int>& lengths) {
  check_binary(rewards, lengths);
  const std::size_t g = rewards.size();
  double correct = 0.0;
  double total_len = 0.0;
  for (std::size_t i = 0; i < g; ++i) {
    correct += rewards[i];
    total_len += static_cast<double>(lengths[i]);
  }
  std::vector<double> bonus(g, 0.0);
  double bonus_sum = 0.0;
  for (std::size_t i = 0; i < g; ++i) {
    if (rewards[i] == 0.0) {
      bonus[i] = total_len > 0.0
                     ? 1.0 - static_cast<double>(lengths[i]) / total_len
                     : 0.0;
      bonus_sum += bonus[i];
    }
  }
  std::vector<double> shaped(g, 0.0);
  const double shrink = correct > 0.0 ? (correct - 1.0) / correct : 0.0;
  for (std::size_t i = 0; i < g; ++i) {
    shaped[i] = shrink * rewards[i];
    if (bonus_sum > 0.0) shaped[i] += bonus[i] / bonus_sum;
  }
  return shaped;
}

}  // namespace minigrpo
