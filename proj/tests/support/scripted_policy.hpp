#pragma once

#include <cmath>
#include <map>
#include <utility>
#include <vector>

#include "minigrpo/policy.hpp"
#include "minigrpo/vocab.hpp"

namespace testsupport {

// Policy whose next-token logits depend only on the previous token via an
// explicit table. Construction: one-hot embeddings feed one hidden unit per
// token through the identity block of W1, so the active unit is exactly
// tanh(1) and an output row per previous-token realizes
// `scale * relative_logit` (up to ~1e-12). Previous tokens without a rule
// give uniform logits. Weight magnitudes stay O(scale), so the policy also
// survives optimizer steps in training tests.
inline minigrpo::Policy scripted_policy(
    const minigrpo::Vocab& vocab, int k,
    const std::map<minigrpo::TokenId,
                   std::vector<std::pair<minigrpo::TokenId, double>>>& rules,
    double scale = 40.0) {
  const int v = vocab.size();
  minigrpo::Policy policy(vocab, k, /*embed_dim=*/v, /*hidden_dim=*/v);
  std::vector<double>& w = policy.weights();

  const double s = 1.0;
  for (int t = 0; t < v; ++t) {
    w[policy.emb_offset() + static_cast<std::size_t>(t) * v + t] = s;
  }
  // Only the newest context slot feeds the hidden layer.
  const int last_slot = k - 1;
  for (int u = 0; u < v; ++u) {
    const std::size_t input_index =
        static_cast<std::size_t>(last_slot) * v + static_cast<std::size_t>(u);
    w[policy.w1_offset() + input_index * static_cast<std::size_t>(v) +
      static_cast<std::size_t>(u)] = 1.0;
  }
  const double gain = 1.0 / std::tanh(s);  // active unit is tanh(1)
  for (const auto& [prev, nexts] : rules) {
    for (const auto& [next, logit] : nexts) {
      w[policy.w2_offset() + static_cast<std::size_t>(prev) * v +
        static_cast<std::size_t>(next)] = scale * logit * gain;
    }
  }
  return policy;
}

// Deterministic-chain convenience: prev -> next with unit logit.
inline minigrpo::Policy chain_policy(
    const minigrpo::Vocab& vocab, int k,
    const std::vector<std::pair<minigrpo::TokenId, minigrpo::TokenId>>& chain,
    double scale = 40.0) {
  std::map<minigrpo::TokenId,
           std::vector<std::pair<minigrpo::TokenId, double>>>
      rules;
  for (const auto& [prev, next] : chain) rules[prev].push_back({next, 1.0});
  return scripted_policy(vocab, k, rules, scale);
}

}  // namespace testsupport
