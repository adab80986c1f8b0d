#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "minigrpo/rng.hpp"
#include "minigrpo/vocab.hpp"

namespace minigrpo {

// Flat gradient over the policy's parameter vector. Accumulation order is the
// caller's responsibility; the engine always reduces in item-index order so
// results are bit-reproducible.
struct GradBuffer {
  std::vector<double> g;

  GradBuffer() = default;
  explicit GradBuffer(std::size_t n) : g(n, 0.0) {}

  std::size_t size() const { return g.size(); }
  double l2_norm() const;
  bool all_finite() const;
  void add(const GradBuffer& other);
  void scale(double s);
};

// Conditioning window: exactly k token ids, left-padded with <pad>.
using Context = std::vector<TokenId>;

struct SequenceLogProb {
  double total = 0.0;
  std::vector<double> per_token;
};

// Fixed-window autoregressive categorical model: the last k tokens are
// embedded, concatenated, passed through one tanh layer, and mapped linearly
// to vocabulary logits. Small enough for exact reverse-mode gradients with no
// framework, expressive enough to learn the synthetic tasks.
//
// Weight layout (flat, in order): embedding V*e | W1 (k*e)*h | b1 h |
// W2 h*V | b2 V.
class Policy {
 public:
  Policy(Vocab vocab, int context_window, int embed_dim, int hidden_dim);

  // Weights i.i.d. uniform in [-0.05, 0.05] from a counter-based stream, so
  // the same (vocab, dims, seed) always yields bit-identical parameters.
  static Policy init(Vocab vocab, int context_window, int embed_dim,
                     int hidden_dim, std::uint64_t seed);

  const Vocab& vocab() const { return vocab_; }
  int context_window() const { return k_; }
  int embed_dim() const { return e_; }
  int hidden_dim() const { return h_; }
  int vocab_size() const { return vocab_.size(); }
  std::size_t param_count() const { return w_.size(); }

  std::vector<double>& weights() { return w_; }
  const std::vector<double>& weights() const { return w_; }

  // Softmax of logits/temperature. Entries are positive and sum to 1.
  std::vector<double> token_distribution(const Context& ctx,
                                         double temperature) const;

  // Log-softmax at temperature 1 (objectives are defined on the model
  // distribution; temperature and top-p shape sampling only).
  std::vector<double> token_log_probs(const Context& ctx) const;

  double token_entropy(const Context& ctx) const;

  // Nucleus sampling: keep the smallest probability-descending prefix with
  // cumulative mass >= top_p, renormalize, draw.
  TokenId sample_token(const Context& ctx, double temperature, double top_p,
                       RngStream& rng) const;

  SequenceLogProb sequence_log_prob(std::span<const TokenId> prompt,
                                    std::span<const TokenId> response) const;

  // Last k tokens of `prefix`, left-padded with <pad>.
  Context context_from(std::span<const TokenId> prefix) const;
  // In-place shift: drop the oldest token, append `next`.
  static void push_context(Context& ctx, TokenId next);

  // Weight block offsets, exposed for the optimizer and tests.
  std::size_t emb_offset() const { return 0; }
  std::size_t w1_offset() const;
  std::size_t b1_offset() const;
  std::size_t w2_offset() const;
  std::size_t b2_offset() const;

 private:
  friend GradBuffer weighted_logprob_grad(const Policy&,
                                          std::span<const struct WeightedItem>);
  friend GradBuffer entropy_grad(const Policy&, std::span<const Context>,
                                 double);

  struct Forward {
    std::vector<double> x;       // k*e concatenated embeddings
    std::vector<double> hidden;  // tanh activations, h
    std::vector<double> logits;  // V
  };
  void forward(const Context& ctx, Forward& f) const;
  void backward(const Context& ctx, const Forward& f,
                std::span<const double> dlogits, GradBuffer& grad) const;
  void check_context(const Context& ctx) const;

  Vocab vocab_;
  int k_;
  int e_;
  int h_;
  std::vector<double> w_;
};

// One term of a weighted log-likelihood: coeff * log pi(token | ctx).
struct WeightedItem {
  Context ctx;
  TokenId token = -1;
  double coeff = 0.0;
};

// Exact gradient of sum_i coeff_i * log pi(token_i | ctx_i); linear in the
// coefficients. Items are reduced in order.
GradBuffer weighted_logprob_grad(const Policy& policy,
                                 std::span<const WeightedItem> items);

// Exact gradient of coeff * mean over ctxs of token entropy.
GradBuffer entropy_grad(const Policy& policy, std::span<const Context> ctxs,
                        double coeff);

}  // namespace minigrpo
