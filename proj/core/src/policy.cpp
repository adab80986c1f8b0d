#include "minigrpo/policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "minigrpo/errors.hpp"

namespace minigrpo {

double GradBuffer::l2_norm() const {
  double s = 0.0;
  for (double v : g) s += v * v;
  return std::sqrt(s);
}

bool GradBuffer::all_finite() const {
  for (double v : g) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void GradBuffer::add(const GradBuffer& other) {
  if (other.g.size() != g.size()) {
    throw ContractViolation("GradBuffer size mismatch in add");
  }
  for (std::size_t i = 0; i < g.size(); ++i) g[i] += other.g[i];
}

void GradBuffer::scale(double s) {
  for (double& v : g) v *= s;
}

Policy::Policy(Vocab vocab, int context_window, int embed_dim, int hidden_dim)
    : vocab_(std::move(vocab)), k_(context_window), e_(embed_dim), h_(hidden_dim) {
  if (k_ < 1 || e_ < 1 || h_ < 1) {
    throw ConfigError("policy dims must be positive: k=" + std::to_string(k_) +
                      " e=" + std::to_string(e_) + " h=" + std::to_string(h_));
  }
  const std::size_t v = static_cast<std::size_t>(vocab_.size());
  const std::size_t ke = static_cast<std::size_t>(k_) * static_cast<std::size_t>(e_);
  w_.assign(v * static_cast<std::size_t>(e_) + ke * static_cast<std::size_t>(h_) +
                static_cast<std::size_t>(h_) + static_cast<std::size_t>(h_) * v + v,
            0.0);
}

Policy Policy::init(Vocab vocab, int context_window, int embed_dim,
                    int hidden_dim, std::uint64_t seed) {
  Policy p(std::move(vocab), context_window, embed_dim, hidden_dim);
  RngStream rng = RngStream::keyed(seed, RngPurpose::weight_init);
  for (double& w : p.w_) {
    w = (rng.next_double() * 2.0 - 1.0) * 0.05;
  }
  return p;
}

std::size_t Policy::w1_offset() const {
  return static_cast<std::size_t>(vocab_.size()) * static_cast<std::size_t>(e_);
}
std::size_t Policy::b1_offset() const {
  return w1_offset() + static_cast<std::size_t>(k_) * static_cast<std::size_t>(e_) *
                           static_cast<std::size_t>(h_);
}
std::size_t Policy::w2_offset() const {
  return b1_offset() + static_cast<std::size_t>(h_);
}
std::size_t Policy::b2_offset() const {
  return w2_offset() + static_cast<std::size_t>(h_) * static_cast<std::size_t>(vocab_.size());
}

void Policy::check_context(const Context& ctx) const {
  if (static_cast<int>(ctx.size()) != k_) {
    throw InputError("context must hold exactly k=" + std::to_string(k_) +
                     " tokens, got " + std::to_string(ctx.size()));
  }
  for (TokenId t : ctx) {
    if (t < 0 || t >= vocab_.size()) {
      throw InputError("token id out of range in context: " + std::to_string(t));
    }
  }
}

void Policy::forward(const Context& ctx, Forward& f) const {
  check_context(ctx);
  const int v = vocab_.size();
  const int ke = k_ * e_;
  f.x.resize(static_cast<std::size_t>(ke));
  f.hidden.resize(static_cast<std::size_t>(h_));
  f.logits.resize(static_cast<std::size_t>(v));

  const double* emb = w_.data();
  for (int s = 0; s < k_; ++s) {
    const double* row = emb + static_cast<std::size_t>(ctx[static_cast<std::size_t>(s)]) *
                                  static_cast<std::size_t>(e_);
    std::copy(row, row + e_, f.x.data() + static_cast<std::size_t>(s) * e_);
  }

  const double* w1 = w_.data() + w1_offset();
  const double* b1 = w_.data() + b1_offset();
  for (int j = 0; j < h_; ++j) f.hidden[static_cast<std::size_t>(j)] = b1[j];
  for (int i = 0; i < ke; ++i) {
    const double xi = f.x[static_cast<std::size_t>(i)];
    if (xi == 0.0) continue;
    const double* row = w1 + static_cast<std::size_t>(i) * h_;
    for (int j = 0; j < h_; ++j) f.hidden[static_cast<std::size_t>(j)] += xi * row[j];
  }
  for (int j = 0; j < h_; ++j) {
    f.hidden[static_cast<std::size_t>(j)] = std::tanh(f.hidden[static_cast<std::size_t>(j)]);
  }

  const double* w2 = w_.data() + w2_offset();
  const double* b2 = w_.data() + b2_offset();
  for (int o = 0; o < v; ++o) f.logits[static_cast<std::size_t>(o)] = b2[o];
  for (int j = 0; j < h_; ++j) {
    const double aj = f.hidden[static_cast<std::size_t>(j)];
    const double* row = w2 + static_cast<std::size_t>(j) * v;
    for (int o = 0; o < v; ++o) f.logits[static_cast<std::size_t>(o)] += aj * row[o];
  }

  for (double l : f.logits) {
    if (!std::isfinite(l)) {
      std::ostringstream os;
      os << "non-finite logit; context:";
      for (TokenId t : ctx) os << ' ' << t;
      throw NumericalError(os.str());
    }
  }
}

void Policy::backward(const Context& ctx, const Forward& f,
                      std::span<const double> dlogits, GradBuffer& grad) const {
  const int v = vocab_.size();
  const int ke = k_ * e_;
  double* db2 = grad.g.data() + b2_offset();
  double* dw2 = grad.g.data() + w2_offset();
  const double* w2 = w_.data() + w2_offset();

  std::vector<double> da(static_cast<std::size_t>(h_), 0.0);
  for (int o = 0; o < v; ++o) db2[o] += dlogits[static_cast<std::size_t>(o)];
  for (int j = 0; j < h_; ++j) {
    const double aj = f.hidden[static_cast<std::size_t>(j)];
    double* dw2_row = dw2 + static_cast<std::size_t>(j) * v;
    const double* w2_row = w2 + static_cast<std::size_t>(j) * v;
    double acc = 0.0;
    for (int o = 0; o < v; ++o) {
      const double dl = dlogits[static_cast<std::size_t>(o)];
      dw2_row[o] += aj * dl;
      acc += w2_row[o] * dl;
    }
    da[static_cast<std::size_t>(j)] = acc;
  }

  std::vector<double> dz(static_cast<std::size_t>(h_));
  for (int j = 0; j < h_; ++j) {
    const double aj = f.hidden[static_cast<std::size_t>(j)];
    dz[static_cast<std::size_t>(j)] = da[static_cast<std::size_t>(j)] * (1.0 - aj * aj);
  }

  double* db1 = grad.g.data() + b1_offset();
  double* dw1 = grad.g.data() + w1_offset();
  const double* w1 = w_.data() + w1_offset();
  std::vector<double> dx(static_cast<std::size_t>(ke), 0.0);
  for (int j = 0; j < h_; ++j) db1[j] += dz[static_cast<std::size_t>(j)];
  for (int i = 0; i < ke; ++i) {
    const double xi = f.x[static_cast<std::size_t>(i)];
    double* dw1_row = dw1 + static_cast<std::size_t>(i) * h_;
    const double* w1_row = w1 + static_cast<std::size_t>(i) * h_;
    double acc = 0.0;
    for (int j = 0; j < h_; ++j) {
      const double dzj = dz[static_cast<std::size_t>(j)];
      dw1_row[j] += xi * dzj;
      acc += w1_row[j] * dzj;
    }
    dx[static_cast<std::size_t>(i)] = acc;
  }

  double* demb = grad.g.data();
  for (int s = 0; s < k_; ++s) {
    double* row = demb + static_cast<std::size_t>(ctx[static_cast<std::size_t>(s)]) *
                             static_cast<std::size_t>(e_);
    const double* dxs = dx.data() + static_cast<std::size_t>(s) * e_;
    for (int i = 0; i < e_; ++i) row[i] += dxs[i];
  }
}

std::vector<double> Policy::token_distribution(const Context& ctx,
                                               double temperature) const {
  if (!(temperature > 0.0)) {
    throw InputError("temperature must be positive");
  }
  Forward f;
  forward(ctx, f);
  const int v = vocab_.size();
  std::vector<double> p(static_cast<std::size_t>(v));
  double mx = -std::numeric_limits<double>::infinity();
  for (int o = 0; o < v; ++o) {
    p[static_cast<std::size_t>(o)] = f.logits[static_cast<std::size_t>(o)] / temperature;
    mx = std::max(mx, p[static_cast<std::size_t>(o)]);
  }
  double sum = 0.0;
  for (double& q : p) {
    q = std::exp(q - mx);
    sum += q;
  }
  for (double& q : p) q /= sum;
  return p;
}

std::vector<double> Policy::token_log_probs(const Context& ctx) const {
  Forward f;
  forward(ctx, f);
  const int v = vocab_.size();
  double mx = *std::max_element(f.logits.begin(), f.logits.end());
  double sum = 0.0;
  for (int o = 0; o < v; ++o) sum += std::exp(f.logits[static_cast<std::size_t>(o)] - mx);
  const double lse = mx + std::log(sum);
  std::vector<double> lp(static_cast<std::size_t>(v));
  for (int o = 0; o < v; ++o) lp[static_cast<std::size_t>(o)] = f.logits[static_cast<std::size_t>(o)] - lse;
  return lp;
}

double Policy::token_entropy(const Context& ctx) const {
  std::vector<double> lp = token_log_probs(ctx);
  double h = 0.0;
  for (double l : lp) h -= std::exp(l) * l;
  return std::max(0.0, h);
}

TokenId Policy::sample_token(const Context& ctx, double temperature,
                             double top_p, RngStream& rng) const {
  if (!(top_p > 0.0) || top_p > 1.0) {
    throw InputError("top_p must lie in (0, 1]");
  }
  std::vector<double> p = token_distribution(ctx, temperature);
  const int v = vocab_.size();

  std::vector<int> order(static_cast<std::size_t>(v));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const double pa = p[static_cast<std::size_t>(a)];
    const double pb = p[static_cast<std::size_t>(b)];
    if (pa != pb) return pa > pb;
    return a < b;  // stable tie order keeps sampling bit-reproducible
  });

  int keep = v;
  if (top_p < 1.0) {
    double cum = 0.0;
    for (int i = 0; i < v; ++i) {
      cum += p[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])];
      if (cum >= top_p - 1e-9) {
        keep = i + 1;
        break;
      }
    }
  }

  double mass = 0.0;
  for (int i = 0; i < keep; ++i) mass += p[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])];
  const double u = rng.next_double() * mass;
  double cum = 0.0;
  for (int i = 0; i < keep; ++i) {
    cum += p[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])];
    if (u < cum) return order[static_cast<std::size_t>(i)];
  }
  return order[static_cast<std::size_t>(keep - 1)];
}

SequenceLogProb Policy::sequence_log_prob(std::span<const TokenId> prompt,
                                          std::span<const TokenId> response) const {
  if (response.empty()) {
    throw InputError("sequence_log_prob: response must be non-empty");
  }
  for (TokenId t : response) {
    if (t < 0 || t >= vocab_.size()) {
      throw InputError("token id out of range in response: " + std::to_string(t));
    }
  }
  Context ctx = context_from(prompt);
  SequenceLogProb out;
  out.per_token.reserve(response.size());
  for (TokenId t : response) {
    const std::vector<double> lp = token_log_probs(ctx);
    const double l = lp[static_cast<std::size_t>(t)];
    out.per_token.push_back(l);
    out.total += l;
    push_context(ctx, t);
  }
  return out;
}

Context Policy::context_from(std::span<const TokenId> prefix) const {
  Context ctx(static_cast<std::size_t>(k_), vocab_.pad);
  const std::size_t n = std::min(prefix.size(), static_cast<std::size_t>(k_));
  std::copy(prefix.end() - static_cast<std::ptrdiff_t>(n), prefix.end(),
            ctx.end() - static_cast<std::ptrdiff_t>(n));
  return ctx;
}

void Policy::push_context(Context& ctx, TokenId next) {
  std::move(ctx.begin() + 1, ctx.end(), ctx.begin());
  ctx.back() = next;
}

GradBuffer weighted_logprob_grad(const Policy& policy,
                                 std::span<const WeightedItem> items) {
  GradBuffer grad(policy.param_count());
  Policy::Forward f;
  const int v = policy.vocab_size();
  std::vector<double> dlogits(static_cast<std::size_t>(v));
  for (const WeightedItem& item : items) {
    if (!std::isfinite(item.coeff)) {
      throw InputError("non-finite coefficient in weighted_logprob_grad");
    }
    if (item.token < 0 || item.token >= v) {
      throw InputError("token id out of range: " + std::to_string(item.token));
    }
    if (item.coeff == 0.0) continue;
    policy.forward(item.ctx, f);
    double mx = *std::max_element(f.logits.begin(), f.logits.end());
    double sum = 0.0;
    for (int o = 0; o < v; ++o) sum += std::exp(f.logits[static_cast<std::size_t>(o)] - mx);
    // d/dlogits of coeff*log softmax[token] = coeff*(onehot - p)
    for (int o = 0; o < v; ++o) {
      const double p = std::exp(f.logits[static_cast<std::size_t>(o)] - mx) / sum;
      dlogits[static_cast<std::size_t>(o)] = -item.coeff * p;
    }
    dlogits[static_cast<std::size_t>(item.token)] += item.coeff;
    policy.backward(item.ctx, f, dlogits, grad);
  }
  return grad;
}

GradBuffer entropy_grad(const Policy& policy, std::span<const Context> ctxs,
                        double coeff) {
  GradBuffer grad(policy.param_count());
  if (ctxs.empty() || coeff == 0.0) return grad;
  const double cf = coeff / static_cast<double>(ctxs.size());
  Policy::Forward f;
  const int v = policy.vocab_size();
  std::vector<double> dlogits(static_cast<std::size_t>(v));
  for (const Context& ctx : ctxs) {
    policy.forward(ctx, f);
    double mx = *std::max_element(f.logits.begin(), f.logits.end());
    double sum = 0.0;
    for (int o = 0; o < v; ++o) sum += std::exp(f.logits[static_cast<std::size_t>(o)] - mx);
    const double lse = mx + std::log(sum);
    double entropy = 0.0;
    for (int o = 0; o < v; ++o) {
      const double lp = f.logits[static_cast<std::size_t>(o)] - lse;
      entropy -= std::exp(lp) * lp;
    }
    // dH/dlogit_j = -p_j (log p_j + H)
    for (int o = 0; o < v; ++o) {
      const double lp = f.logits[static_cast<std::size_t>(o)] - lse;
      dlogits[static_cast<std::size_t>(o)] = -cf * std::exp(lp) * (lp + entropy);
    }
    policy.backward(ctx, f, dlogits, grad);
  }
  return grad;
}

}  // namespace minigrpo
