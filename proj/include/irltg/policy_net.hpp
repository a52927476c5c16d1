#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "irltg/lstm.hpp"
#include "irltg/mat.hpp"
#include "irltg/parallel.hpp"
#include "irltg/rng.hpp"

namespace irltg {

// Reserved token ids. Content tokens start at 2.
constexpr int kBos = 0;
constexpr int kEos = 1;
constexpr int kReservedTokens = 2;

// fixed_length: every step is drawn from the content vocabulary only
// (BOS/EOS masked out); sequences have an exact length.
// eos_terminated: EOS is a legal action that ends the sequence; BOS stays
// masked everywhere.
enum class SeqMode { fixed_length, eos_terminated };

inline bool token_allowed(int token, SeqMode mode) {
  if (mode == SeqMode::fixed_length) return token >= kReservedTokens;
  return token != kBos;
}

// Generator policy: embedding + single-layer LSTM + affine projection.
struct GeneratorParams {
  int v_total = 0;
  int d_emb = 0;
  int d_hid = 0;
  Mat embed;        // v_total x d_emb
  LstmParams lstm;  // input dim d_emb
  Mat out_w;        // d_hid x v_total
  Mat out_b;        // 1 x v_total

  GeneratorParams() = default;
  GeneratorParams(int v, int de, int dh)
      : v_total(v), d_emb(de), d_hid(dh), embed(v, de), lstm(de, dh), out_w(dh, v), out_b(1, v) {
    if (v < kReservedTokens + 1 || de < 1 || dh < 1)
      throw ArgumentError("GeneratorParams: dims too small");
  }

  // Uniform(-0.08, 0.08) everywhere, then +1 on the forget-gate bias.
  static GeneratorParams init(int v, int de, int dh, RngStream rng, double scale = 0.08) {
    GeneratorParams p(v, de, dh);
    for (double& x : p.embed.data) x = rng.uniform(-scale, scale);
    lstm_init_uniform(p.lstm, rng, scale, 1.0);
    for (double& x : p.out_w.data) x = rng.uniform(-scale, scale);
    for (double& x : p.out_b.data) x = rng.uniform(-scale, scale);
    return p;
  }

  ParamStore to_store() const {
    ParamStore s;
    s.emplace("embed", embed);
    s.emplace("lstm_w_i", lstm.w_i);
    s.emplace("lstm_w_f", lstm.w_f);
    s.emplace("lstm_w_o", lstm.w_o);
    s.emplace("lstm_w_c", lstm.w_c);
    s.emplace("lstm_b_i", lstm.b_i);
    s.emplace("lstm_b_f", lstm.b_f);
    s.emplace("lstm_b_o", lstm.b_o);
    s.emplace("lstm_b_c", lstm.b_c);
    s.emplace("out_w", out_w);
    s.emplace("out_b", out_b);
    return s;
  }

  static GeneratorParams from_store(int v, int de, int dh, const ParamStore& s) {
    GeneratorParams p(v, de, dh);
    auto take = [&s](const std::string& name, Mat& dst) {
      auto it = s.find(name);
      if (it == s.end() || !it->second.same_shape(dst))
        throw ArgumentError("GeneratorParams::from_store: missing or mismatched " + name);
      dst = it->second;
    };
    take("embed", p.embed);
    take("lstm_w_i", p.lstm.w_i);
    take("lstm_w_f", p.lstm.w_f);
    take("lstm_w_o", p.lstm.w_o);
    take("lstm_w_c", p.lstm.w_c);
    take("lstm_b_i", p.lstm.b_i);
    take("lstm_b_f", p.lstm.b_f);
    take("lstm_b_o", p.lstm.b_o);
    take("lstm_b_c", p.lstm.b_c);
    take("out_w", p.out_w);
    take("out_b", p.out_b);
    return p;
  }
};

// Gradient accumulator shaped like GeneratorParams.
struct GeneratorGrads {
  Mat embed;
  LstmGrads lstm;
  Mat out_w;
  Mat out_b;

  GeneratorGrads() = default;
  GeneratorGrads(int v, int de, int dh)
      : embed(v, de), lstm(de, dh), out_w(dh, v), out_b(1, v) {}

  ParamStore to_store() && {
    ParamStore s;
    s.emplace("embed", std::move(embed));
    s.emplace("lstm_w_i", std::move(lstm.w_i));
    s.emplace("lstm_w_f", std::move(lstm.w_f));
    s.emplace("lstm_w_o", std::move(lstm.w_o));
    s.emplace("lstm_w_c", std::move(lstm.w_c));
    s.emplace("lstm_b_i", std::move(lstm.b_i));
    s.emplace("lstm_b_f", std::move(lstm.b_f));
    s.emplace("lstm_b_o", std::move(lstm.b_o));
    s.emplace("lstm_b_c", std::move(lstm.b_c));
    s.emplace("out_w", std::move(out_w));
    s.emplace("out_b", std::move(out_b));
    return s;
  }

  void add_scaled(const GeneratorGrads& o, double s) {
    auto axpy = [s](Mat& dst, const Mat& src) {
      for (size_t i = 0; i < dst.data.size(); ++i) dst.data[i] += s * src.data[i];
    };
    axpy(embed, o.embed);
    axpy(lstm.w_i, o.lstm.w_i);
    axpy(lstm.w_f, o.lstm.w_f);
    axpy(lstm.w_o, o.lstm.w_o);
    axpy(lstm.w_c, o.lstm.w_c);
    axpy(lstm.b_i, o.lstm.b_i);
    axpy(lstm.b_f, o.lstm.b_f);
    axpy(lstm.b_o, o.lstm.b_o);
    axpy(lstm.b_c, o.lstm.b_c);
    axpy(out_w, o.out_w);
    axpy(out_b, o.out_b);
  }
};

// A generated sequence with the log-probability of each step under the
// distribution it was actually sampled from.
struct Trajectory {
  std::vector<int> tokens;
  std::vector<double> step_logps;

  size_t length() const { return tokens.size(); }

  double total_logp() const {
    double s = 0.0;
    for (double v : step_logps) s += v;
    return s;
  }
};

// Stable softmax with max subtraction. Rejects non-finite input; masking is
// handled separately by masked_log_softmax.
inline std::vector<double> softmax(const std::vector<double>& logits) {
  if (logits.empty()) throw ArgumentError("softmax: empty input");
  double mx = logits[0];
  for (double v : logits) {
    if (!std::isfinite(v)) throw NumericError("softmax: non-finite input");
    if (v > mx) mx = v;
  }
  std::vector<double> p(logits.size());
  double sum = 0.0;
  for (size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - mx);
    sum += p[i];
  }
  for (double& v : p) v /= sum;
  return p;
}

// Log-probabilities of the mode-masked next-token distribution. Masked
// entries come back as -inf.
inline std::vector<double> masked_log_softmax(const std::vector<double>& logits, SeqMode mode) {
  const double ninf = -std::numeric_limits<double>::infinity();
  double mx = ninf;
  for (size_t i = 0; i < logits.size(); ++i) {
    if (!std::isfinite(logits[i])) throw NumericError("masked_log_softmax: non-finite logit");
    if (token_allowed(static_cast<int>(i), mode) && logits[i] > mx) mx = logits[i];
  }
  double sum = 0.0;
  for (size_t i = 0; i < logits.size(); ++i)
    if (token_allowed(static_cast<int>(i), mode)) sum += std::exp(logits[i] - mx);
  const double lse = mx + std::log(sum);
  std::vector<double> lp(logits.size(), ninf);
  for (size_t i = 0; i < logits.size(); ++i)
    if (token_allowed(static_cast<int>(i), mode)) lp[i] = logits[i] - lse;
  return lp;
}

// One policy step: consumes prev_token, advances the LSTM state, returns raw
// (unmasked) logits over the full vocabulary.
inline std::vector<double> forward_step(const GeneratorParams& p, LstmState& state,
                                        int prev_token, LstmStepCache* cache = nullptr) {
  if (prev_token < 0 || prev_token >= p.v_total)
    throw ArgumentError("forward_step: token out of range");
  lstm_step(p.lstm, p.embed.row_ptr(prev_token), state, cache);
  std::vector<double> logits(p.out_b.data);
  addmul_vec_mat(state.hidden.data(), p.out_w, logits.data());
  return logits;
}

// Samples a trajectory from BOS and a zero state. fixed_length emits exactly
// max_len content tokens; eos_terminated stops after EOS or max_len tokens.
inline Trajectory sample_trajectory(const GeneratorParams& p, int max_len, SeqMode mode,
                                    RngStream rng) {
  if (max_len < 1) throw ArgumentError("sample_trajectory: max_len must be >= 1");
  Trajectory traj;
  traj.tokens.reserve(max_len);
  traj.step_logps.reserve(max_len);
  LstmState state(p.d_hid);
  int prev = kBos;
  for (int t = 0; t < max_len; ++t) {
    const auto logits = forward_step(p, state, prev);
    const auto logp = masked_log_softmax(logits, mode);
    std::vector<double> probs(logp.size(), 0.0);
    for (size_t i = 0; i < logp.size(); ++i)
      if (logp[i] > -std::numeric_limits<double>::infinity()) probs[i] = std::exp(logp[i]);
    const int a = rng.categorical(probs);
    traj.tokens.push_back(a);
    traj.step_logps.push_back(logp[a]);
    if (mode == SeqMode::eos_terminated && a == kEos) break;
    prev = a;
  }
  return traj;
}

inline void validate_tokens(const GeneratorParams& p, const std::vector<int>& tokens,
                            SeqMode mode) {
  for (size_t t = 0; t < tokens.size(); ++t) {
    const int tok = tokens[t];
    if (tok < 0 || tok >= p.v_total) throw ArgumentError("token id out of range");
    if (!token_allowed(tok, mode)) throw ArgumentError("reserved token not allowed in this mode");
    if (mode == SeqMode::eos_terminated && tok == kEos && t + 1 != tokens.size())
      throw ArgumentError("EOS before the final position");
  }
}

struct LogProbResult {
  double total = 0.0;
  std::vector<double> per_step;
};

// Exact log q_theta of a token sequence under the mode-masked policy.
inline LogProbResult log_prob(const GeneratorParams& p, const std::vector<int>& tokens,
                              SeqMode mode) {
  validate_tokens(p, tokens, mode);
  LogProbResult res;
  res.per_step.reserve(tokens.size());
  LstmState state(p.d_hid);
  int prev = kBos;
  for (int tok : tokens) {
    const auto logits = forward_step(p, state, prev);
    const auto logp = masked_log_softmax(logits, mode);
    res.per_step.push_back(logp[tok]);
    res.total += logp[tok];
    prev = tok;
  }
  return res;
}

// Accumulates d(sum_t coeffs[t] * log pi(tokens[t] | prefix))/d theta into
// `grads` by backpropagation through time. The shared engine behind both the
// MLE gradient and the policy-gradient surrogate.
inline void accumulate_logprob_grad(const GeneratorParams& p, const std::vector<int>& tokens,
                                    const std::vector<double>& coeffs, SeqMode mode,
                                    GeneratorGrads& grads) {
  if (coeffs.size() != tokens.size())
    throw ArgumentError("accumulate_logprob_grad: coeffs/tokens length mismatch");
  const size_t T = tokens.size();
  if (T == 0) return;

  std::vector<LstmStepCache> caches(T);
  std::vector<std::vector<double>> probs(T);   // masked probabilities per step
  std::vector<std::vector<double>> hidden(T);  // h_t after each step
  std::vector<int> inputs(T);

  LstmState state(p.d_hid);
  int prev = kBos;
  for (size_t t = 0; t < T; ++t) {
    inputs[t] = prev;
    const auto logits = forward_step(p, state, prev, &caches[t]);
    const auto logp = masked_log_softmax(logits, mode);
    auto& pr = probs[t];
    pr.assign(logp.size(), 0.0);
    for (size_t i = 0; i < logp.size(); ++i)
      if (logp[i] > -std::numeric_limits<double>::infinity()) pr[i] = std::exp(logp[i]);
    hidden[t] = state.hidden;
    prev = tokens[t];
  }

  std::vector<double> dh(p.d_hid, 0.0), dc(p.d_hid, 0.0);
  std::vector<double> dx(p.d_emb);
  std::vector<double> dlogits(p.v_total);
  for (size_t tt = T; tt-- > 0;) {
    // d log softmax(chosen) / d logits = onehot - probs on unmasked entries;
    // masked entries carry zero probability and zero gradient.
    const double w = coeffs[tt];
    for (int i = 0; i < p.v_total; ++i) dlogits[i] = -w * probs[tt][i];
    dlogits[tokens[tt]] += w;

    add_outer(hidden[tt].data(), dlogits.data(), grads.out_w);
    for (int i = 0; i < p.v_total; ++i) grads.out_b.data[i] += dlogits[i];
    addmul_mat_vec(p.out_w, dlogits.data(), dh.data());

    std::fill(dx.begin(), dx.end(), 0.0);
    lstm_step_backward(p.lstm, caches[tt], dh, dc, dx.data(), grads.lstm);
    double* erow = grads.embed.row_ptr(inputs[tt]);
    for (int k = 0; k < p.d_emb; ++k) erow[k] += dx[k];
  }
}

// Teacher-forced mean NLL per token plus its exact gradient. In
// eos_terminated mode an EOS target is appended to every sequence; in
// fixed_length mode sequences are scored as-is.
inline std::pair<double, ParamStore> mle_loss_and_grad(const GeneratorParams& p,
                                                       const std::vector<std::vector<int>>& batch,
                                                       SeqMode mode, int threads = 1) {
  if (batch.empty()) throw ArgumentError("mle_loss_and_grad: empty batch");

  std::vector<std::vector<int>> targets(batch.size());
  size_t total_tokens = 0;
  for (size_t i = 0; i < batch.size(); ++i) {
    targets[i] = batch[i];
    if (mode == SeqMode::eos_terminated) targets[i].push_back(kEos);
    validate_tokens(p, targets[i], mode);
    total_tokens += targets[i].size();
  }
  if (total_tokens == 0) throw ArgumentError("mle_loss_and_grad: no tokens in batch");

  std::vector<double> seq_nll(batch.size(), 0.0);
  std::vector<GeneratorGrads> seq_grads(batch.size());
  parallel_for(batch.size(), threads, [&](size_t i) {
    const auto lp = log_prob(p, targets[i], mode);
    seq_nll[i] = -lp.total;
    seq_grads[i] = GeneratorGrads(p.v_total, p.d_emb, p.d_hid);
    // d(mean NLL)/d theta: every step weighs -1/total_tokens on log pi.
    std::vector<double> coeffs(targets[i].size(), -1.0 / static_cast<double>(total_tokens));
    accumulate_logprob_grad(p, targets[i], coeffs, mode, seq_grads[i]);
  });

  double loss = 0.0;
  for (double v : seq_nll) loss += v;
  loss /= static_cast<double>(total_tokens);

  GeneratorGrads total(p.v_total, p.d_emb, p.d_hid);
  for (const auto& g : seq_grads) total.add_scaled(g, 1.0);
  return {loss, std::move(total).to_store()};
}

// Monte Carlo estimate of the policy entropy H(q_theta) = -E[log q(tau)].
inline double entropy_estimate(const GeneratorParams& p, int n_samples, int max_len,
                               SeqMode mode, RngStream rng, int threads = 1) {
  if (n_samples < 1) throw ArgumentError("entropy_estimate: n_samples must be >= 1");
  std::vector<double> neg_logp(n_samples);
  parallel_for(static_cast<size_t>(n_samples), threads, [&](size_t i) {
    neg_logp[i] = -sample_trajectory(p, max_len, mode, rng.child(i)).total_logp();
  });
  double s = 0.0;
  for (double v : neg_logp) s += v;
  return s / n_samples;
}

// Batch sampling with one child stream per slot.
inline std::vector<Trajectory> sample_batch(const GeneratorParams& p, int m, int max_len,
                                            SeqMode mode, RngStream rng, int threads = 1) {
  if (m < 1) throw ArgumentError("sample_batch: batch size must be >= 1");
  std::vector<Trajectory> out(m);
  parallel_for(static_cast<size_t>(m), threads, [&](size_t i) {
    out[i] = sample_trajectory(p, max_len, mode, rng.child(i));
  });
  return out;
}

}  // namespace irltg
