#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "irltg/lstm.hpp"
#include "irltg/mat.hpp"
#include "irltg/parallel.hpp"
#include "irltg/policy_net.hpp"
#include "irltg/rng.hpp"

namespace irltg {

// Reward approximator r_phi(s_t, a_t): an LSTM prefix encoder plus a
// one-hidden-layer tanh MLP with a linear scalar head. The encoder state
// summarizes BOS, a_1 .. a_{t-1}; the MLP scores concat(state, embed(a_t)).
// Parameters are fully disjoint from the generator's.
struct RewardParams {
  int v_total = 0;
  int d_emb = 0;
  int d_hid = 0;
  int d_mlp = 0;
  double keep_prob = 1.0;  // dropout keep-probability on the MLP hidden layer
  Mat embed;               // v_total x d_emb
  LstmParams enc;          // input dim d_emb
  Mat mlp_w1;              // (d_hid + d_emb) x d_mlp
  Mat mlp_b1;              // 1 x d_mlp
  Mat mlp_w2;              // d_mlp x 1
  Mat mlp_b2;              // 1 x 1

  RewardParams() = default;
  RewardParams(int v, int de, int dh, int dm, double keep)
      : v_total(v),
        d_emb(de),
        d_hid(dh),
        d_mlp(dm),
        keep_prob(keep),
        embed(v, de),
        enc(de, dh),
        mlp_w1(dh + de, dm),
        mlp_b1(1, dm),
        mlp_w2(dm, 1),
        mlp_b2(1, 1) {
    if (v < kReservedTokens + 1 || de < 1 || dh < 1 || dm < 1)
      throw ArgumentError("RewardParams: dims too small");
    if (!(keep > 0.0 && keep <= 1.0))
      throw ArgumentError("RewardParams: keep_prob must lie in (0, 1]");
  }

  static RewardParams init(int v, int de, int dh, int dm, double keep, RngStream rng,
                           double scale = 0.08) {
    RewardParams p(v, de, dh, dm, keep);
    for (double& x : p.embed.data) x = rng.uniform(-scale, scale);
    lstm_init_uniform(p.enc, rng, scale, 1.0);
    for (Mat* m : {&p.mlp_w1, &p.mlp_b1, &p.mlp_w2, &p.mlp_b2})
      for (double& x : m->data) x = rng.uniform(-scale, scale);
    return p;
  }

  ParamStore to_store() const {
    ParamStore s;
    s.emplace("embed", embed);
    s.emplace("enc_w_i", enc.w_i);
    s.emplace("enc_w_f", enc.w_f);
    s.emplace("enc_w_o", enc.w_o);
    s.emplace("enc_w_c", enc.w_c);
    s.emplace("enc_b_i", enc.b_i);
    s.emplace("enc_b_f", enc.b_f);
    s.emplace("enc_b_o", enc.b_o);
    s.emplace("enc_b_c", enc.b_c);
    s.emplace("mlp_w1", mlp_w1);
    s.emplace("mlp_b1", mlp_b1);
    s.emplace("mlp_w2", mlp_w2);
    s.emplace("mlp_b2", mlp_b2);
    return s;
  }

  static RewardParams from_store(int v, int de, int dh, int dm, double keep,
                                 const ParamStore& s) {
    RewardParams p(v, de, dh, dm, keep);
    auto take = [&s](const std::string& name, Mat& dst) {
      auto it = s.find(name);
      if (it == s.end() || !it->second.same_shape(dst))
        throw ArgumentError("RewardParams::from_store: missing or mismatched " + name);
      dst = it->second;
    };
    take("embed", p.embed);
    take("enc_w_i", p.enc.w_i);
    take("enc_w_f", p.enc.w_f);
    take("enc_w_o", p.enc.w_o);
    take("enc_w_c", p.enc.w_c);
    take("enc_b_i", p.enc.b_i);
    take("enc_b_f", p.enc.b_f);
    take("enc_b_o", p.enc.b_o);
    take("enc_b_c", p.enc.b_c);
    take("mlp_w1", p.mlp_w1);
    take("mlp_b1", p.mlp_b1);
    take("mlp_w2", p.mlp_w2);
    take("mlp_b2", p.mlp_b2);
    return p;
  }
};

struct RewardGrads {
  Mat embed;
  LstmGrads enc;
  Mat mlp_w1, mlp_b1, mlp_w2, mlp_b2;

  RewardGrads() = default;
  RewardGrads(int v, int de, int dh, int dm)
      : embed(v, de), enc(de, dh), mlp_w1(dh + de, dm), mlp_b1(1, dm), mlp_w2(dm, 1), mlp_b2(1, 1) {}

  ParamStore to_store() && {
    ParamStore s;
    s.emplace("embed", std::move(embed));
    s.emplace("enc_w_i", std::move(enc.w_i));
    s.emplace("enc_w_f", std::move(enc.w_f));
    s.emplace("enc_w_o", std::move(enc.w_o));
    s.emplace("enc_w_c", std::move(enc.w_c));
    s.emplace("enc_b_i", std::move(enc.b_i));
    s.emplace("enc_b_f", std::move(enc.b_f));
    s.emplace("enc_b_o", std::move(enc.b_o));
    s.emplace("enc_b_c", std::move(enc.b_c));
    s.emplace("mlp_w1", std::move(mlp_w1));
    s.emplace("mlp_b1", std::move(mlp_b1));
    s.emplace("mlp_w2", std::move(mlp_w2));
    s.emplace("mlp_b2", std::move(mlp_b2));
    return s;
  }

  void add_scaled(const RewardGrads& o, double s) {
    auto axpy = [s](Mat& dst, const Mat& src) {
      for (size_t i = 0; i < dst.data.size(); ++i) dst.data[i] += s * src.data[i];
    };
    axpy(embed, o.embed);
    axpy(enc.w_i, o.enc.w_i);
    axpy(enc.w_f, o.enc.w_f);
    axpy(enc.w_o, o.enc.w_o);
    axpy(enc.w_c, o.enc.w_c);
    axpy(enc.b_i, o.enc.b_i);
    axpy(enc.b_f, o.enc.b_f);
    axpy(enc.b_o, o.enc.b_o);
    axpy(enc.b_c, o.enc.b_c);
    axpy(mlp_w1, o.mlp_w1);
    axpy(mlp_b1, o.mlp_b1);
    axpy(mlp_w2, o.mlp_w2);
    axpy(mlp_b2, o.mlp_b2);
  }
};

inline void validate_reward_tokens(const RewardParams& p, const std::vector<int>& tokens) {
  for (int tok : tokens) {
    if (tok < 0 || tok >= p.v_total) throw ArgumentError("reward: token id out of range");
    if (tok == kBos) throw ArgumentError("reward: BOS is not a scoreable action");
  }
}

// Inverted-dropout mask: entries are 1/keep_prob with probability keep_prob,
// else 0. One mask per sequence, shared by every step's MLP hidden layer.
inline std::vector<double> dropout_mask(int n, double keep_prob, RngStream rng) {
  std::vector<double> mask(n, 1.0);
  if (keep_prob >= 1.0) return mask;
  const double inv = 1.0 / keep_prob;
  for (int i = 0; i < n; ++i) mask[i] = rng.uniform() < keep_prob ? inv : 0.0;
  return mask;
}

// Per-step rewards with an explicit dropout mask (nullptr = deterministic).
inline std::vector<double> step_rewards_masked(const RewardParams& p,
                                               const std::vector<int>& tokens,
                                               const std::vector<double>* mask) {
  validate_reward_tokens(p, tokens);
  if (mask && static_cast<int>(mask->size()) != p.d_mlp)
    throw ArgumentError("step_rewards_masked: mask length mismatch");

  std::vector<double> rewards(tokens.size());
  LstmState state(p.d_hid);
  std::vector<double> u(static_cast<size_t>(p.d_hid) + p.d_emb);
  std::vector<double> hid(p.d_mlp);
  for (size_t s = 0; s < tokens.size(); ++s) {
    const int input = s == 0 ? kBos : tokens[s - 1];
    lstm_step(p.enc, p.embed.row_ptr(input), state, nullptr);
    for (int k = 0; k < p.d_hid; ++k) u[k] = state.hidden[k];
    const double* act = p.embed.row_ptr(tokens[s]);
    for (int k = 0; k < p.d_emb; ++k) u[p.d_hid + k] = act[k];

    for (int j = 0; j < p.d_mlp; ++j) hid[j] = p.mlp_b1.data[j];
    addmul_vec_mat(u.data(), p.mlp_w1, hid.data());
    double r = p.mlp_b2.data[0];
    for (int j = 0; j < p.d_mlp; ++j) {
      double hj = std::tanh(hid[j]);
      if (mask) hj *= (*mask)[j];
      r += hj * p.mlp_w2.data[j];
    }
    rewards[s] = r;
  }
  return rewards;
}

// Per-step rewards r_phi(s_t, a_t). In train mode a fresh dropout mask is
// drawn from rng for the whole sequence.
inline std::vector<double> step_rewards(const RewardParams& p, const std::vector<int>& tokens,
                                        bool train_mode, RngStream rng) {
  if (train_mode && p.keep_prob < 1.0) {
    const auto mask = dropout_mask(p.d_mlp, p.keep_prob, rng);
    return step_rewards_masked(p, tokens, &mask);
  }
  return step_rewards_masked(p, tokens, nullptr);
}

inline double trajectory_reward_masked(const RewardParams& p, const std::vector<int>& tokens,
                                       const std::vector<double>* mask) {
  double sum = 0.0;
  for (double r : step_rewards_masked(p, tokens, mask)) sum += r;
  return sum;
}

// R_phi(tau): the sum of per-step rewards.
inline double trajectory_reward(const RewardParams& p, const std::vector<int>& tokens,
                                bool train_mode, RngStream rng) {
  double sum = 0.0;
  for (double r : step_rewards(p, tokens, train_mode, std::move(rng))) sum += r;
  return sum;
}

// Accumulates weight * dR_phi(tau)/d phi into grads, with R evaluated under
// the given dropout mask.
inline void accumulate_reward_grad(const RewardParams& p, const std::vector<int>& tokens,
                                   double weight, const std::vector<double>* mask,
                                   RewardGrads& grads) {
  validate_reward_tokens(p, tokens);
  const size_t T = tokens.size();
  if (T == 0 || weight == 0.0) return;

  std::vector<LstmStepCache> caches(T);
  std::vector<std::vector<double>> states(T);  // encoder hidden per step
  std::vector<std::vector<double>> hid_tanh(T);
  LstmState state(p.d_hid);
  for (size_t s = 0; s < T; ++s) {
    const int input = s == 0 ? kBos : tokens[s - 1];
    lstm_step(p.enc, p.embed.row_ptr(input), state, &caches[s]);
    states[s] = state.hidden;

    std::vector<double> u(static_cast<size_t>(p.d_hid) + p.d_emb);
    for (int k = 0; k < p.d_hid; ++k) u[k] = state.hidden[k];
    const double* act = p.embed.row_ptr(tokens[s]);
    for (int k = 0; k < p.d_emb; ++k) u[p.d_hid + k] = act[k];
    auto& h = hid_tanh[s];
    h.assign(p.d_mlp, 0.0);
    for (int j = 0; j < p.d_mlp; ++j) h[j] = p.mlp_b1.data[j];
    addmul_vec_mat(u.data(), p.mlp_w1, h.data());
    for (int j = 0; j < p.d_mlp; ++j) h[j] = std::tanh(h[j]);
  }

  // MLP backward for every step; encoder receives dh injections.
  std::vector<std::vector<double>> dh_inject(T, std::vector<double>(p.d_hid, 0.0));
  std::vector<double> u(static_cast<size_t>(p.d_hid) + p.d_emb);
  std::vector<double> dhid_pre(p.d_mlp), du(static_cast<size_t>(p.d_hid) + p.d_emb);
  for (size_t s = 0; s < T; ++s) {
    for (int k = 0; k < p.d_hid; ++k) u[k] = states[s][k];
    const double* act = p.embed.row_ptr(tokens[s]);
    for (int k = 0; k < p.d_emb; ++k) u[p.d_hid + k] = act[k];

    grads.mlp_b2.data[0] += weight;
    for (int j = 0; j < p.d_mlp; ++j) {
      const double hj = hid_tanh[s][j];
      const double mj = mask ? (*mask)[j] : 1.0;
      grads.mlp_w2.data[j] += weight * hj * mj;
      const double dhid = weight * p.mlp_w2.data[j] * mj;
      dhid_pre[j] = dhid * (1.0 - hj * hj);
      grads.mlp_b1.data[j] += dhid_pre[j];
    }
    add_outer(u.data(), dhid_pre.data(), grads.mlp_w1);
    std::fill(du.begin(), du.end(), 0.0);
    addmul_mat_vec(p.mlp_w1, dhid_pre.data(), du.data());
    for (int k = 0; k < p.d_hid; ++k) dh_inject[s][k] += du[k];
    double* erow = grads.embed.row_ptr(tokens[s]);
    for (int k = 0; k < p.d_emb; ++k) erow[k] += du[p.d_hid + k];
  }

  // Encoder BPTT.
  std::vector<double> dh(p.d_hid, 0.0), dc(p.d_hid, 0.0), dx(p.d_emb);
  for (size_t s = T; s-- > 0;) {
    for (int k = 0; k < p.d_hid; ++k) dh[k] += dh_inject[s][k];
    std::fill(dx.begin(), dx.end(), 0.0);
    lstm_step_backward(p.enc, caches[s], dh, dc, dx.data(), grads.enc);
    const int input = s == 0 ? kBos : tokens[s - 1];
    double* erow = grads.embed.row_ptr(input);
    for (int k = 0; k < p.d_emb; ++k) erow[k] += dx[k];
  }
}

// Self-normalized importance weights over a generated batch:
// log w_j = R_phi(tau_j) - log q_theta(tau_j), normalized in the log domain
// with max subtraction. Rewards are evaluated deterministically (no dropout).
struct ImportanceWeights {
  std::vector<double> log_w;  // unnormalized
  std::vector<double> w;      // normalized, sums to 1

  double effective_sample_size() const {
    double s2 = 0.0;
    for (double v : w) s2 += v * v;
    return s2 > 0.0 ? 1.0 / s2 : 0.0;
  }
};

inline ImportanceWeights importance_weights(const RewardParams& p,
                                            const std::vector<Trajectory>& gen_batch) {
  if (gen_batch.empty()) throw ArgumentError("importance_weights: empty batch");
  ImportanceWeights iw;
  iw.log_w.resize(gen_batch.size());
  for (size_t j = 0; j < gen_batch.size(); ++j) {
    const double r = trajectory_reward_masked(p, gen_batch[j].tokens, nullptr);
    iw.log_w[j] = r - gen_batch[j].total_logp();
  }
  double mx = iw.log_w[0];
  for (double v : iw.log_w) mx = std::max(mx, v);
  iw.w.resize(iw.log_w.size());
  double sum = 0.0;
  for (size_t j = 0; j < iw.w.size(); ++j) {
    iw.w[j] = std::exp(iw.log_w[j] - mx);
    sum += iw.w[j];
  }
  for (double& v : iw.w) v /= sum;
  return iw;
}

struct RStepResult {
  ParamStore grads;                // ascent direction for J_r(phi)
  ImportanceWeights weights;
  double mean_real_reward = 0.0;   // deterministic R over the real batch
  double mean_gen_reward = 0.0;    // importance-weighted deterministic R over gen batch
  double ess = 0.0;
};

// Gradient of the sampled reward objective:
//   (1/N) sum_i grad R_phi(tau_i)  -  sum_j w_j_bar grad R_phi(tau'_j),
// with self-normalized weights treated as constants. Dropout masks are drawn
// once per sequence from rng children ("real", i) / ("gen", j), so the result
// is independent of evaluation order.
inline RStepResult r_step_grad(const RewardParams& p,
                               const std::vector<std::vector<int>>& real_batch,
                               const std::vector<Trajectory>& gen_batch, RngStream rng,
                               int threads = 1) {
  if (real_batch.empty() || gen_batch.empty())
    throw ArgumentError("r_step_grad: batches must be non-empty");

  RStepResult res;
  res.weights = importance_weights(p, gen_batch);
  res.ess = res.weights.effective_sample_size();

  const size_t n = real_batch.size();
  const size_t m = gen_batch.size();
  const RngStream real_rng = rng.child("real");
  const RngStream gen_rng = rng.child("gen");
  const bool use_dropout = p.keep_prob < 1.0;

  std::vector<RewardGrads> slots(n + m);
  std::vector<double> real_rewards(n);
  parallel_for(n + m, threads, [&](size_t idx) {
    RewardGrads g(p.v_total, p.d_emb, p.d_hid, p.d_mlp);
    if (idx < n) {
      const auto& tokens = real_batch[idx];
      std::vector<double> mask;
      if (use_dropout) mask = dropout_mask(p.d_mlp, p.keep_prob, real_rng.child(idx));
      accumulate_reward_grad(p, tokens, 1.0 / static_cast<double>(n),
                             use_dropout ? &mask : nullptr, g);
      real_rewards[idx] = trajectory_reward_masked(p, tokens, nullptr);
    } else {
      const size_t j = idx - n;
      const auto& tokens = gen_batch[j].tokens;
      std::vector<double> mask;
      if (use_dropout) mask = dropout_mask(p.d_mlp, p.keep_prob, gen_rng.child(j));
      accumulate_reward_grad(p, tokens, -res.weights.w[j], use_dropout ? &mask : nullptr, g);
    }
    slots[idx] = std::move(g);
  });

  RewardGrads total(p.v_total, p.d_emb, p.d_hid, p.d_mlp);
  for (const auto& g : slots) total.add_scaled(g, 1.0);
  res.grads = std::move(total).to_store();

  for (double r : real_rewards) res.mean_real_reward += r;
  res.mean_real_reward /= static_cast<double>(n);
  for (size_t j = 0; j < m; ++j) {
    const double r = res.weights.log_w[j] + gen_batch[j].total_logp();  // deterministic R
    res.mean_gen_reward += res.weights.w[j] * r;
  }
  return res;
}

}  // namespace irltg
