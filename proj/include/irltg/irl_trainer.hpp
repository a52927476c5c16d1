#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "irltg/adam.hpp"
#include "irltg/oracle.hpp"
#include "irltg/parallel.hpp"
#include "irltg/policy_net.hpp"
#include "irltg/reward_net.hpp"
#include "irltg/rng.hpp"

namespace irltg {

enum class BaselineKind { none, batch_mean };

// Scalar knobs of the alternating r-step/g-step loop.
struct TrainConfig {
  int batch_real = 64;       // N: real sequences per r-step epoch
  int batch_gen = 64;        // M: generated trajectories per batch
  int n_r = 10;              // r-step epochs per iteration
  int n_g = 1;               // g-step batches per iteration
  double alpha = 0.0004;     // reward learning rate
  double beta = 0.005;       // generator learning rate
  int rollouts = 8;          // K continuation rollouts per state
  int pretrain_epochs = 50;
  int max_len = 20;
  SeqMode mode = SeqMode::fixed_length;
  uint64_t seed = 1;
  int total_iterations = 50;
  BaselineKind baseline = BaselineKind::none;
  double grad_clip = 5.0;    // global-norm clip on both nets; <= 0 disables
  int threads = 1;
  int eval_samples = 500;    // trajectories per NLL_oracle evaluation; 0 skips

  void validate() const {
    if (batch_real < 1 || batch_gen < 1 || n_r < 1 || n_g < 1 || rollouts < 1 || max_len < 1)
      throw ArgumentError("TrainConfig: counts must be >= 1");
    if (alpha <= 0.0 || beta <= 0.0) throw ArgumentError("TrainConfig: learning rates must be > 0");
    if (pretrain_epochs < 0 || total_iterations < 0 || threads < 1 || eval_samples < 0)
      throw ArgumentError("TrainConfig: negative count");
  }
};

struct IterRecord {
  int iteration = 0;
  double objective = 0.0;         // mean R_phi(tau) - log q(tau) over the last g-batch
  double mean_real_reward = 0.0;  // last r-step epoch
  double mean_gen_reward = 0.0;   // importance-weighted, last r-step epoch
  double entropy = 0.0;           // mean -log q over the last g-batch
  double ess = 0.0;               // effective sample size of the last r-step weights
  std::optional<double> nll_oracle;
  double wall_time_s = 0.0;  // in-memory diagnostic; excluded from persisted logs
};

struct TrainReport {
  std::vector<double> pretrain_losses;  // mean NLL per token, one per epoch
  std::vector<IterRecord> records;
};

// Per-position returns Q_1..Q_T of a trajectory under the current policy and
// reward: Q_t = r_phi(s_t, a_t) + V(s_{t+1}), with V estimated as the mean
// summed reward of K continuation rollouts from the prefix a_{1:t}; the final
// step is exact, Q_T = r_phi(s_T, a_T). Rollout streams derive from
// (rng, t, k), so values are independent of execution order. Rewards are
// evaluated deterministically (no dropout).
inline std::vector<double> estimate_returns(const GeneratorParams& gp, const RewardParams& rp,
                                            const Trajectory& traj, int k_rollouts, SeqMode mode,
                                            int max_len, RngStream rng, int threads = 1) {
  if (k_rollouts < 1) throw ArgumentError("estimate_returns: K must be >= 1");
  const size_t T = traj.length();
  if (T == 0) throw ArgumentError("estimate_returns: empty trajectory");

  std::vector<double> q = step_rewards_masked(rp, traj.tokens, nullptr);
  if (T == 1) return q;

  // Policy and encoder states along the trajectory prefix, reused by every
  // rollout. pol_after[s] has consumed BOS, a_0..a_{s-1}; advancing it with
  // input a_s yields the distribution of position s+1. enc_after[s] likewise
  // has consumed BOS, a_0..a_{s-1}.
  std::vector<LstmState> pol_after(T, LstmState(gp.d_hid));
  std::vector<LstmState> enc_after(T, LstmState(rp.d_hid));
  {
    LstmState pol(gp.d_hid);
    LstmState enc(rp.d_hid);
    int prev = kBos;
    for (size_t s = 0; s < T; ++s) {
      lstm_step(gp.lstm, gp.embed.row_ptr(prev), pol, nullptr);
      lstm_step(rp.enc, rp.embed.row_ptr(prev), enc, nullptr);
      pol_after[s] = pol;
      enc_after[s] = enc;
      prev = traj.tokens[s];
    }
  }

  const int horizon = mode == SeqMode::fixed_length ? static_cast<int>(T)
                                                    : std::max(max_len, static_cast<int>(T));

  // One continuation rollout from after prefix a_0..a_s; returns the summed
  // reward over positions s+1 .. end.
  auto rollout = [&](size_t s, RngStream r) -> double {
    LstmState pol = pol_after[s];
    LstmState enc = enc_after[s];
    int prev = traj.tokens[s];
    double total = 0.0;
    std::vector<double> u(static_cast<size_t>(rp.d_hid) + rp.d_emb);
    for (int j = static_cast<int>(s) + 1; j < horizon; ++j) {
      lstm_step(gp.lstm, gp.embed.row_ptr(prev), pol, nullptr);
      std::vector<double> logits(gp.out_b.data);
      addmul_vec_mat(pol.hidden.data(), gp.out_w, logits.data());
      const auto logp = masked_log_softmax(logits, mode);
      std::vector<double> probs(logp.size(), 0.0);
      for (size_t i = 0; i < logp.size(); ++i)
        if (logp[i] > -std::numeric_limits<double>::infinity()) probs[i] = std::exp(logp[i]);
      const int a = r.categorical(probs);

      lstm_step(rp.enc, rp.embed.row_ptr(prev), enc, nullptr);
      for (int k = 0; k < rp.d_hid; ++k) u[k] = enc.hidden[k];
      const double* act = rp.embed.row_ptr(a);
      for (int k = 0; k < rp.d_emb; ++k) u[rp.d_hid + k] = act[k];
      double hidsum = rp.mlp_b2.data[0];
      std::vector<double> hid(rp.mlp_b1.data);
      addmul_vec_mat(u.data(), rp.mlp_w1, hid.data());
      for (int j2 = 0; j2 < rp.d_mlp; ++j2) hidsum += std::tanh(hid[j2]) * rp.mlp_w2.data[j2];
      total += hidsum;

      if (mode == SeqMode::eos_terminated && a == kEos) break;
      prev = a;
    }
    return total;
  };

  const size_t positions = T - 1;  // positions 0..T-2 need rollouts
  std::vector<double> sums(positions * static_cast<size_t>(k_rollouts), 0.0);
  parallel_for(sums.size(), threads, [&](size_t idx) {
    const size_t s = idx / k_rollouts;
    const size_t k = idx % k_rollouts;
    sums[idx] = rollout(s, rng.child(s).child(k));
  });

  for (size_t s = 0; s < positions; ++s) {
    double v = 0.0;
    for (int k = 0; k < k_rollouts; ++k) v += sums[s * k_rollouts + k];
    q[s] += v / k_rollouts;
  }
  return q;
}

struct GStepResult {
  ParamStore grads;                             // ascent direction for the surrogate
  std::vector<std::vector<double>> advantages;  // frozen A_t per trajectory
  double surrogate = 0.0;                       // (1/M) sum_m sum_t log pi * A_t
};

// Policy gradient of the surrogate (1/M) sum_m sum_t log pi(a_t|s_t) * A_t
// with A_t = Q_t - log pi(a_t|s_t) - 1 treated as a constant. Trajectories
// must be freshly sampled from gp so the recorded step log-probs are current.
inline GStepResult g_step_grad(const GeneratorParams& gp, const std::vector<Trajectory>& batch,
                               const std::vector<std::vector<double>>& returns,
                               BaselineKind baseline = BaselineKind::none, SeqMode mode = SeqMode::fixed_length,
                               int threads = 1) {
  if (batch.empty()) throw ArgumentError("g_step_grad: empty batch");
  if (returns.size() != batch.size())
    throw ArgumentError("g_step_grad: returns misaligned with batch");
  const size_t m = batch.size();

  GStepResult res;
  res.advantages.resize(m);
  size_t max_t = 0;
  for (size_t i = 0; i < m; ++i) {
    const auto& traj = batch[i];
    if (returns[i].size() != traj.length())
      throw ArgumentError("g_step_grad: returns misaligned with trajectory length");
    auto& adv = res.advantages[i];
    adv.resize(traj.length());
    for (size_t t = 0; t < traj.length(); ++t)
      adv[t] = returns[i][t] - traj.step_logps[t] - 1.0;
    max_t = std::max(max_t, traj.length());
  }

  if (baseline == BaselineKind::batch_mean) {
    // Per-position mean over the trajectories that reach that position.
    for (size_t t = 0; t < max_t; ++t) {
      double sum = 0.0;
      size_t cnt = 0;
      for (const auto& adv : res.advantages)
        if (t < adv.size()) {
          sum += adv[t];
          ++cnt;
        }
      const double mean = sum / static_cast<double>(cnt);
      for (auto& adv : res.advantages)
        if (t < adv.size()) adv[t] -= mean;
    }
  }

  const double inv_m = 1.0 / static_cast<double>(m);
  std::vector<GeneratorGrads> slots(m);
  parallel_for(m, threads, [&](size_t i) {
    slots[i] = GeneratorGrads(gp.v_total, gp.d_emb, gp.d_hid);
    std::vector<double> coeffs(res.advantages[i].size());
    for (size_t t = 0; t < coeffs.size(); ++t) coeffs[t] = inv_m * res.advantages[i][t];
    accumulate_logprob_grad(gp, batch[i].tokens, coeffs, mode, slots[i]);
  });

  GeneratorGrads total(gp.v_total, gp.d_emb, gp.d_hid);
  for (const auto& g : slots) total.add_scaled(g, 1.0);
  res.grads = std::move(total).to_store();

  for (size_t i = 0; i < m; ++i)
    for (size_t t = 0; t < batch[i].length(); ++t)
      res.surrogate += inv_m * batch[i].step_logps[t] * res.advantages[i][t];
  return res;
}

// Invoked after every completed IRL iteration with the fresh parameters.
using IterCallback =
    std::function<void(int iteration, const GeneratorParams&, const RewardParams&, const IterRecord&)>;

namespace detail {

inline void check_finite_params(const ParamStore& s, const std::string& what, int iteration) {
  if (!store_all_finite(s))
    throw NumericError("non-finite " + what + " parameters at iteration " +
                       std::to_string(iteration));
}

inline double eval_nll_under_oracle(const OracleModel& oracle, const GeneratorParams& gp,
                                    int n_samples, int max_len, SeqMode mode, RngStream rng,
                                    int threads) {
  std::vector<double> nll(n_samples, 0.0);
  std::vector<size_t> lens(n_samples, 0);
  parallel_for(static_cast<size_t>(n_samples), threads, [&](size_t i) {
    const auto traj = sample_trajectory(gp, max_len, mode, rng.child(i));
    const auto lp = log_prob(oracle.params, traj.tokens, mode);
    nll[i] = -lp.total;
    lens[i] = traj.length();
  });
  double total = 0.0;
  size_t tokens = 0;
  for (int i = 0; i < n_samples; ++i) {
    total += nll[i];
    tokens += lens[i];
  }
  return total / static_cast<double>(tokens);
}

}  // namespace detail

// MLE pretraining: seeded shuffle each epoch, mean-NLL minibatches, Adam on
// the negated loss gradient. Returns the per-epoch mean loss.
inline std::vector<double> mle_pretrain(GeneratorParams& gp,
                                        const std::vector<std::vector<int>>& trainset,
                                        int epochs, int batch_size, double lr, SeqMode mode,
                                        double grad_clip, RngStream rng, int threads = 1) {
  if (trainset.empty()) throw ArgumentError("mle_pretrain: empty trainset");
  std::vector<double> epoch_losses;
  AdamState state;
  AdamOptions opt;
  opt.lr = lr;
  ParamStore params = gp.to_store();
  for (int e = 0; e < epochs; ++e) {
    RngStream erng = rng.child(static_cast<uint64_t>(e));
    auto order = erng.sample_indices(trainset.size(), trainset.size());
    double loss_sum = 0.0;
    size_t batches = 0;
    for (size_t start = 0; start < order.size(); start += batch_size) {
      const size_t end = std::min(order.size(), start + batch_size);
      std::vector<std::vector<int>> batch;
      batch.reserve(end - start);
      for (size_t i = start; i < end; ++i) batch.push_back(trainset[order[i]]);
      auto [loss, grads] = mle_loss_and_grad(gp, batch, mode, threads);
      if (!std::isfinite(loss)) throw NumericError("mle_pretrain: non-finite loss");
      for (auto& [name, g] : grads) {
        (void)name;
        g *= -1.0;  // descend the loss via the ascent-convention optimizer
      }
      clip_global_norm(grads, grad_clip);
      adam_step(params, grads, state, opt);
      gp = GeneratorParams::from_store(gp.v_total, gp.d_emb, gp.d_hid, params);
      loss_sum += loss;
      ++batches;
    }
    epoch_losses.push_back(loss_sum / static_cast<double>(batches));
  }
  return epoch_losses;
}

// Algorithm: MLE-pretrain the generator, then alternate n_r reward epochs
// and n_g policy-gradient batches per iteration. Mutates gp/rp in place and
// returns the per-iteration report.
inline TrainReport run_irl(GeneratorParams& gp, RewardParams& rp,
                           const std::vector<std::vector<int>>& trainset,
                           const TrainConfig& config, const OracleModel* oracle = nullptr,
                           const IterCallback& callback = nullptr) {
  config.validate();
  if (trainset.empty() && (config.pretrain_epochs > 0 || config.total_iterations > 0))
    throw ArgumentError("run_irl: empty trainset");

  TrainReport report;
  RngStream root(config.seed);

  if (config.pretrain_epochs > 0) {
    report.pretrain_losses =
        mle_pretrain(gp, trainset, config.pretrain_epochs, config.batch_real, config.beta, config.mode,
                     config.grad_clip, root.child("pretrain"), config.threads);
  }

  AdamState r_state, g_state;
  AdamOptions r_opt, g_opt;
  r_opt.lr = config.alpha;
  g_opt.lr = config.beta;
  ParamStore r_params = rp.to_store();
  ParamStore g_params = gp.to_store();

  for (int it = 0; it < config.total_iterations; ++it) {
    const auto t0 = std::chrono::steady_clock::now();
    RngStream iter_rng = root.child("iter").child(static_cast<uint64_t>(it));
    IterRecord rec;
    rec.iteration = it;

    // r-step: n_r reward-approximator epochs with the generator frozen.
    for (int e = 0; e < config.n_r; ++e) {
      RngStream er = iter_rng.child("r").child(static_cast<uint64_t>(e));
      RngStream pick = er.child("pick");
      std::vector<std::vector<int>> real;
      real.reserve(config.batch_real);
      for (int i = 0; i < config.batch_real; ++i)
        real.push_back(trainset[pick.uniform_index(trainset.size())]);
      const auto gen = sample_batch(gp, config.batch_gen, config.max_len, config.mode,
                                    er.child("sample"), config.threads);
      auto rs = r_step_grad(rp, real, gen, er.child("dropout"), config.threads);
      clip_global_norm(rs.grads, config.grad_clip);
      adam_step(r_params, rs.grads, r_state, r_opt);
      rp = RewardParams::from_store(rp.v_total, rp.d_emb, rp.d_hid, rp.d_mlp, rp.keep_prob, r_params);
      rec.mean_real_reward = rs.mean_real_reward;
      rec.mean_gen_reward = rs.mean_gen_reward;
      rec.ess = rs.ess;
    }
    detail::check_finite_params(r_params, "reward", it);

    // g-step: n_g policy-gradient batches with the reward frozen.
    for (int b = 0; b < config.n_g; ++b) {
      RngStream gb = iter_rng.child("g").child(static_cast<uint64_t>(b));
      const auto batch = sample_batch(gp, config.batch_gen, config.max_len, config.mode,
                                      gb.child("sample"), config.threads);
      RngStream ret_rng = gb.child("ret");
      std::vector<std::vector<double>> returns(batch.size());
      parallel_for(batch.size(), config.threads, [&](size_t m) {
        returns[m] = estimate_returns(gp, rp, batch[m], config.rollouts, config.mode,
                                      config.max_len, ret_rng.child(m), 1);
      });
      auto gs = g_step_grad(gp, batch, returns, config.baseline, config.mode, config.threads);
      clip_global_norm(gs.grads, config.grad_clip);
      adam_step(g_params, gs.grads, g_state, g_opt);
      gp = GeneratorParams::from_store(gp.v_total, gp.d_emb, gp.d_hid, g_params);

      // Objective surrogate E[R] + H and entropy estimate from this batch.
      double obj = 0.0, ent = 0.0;
      for (const auto& traj : batch) {
        const double r = trajectory_reward_masked(rp, traj.tokens, nullptr);
        obj += r - traj.total_logp();
        ent -= traj.total_logp();
      }
      rec.objective = obj / static_cast<double>(batch.size());
      rec.entropy = ent / static_cast<double>(batch.size());
    }
    detail::check_finite_params(g_params, "generator", it);

    if (oracle && config.eval_samples > 0) {
      rec.nll_oracle =
          detail::eval_nll_under_oracle(*oracle, gp, config.eval_samples, config.max_len,
                                        config.mode, root.child("eval").child(it), config.threads);
      if (!std::isfinite(*rec.nll_oracle))
        throw NumericError("run_irl: non-finite NLL at iteration " + std::to_string(it));
    }

    rec.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    report.records.push_back(rec);
    if (callback) callback(it, gp, rp, rec);
  }
  return report;
}

}  // namespace irltg
