#pragma once

#include <cstdint>
#include <vector>

#include "irltg/parallel.hpp"
#include "irltg/policy_net.hpp"
#include "irltg/rng.hpp"

namespace irltg {

// A frozen randomly-initialized generator that plays the role of the true
// data distribution: it emits the training corpus and scores candidate
// samples exactly. Fixed-length protocol only.
struct OracleModel {
  GeneratorParams params;
  uint64_t seed = 0;
};

// All parameters i.i.d. N(0,1). v_content excludes the two reserved ids.
inline OracleModel make_oracle(uint64_t seed, int v_content, int d_emb, int d_hid) {
  if (v_content < 1) throw ArgumentError("make_oracle: v_content must be >= 1");
  OracleModel o;
  o.seed = seed;
  o.params = GeneratorParams(v_content + kReservedTokens, d_emb, d_hid);
  RngStream rng(seed);
  for (double& x : o.params.embed.data) x = rng.normal();
  lstm_init_normal(o.params.lstm, rng);
  for (double& x : o.params.out_w.data) x = rng.normal();
  for (double& x : o.params.out_b.data) x = rng.normal();
  return o;
}

// n length-T sequences sampled from the oracle; sample i uses rng.child(i),
// so the dataset is independent of thread count.
inline std::vector<std::vector<int>> generate_dataset(const OracleModel& oracle, int n, int T,
                                                      RngStream rng, int threads = 1) {
  if (n < 1 || T < 1) throw ArgumentError("generate_dataset: n and T must be >= 1");
  std::vector<std::vector<int>> out(n);
  parallel_for(static_cast<size_t>(n), threads, [&](size_t i) {
    out[i] = sample_trajectory(oracle.params, T, SeqMode::fixed_length, rng.child(i)).tokens;
  });
  return out;
}

// Mean per-token negative log-likelihood of the samples under the oracle.
// All samples must share one fixed length.
inline double nll_oracle(const OracleModel& oracle, const std::vector<std::vector<int>>& samples,
                         int threads = 1) {
  if (samples.empty()) throw ArgumentError("nll_oracle: empty sample set");
  const size_t T = samples[0].size();
  if (T == 0) throw ArgumentError("nll_oracle: empty sequence");
  for (const auto& s : samples)
    if (s.size() != T) throw ArgumentError("nll_oracle: samples must share one length");
  std::vector<double> nll(samples.size(), 0.0);
  parallel_for(samples.size(), threads, [&](size_t i) {
    nll[i] = -log_prob(oracle.params, samples[i], SeqMode::fixed_length).total;
  });
  double total = 0.0;
  for (double v : nll) total += v;
  return total / (static_cast<double>(samples.size()) * static_cast<double>(T));
}

}  // namespace irltg
