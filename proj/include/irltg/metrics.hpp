#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

#include "json.hpp"

#include "irltg/errors.hpp"
#include "irltg/parallel.hpp"
#include "irltg/rng.hpp"

namespace irltg {

struct BleuOptions {
  bool cumulative = true;     // geometric mean over orders 1..n (vs order n alone)
  double smooth_eps = 1e-9;   // substituted for zero modified precisions
};

namespace detail {

using NgramCounts = std::map<std::vector<int>, int>;

inline NgramCounts count_ngrams(const std::vector<int>& seq, int k) {
  NgramCounts counts;
  if (static_cast<int>(seq.size()) >= k)
    for (size_t i = 0; i + k <= seq.size(); ++i)
      ++counts[std::vector<int>(seq.begin() + i, seq.begin() + i + k)];
  return counts;
}

// Modified precision: clipped k-gram matches over total hypothesis k-grams.
// Returns {clipped, total}.
inline std::pair<long long, long long> clipped_matches(const std::vector<int>& hyp,
                                                       const std::vector<std::vector<int>>& refs,
                                                       int k) {
  const NgramCounts hyp_counts = count_ngrams(hyp, k);
  long long total = 0;
  for (const auto& [g, c] : hyp_counts) {
    (void)g;
    total += c;
  }
  if (total == 0) return {0, 0};
  NgramCounts max_ref;
  for (const auto& ref : refs)
    for (const auto& [g, c] : count_ngrams(ref, k)) {
      auto& m = max_ref[g];
      if (c > m) m = c;
    }
  long long clipped = 0;
  for (const auto& [g, c] : hyp_counts) {
    const auto it = max_ref.find(g);
    if (it != max_ref.end()) clipped += std::min(c, it->second);
  }
  return {clipped, total};
}

inline double brevity_penalty(size_t hyp_len, const std::vector<std::vector<int>>& refs) {
  // Closest reference length; ties resolved toward the shorter reference.
  size_t best = refs[0].size();
  const auto hl = static_cast<long long>(hyp_len);
  for (const auto& ref : refs) {
    const size_t r = ref.size();
    const long long da = std::llabs(static_cast<long long>(r) - hl);
    const long long db = std::llabs(static_cast<long long>(best) - hl);
    if (da < db || (da == db && r < best)) best = r;
  }
  if (hyp_len >= best) return 1.0;
  return std::exp(1.0 - static_cast<double>(best) / static_cast<double>(hyp_len));
}

}  // namespace detail

// Sentence-level BLEU of order n against a reference set.
inline double sentence_bleu(const std::vector<int>& hyp, const std::vector<std::vector<int>>& refs,
                            int n, const BleuOptions& opts = {}) {
  if (n < 1) throw ArgumentError("sentence_bleu: order must be >= 1");
  if (refs.empty()) throw ArgumentError("sentence_bleu: empty reference set");
  if (hyp.empty()) return 0.0;

  double log_sum = 0.0;
  const int first = opts.cumulative ? 1 : n;
  int orders = 0;
  for (int k = first; k <= n; ++k) {
    const auto [clipped, total] = detail::clipped_matches(hyp, refs, k);
    double p = total > 0 ? static_cast<double>(clipped) / static_cast<double>(total) : 0.0;
    if (p <= 0.0) p = opts.smooth_eps;
    if (p <= 0.0) return 0.0;  // smoothing disabled and a precision vanished
    log_sum += std::log(p);
    ++orders;
  }
  return detail::brevity_penalty(hyp.size(), refs) * std::exp(log_sum / orders);
}

// Mean BLEU of sampled generated sentences against the whole test set.
inline double bleu_forward(const std::vector<std::vector<int>>& generated,
                           const std::vector<std::vector<int>>& testset, int n, size_t eval_sample,
                           RngStream rng, const BleuOptions& opts = {}, int threads = 1) {
  if (generated.empty() || testset.empty())
    throw ArgumentError("bleu_forward: empty generated or test set");
  const auto pick = rng.sample_indices(generated.size(), eval_sample);
  std::vector<double> scores(pick.size(), 0.0);
  parallel_for(pick.size(), threads, [&](size_t i) {
    scores[i] = sentence_bleu(generated[pick[i]], testset, n, opts);
  });
  double sum = 0.0;
  for (double s : scores) sum += s;
  return sum / static_cast<double>(scores.size());
}

// Mean BLEU of sampled test sentences against a sampled generated reference
// pool: high when the generator covers the data distribution.
inline double bleu_backward(const std::vector<std::vector<int>>& generated,
                            const std::vector<std::vector<int>>& testset, int n,
                            size_t eval_sample, size_t ref_sample, RngStream rng,
                            const BleuOptions& opts = {}, int threads = 1) {
  if (generated.empty() || testset.empty())
    throw ArgumentError("bleu_backward: empty generated or test set");
  const auto hyp_pick = rng.child("hyp").sample_indices(testset.size(), eval_sample);
  const auto ref_pick = rng.child("ref").sample_indices(generated.size(), ref_sample);
  std::vector<std::vector<int>> refs;
  refs.reserve(ref_pick.size());
  for (size_t i : ref_pick) refs.push_back(generated[i]);
  std::vector<double> scores(hyp_pick.size(), 0.0);
  parallel_for(hyp_pick.size(), threads, [&](size_t i) {
    scores[i] = sentence_bleu(testset[hyp_pick[i]], refs, n, opts);
  });
  double sum = 0.0;
  for (double s : scores) sum += s;
  return sum / static_cast<double>(scores.size());
}

// Harmonic mean of forward and backward BLEU; zero when either is zero.
inline double bleu_ha(double forward, double backward) {
  if (forward < 0.0 || backward < 0.0) throw ArgumentError("bleu_ha: negative input");
  const double sum = forward + backward;
  if (sum <= 0.0) return 0.0;
  return 2.0 * forward * backward / sum;
}

struct MetricsReport {
  std::vector<int> orders;
  std::vector<double> forward;
  std::vector<double> backward;
  std::vector<double> harmonic;
  size_t eval_sample = 0;
  size_t ref_sample = 0;
  uint64_t seed = 0;

  nlohmann::json to_json() const {
    nlohmann::json per_order = nlohmann::json::object();
    for (size_t i = 0; i < orders.size(); ++i) {
      per_order[std::to_string(orders[i])] = {
          {"forward", forward[i]}, {"backward", backward[i]}, {"harmonic", harmonic[i]}};
    }
    return {{"bleu", per_order},
            {"eval_sample", eval_sample},
            {"ref_sample", ref_sample},
            {"seed", seed}};
  }
};

inline MetricsReport compute_metrics(const std::vector<std::vector<int>>& generated,
                                     const std::vector<std::vector<int>>& testset,
                                     const std::vector<int>& orders, size_t eval_sample,
                                     size_t ref_sample, uint64_t seed,
                                     const BleuOptions& opts = {}, int threads = 1) {
  MetricsReport rep;
  rep.orders = orders;
  rep.eval_sample = eval_sample;
  rep.ref_sample = ref_sample;
  rep.seed = seed;
  RngStream rng(seed);
  for (int n : orders) {
    const double f = bleu_forward(generated, testset, n, eval_sample,
                                  rng.child("forward").child(static_cast<uint64_t>(n)), opts, threads);
    const double b = bleu_backward(generated, testset, n, eval_sample, ref_sample,
                                   rng.child("backward").child(static_cast<uint64_t>(n)), opts, threads);
    rep.forward.push_back(f);
    rep.backward.push_back(b);
    rep.harmonic.push_back(bleu_ha(f, b));
  }
  return rep;
}

}  // namespace irltg
