#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>
#include <vector>

#include "irltg/errors.hpp"

namespace irltg {

namespace detail {

constexpr uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

inline uint64_t mix64(uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline uint64_t fnv1a(std::string_view s) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace detail

// Counter-based random stream. The generator key is a hash of
// (seed, label path), so a stream's output depends only on its identity and
// how many values it has produced, never on sibling streams or scheduling.
// Child streams are derived without consuming from the parent.
class RngStream {
 public:
  explicit RngStream(uint64_t seed) : key_(detail::mix64(seed + detail::kGolden)) {}

  RngStream child(uint64_t index) const {
    return RngStream(Key{}, detail::mix64(key_ ^ detail::mix64(index + detail::kGolden)));
  }

  RngStream child(std::string_view label) const {
    return RngStream(Key{}, detail::mix64(key_ ^ detail::fnv1a(label)));
  }

  uint64_t next_u64() {
    ++counter_;
    return detail::mix64(key_ + counter_ * detail::kGolden);
  }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller; consumes exactly two raw draws.
  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  // Uniform integer in [0, n). Rejection sampling, no modulo bias.
  uint64_t uniform_index(uint64_t n) {
    if (n == 0) throw ArgumentError("uniform_index: n must be positive");
    const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t u = next_u64();
    while (u >= limit) u = next_u64();
    return u % n;
  }

  // Draws an index from a normalized probability vector by inverse CDF walk.
  // Entries equal to zero are never selected.
  int categorical(const std::vector<double>& probs) {
    if (probs.empty()) throw ArgumentError("categorical: empty distribution");
    const double u = uniform();
    double cum = 0.0;
    int last_positive = -1;
    for (size_t i = 0; i < probs.size(); ++i) {
      const double p = probs[i];
      if (p <= 0.0) continue;
      cum += p;
      last_positive = static_cast<int>(i);
      if (u < cum) return last_positive;
    }
    if (last_positive < 0) throw ArgumentError("categorical: no positive mass");
    return last_positive;  // u landed in rounding slack past the final bin
  }

  // First k positions of a seeded Fisher-Yates shuffle of 0..n-1.
  std::vector<size_t> sample_indices(size_t n, size_t k) {
    std::vector<size_t> idx(n);
    for (size_t i = 0; i < n; ++i) idx[i] = i;
    if (k > n) k = n;
    for (size_t i = 0; i < k; ++i) {
      const size_t j = i + static_cast<size_t>(uniform_index(n - i));
      std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    return idx;
  }

 private:
  struct Key {};
  RngStream(Key, uint64_t key) : key_(key) {}

  uint64_t key_ = 0;
  uint64_t counter_ = 0;
};

}  // namespace irltg
