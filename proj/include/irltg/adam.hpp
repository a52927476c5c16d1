#pragma once

#include <cmath>
#include <cstdint>

#include "irltg/mat.hpp"

namespace irltg {

struct AdamOptions {
  double lr = 0.005;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::map<std::string, Mat> m;  // first moments, shapes mirror the params
  std::map<std::string, Mat> v;  // second moments
  int64_t t = 0;
};

// One Adam step with bias correction. Sign convention: gradient ASCENT, i.e.
// params move along +grads. Callers maximizing an objective pass its gradient
// directly; callers minimizing a loss pass the negated loss gradient.
inline void adam_step(ParamStore& params, const ParamStore& grads, AdamState& state,
                      const AdamOptions& opt = {}) {
  if (opt.lr <= 0.0) throw ArgumentError("adam_step: lr must be positive");
  if (opt.beta1 < 0.0 || opt.beta1 >= 1.0 || opt.beta2 < 0.0 || opt.beta2 >= 1.0)
    throw ArgumentError("adam_step: betas must lie in [0, 1)");

  state.t += 1;
  const double bc1 = 1.0 - std::pow(opt.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(opt.beta2, static_cast<double>(state.t));

  for (auto& [name, p] : params) {
    auto git = grads.find(name);
    if (git == grads.end() || !git->second.same_shape(p))
      throw ArgumentError("adam_step: missing or mismatched gradient for " + name);
    const Mat& g = git->second;

    Mat& m = state.m.try_emplace(name, p.rows, p.cols).first->second;
    Mat& v = state.v.try_emplace(name, p.rows, p.cols).first->second;
    if (!m.same_shape(p) || !v.same_shape(p))
      throw ArgumentError("adam_step: stale state shape for " + name);

    for (size_t i = 0; i < p.data.size(); ++i) {
      m.data[i] = opt.beta1 * m.data[i] + (1.0 - opt.beta1) * g.data[i];
      v.data[i] = opt.beta2 * v.data[i] + (1.0 - opt.beta2) * g.data[i] * g.data[i];
      const double mhat = m.data[i] / bc1;
      const double vhat = v.data[i] / bc2;
      p.data[i] += opt.lr * mhat / (std::sqrt(vhat) + opt.eps);
    }
  }
}

}  // namespace irltg
