#pragma once

#include <cmath>
#include <vector>

#include "irltg/mat.hpp"
#include "irltg/rng.hpp"

namespace irltg {

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// Hidden/cell pair of a single-layer LSTM.
struct LstmState {
  std::vector<double> hidden;
  std::vector<double> cell;

  explicit LstmState(int d_hid = 0) : hidden(d_hid, 0.0), cell(d_hid, 0.0) {}
};

// Gate parameters. Each weight maps the concatenated [input; hidden] row
// vector (d_in + d_hid) to d_hid gate pre-activations.
struct LstmParams {
  Mat w_i, w_f, w_o, w_c;
  Mat b_i, b_f, b_o, b_c;  // 1 x d_hid

  LstmParams() = default;
  LstmParams(int d_in, int d_hid)
      : w_i(d_in + d_hid, d_hid),
        w_f(d_in + d_hid, d_hid),
        w_o(d_in + d_hid, d_hid),
        w_c(d_in + d_hid, d_hid),
        b_i(1, d_hid),
        b_f(1, d_hid),
        b_o(1, d_hid),
        b_c(1, d_hid) {}

  int d_hid() const { return w_i.cols; }
  int d_in() const { return w_i.rows - w_i.cols; }
};

// Everything the backward pass needs from one forward step.
struct LstmStepCache {
  std::vector<double> z;       // [x; h_prev]
  std::vector<double> i, f, o, g;
  std::vector<double> c_prev;
  std::vector<double> c, tanh_c;
};

// Standard cell update: sigmoid input/forget/output gates, tanh candidate,
// tanh on the cell for the hidden output. Overwrites `state`, fills `cache`
// when non-null.
inline void lstm_step(const LstmParams& p, const double* x, LstmState& state,
                      LstmStepCache* cache) {
  const int d_hid = p.d_hid();
  const int d_in = p.d_in();

  std::vector<double> z(static_cast<size_t>(d_in) + d_hid);
  for (int k = 0; k < d_in; ++k) z[k] = x[k];
  for (int k = 0; k < d_hid; ++k) z[d_in + k] = state.hidden[k];

  std::vector<double> gi(p.b_i.data), gf(p.b_f.data), go(p.b_o.data), gc(p.b_c.data);
  addmul_vec_mat(z.data(), p.w_i, gi.data());
  addmul_vec_mat(z.data(), p.w_f, gf.data());
  addmul_vec_mat(z.data(), p.w_o, go.data());
  addmul_vec_mat(z.data(), p.w_c, gc.data());

  std::vector<double> c_prev = state.cell;
  std::vector<double> tanh_c(d_hid);
  for (int k = 0; k < d_hid; ++k) {
    gi[k] = sigmoid(gi[k]);
    gf[k] = sigmoid(gf[k]);
    go[k] = sigmoid(go[k]);
    gc[k] = std::tanh(gc[k]);
    state.cell[k] = gf[k] * c_prev[k] + gi[k] * gc[k];
    tanh_c[k] = std::tanh(state.cell[k]);
    state.hidden[k] = go[k] * tanh_c[k];
  }

  if (cache) {
    cache->z = std::move(z);
    cache->i = std::move(gi);
    cache->f = std::move(gf);
    cache->o = std::move(go);
    cache->g = std::move(gc);
    cache->c_prev = std::move(c_prev);
    cache->c = state.cell;
    cache->tanh_c = std::move(tanh_c);
  }
}

// Gradient accumulator matching LstmParams.
struct LstmGrads {
  Mat w_i, w_f, w_o, w_c;
  Mat b_i, b_f, b_o, b_c;

  LstmGrads() = default;
  LstmGrads(int d_in, int d_hid)
      : w_i(d_in + d_hid, d_hid),
        w_f(d_in + d_hid, d_hid),
        w_o(d_in + d_hid, d_hid),
        w_c(d_in + d_hid, d_hid),
        b_i(1, d_hid),
        b_f(1, d_hid),
        b_o(1, d_hid),
        b_c(1, d_hid) {}
};

// One BPTT step. On entry dh/dc hold the gradients flowing into this step's
// outputs; on exit they hold the gradients for the previous step's hidden and
// cell. dx (length d_in) receives the gradient for this step's input.
inline void lstm_step_backward(const LstmParams& p, const LstmStepCache& cache,
                               std::vector<double>& dh, std::vector<double>& dc,
                               double* dx, LstmGrads& grads) {
  const int d_hid = p.d_hid();
  const int d_in = p.d_in();

  std::vector<double> dpre_i(d_hid), dpre_f(d_hid), dpre_o(d_hid), dpre_g(d_hid);
  for (int k = 0; k < d_hid; ++k) {
    const double do_k = dh[k] * cache.tanh_c[k];
    const double dc_k = dc[k] + dh[k] * cache.o[k] * (1.0 - cache.tanh_c[k] * cache.tanh_c[k]);
    const double di_k = dc_k * cache.g[k];
    const double df_k = dc_k * cache.c_prev[k];
    const double dg_k = dc_k * cache.i[k];
    dc[k] = dc_k * cache.f[k];  // toward c_{t-1}
    dpre_i[k] = di_k * cache.i[k] * (1.0 - cache.i[k]);
    dpre_f[k] = df_k * cache.f[k] * (1.0 - cache.f[k]);
    dpre_o[k] = do_k * cache.o[k] * (1.0 - cache.o[k]);
    dpre_g[k] = dg_k * (1.0 - cache.g[k] * cache.g[k]);
  }

  for (int k = 0; k < d_hid; ++k) {
    grads.b_i.data[k] += dpre_i[k];
    grads.b_f.data[k] += dpre_f[k];
    grads.b_o.data[k] += dpre_o[k];
    grads.b_c.data[k] += dpre_g[k];
  }
  add_outer(cache.z.data(), dpre_i.data(), grads.w_i);
  add_outer(cache.z.data(), dpre_f.data(), grads.w_f);
  add_outer(cache.z.data(), dpre_o.data(), grads.w_o);
  add_outer(cache.z.data(), dpre_g.data(), grads.w_c);

  std::vector<double> dz(static_cast<size_t>(d_in) + d_hid, 0.0);
  addmul_mat_vec(p.w_i, dpre_i.data(), dz.data());
  addmul_mat_vec(p.w_f, dpre_f.data(), dz.data());
  addmul_mat_vec(p.w_o, dpre_o.data(), dz.data());
  addmul_mat_vec(p.w_c, dpre_g.data(), dz.data());

  for (int k = 0; k < d_in; ++k) dx[k] += dz[k];
  for (int k = 0; k < d_hid; ++k) dh[k] = dz[d_in + k];
}

inline void lstm_init_uniform(LstmParams& p, RngStream& rng, double scale,
                              double forget_bias) {
  for (Mat* m : {&p.w_i, &p.w_f, &p.w_o, &p.w_c, &p.b_i, &p.b_f, &p.b_o, &p.b_c})
    for (double& v : m->data) v = rng.uniform(-scale, scale);
  for (double& v : p.b_f.data) v += forget_bias;
}

inline void lstm_init_normal(LstmParams& p, RngStream& rng) {
  for (Mat* m : {&p.w_i, &p.w_f, &p.w_o, &p.w_c, &p.b_i, &p.b_f, &p.b_o, &p.b_c})
    for (double& v : m->data) v = rng.normal();
}

}  // namespace irltg
