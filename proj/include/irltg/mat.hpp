#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "irltg/errors.hpp"

namespace irltg {

// Dense row-major binary64 matrix. Vectors are 1 x n matrices so that every
// parameter lives uniformly in a ParamStore.
struct Mat {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;  // rows * cols, row-major

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), data(checked_size(r, c), 0.0) {}

  static size_t checked_size(int r, int c) {
    if (r < 0 || c < 0) throw ArgumentError("Mat: negative dimension");
    return static_cast<size_t>(r) * static_cast<size_t>(c);
  }

  static Mat zeros(int r, int c) { return Mat(r, c); }

  static Mat row(std::vector<double> v) {
    Mat m;
    m.rows = 1;
    m.cols = static_cast<int>(v.size());
    m.data = std::move(v);
    return m;
  }

  double& operator()(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
  double operator()(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }

  // Pointer to the start of a row.
  double* row_ptr(int r) { return data.data() + static_cast<size_t>(r) * cols; }
  const double* row_ptr(int r) const { return data.data() + static_cast<size_t>(r) * cols; }

  size_t size() const { return data.size(); }

  bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }

  bool all_finite() const {
    for (double v : data) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

  void fill(double v) { std::fill(data.begin(), data.end(), v); }

  Mat& operator+=(const Mat& o) {
    if (!same_shape(o)) throw ArgumentError("Mat::operator+=: shape mismatch");
    for (size_t i = 0; i < data.size(); ++i) data[i] += o.data[i];
    return *this;
  }

  Mat& operator*=(double s) {
    for (double& v : data) v *= s;
    return *this;
  }
};

// y += x * W for a row vector x (len in), W (in x out), y (len out).
inline void addmul_vec_mat(const double* x, const Mat& w, double* y) {
  for (int r = 0; r < w.rows; ++r) {
    const double xr = x[r];
    if (xr == 0.0) continue;
    const double* wr = w.row_ptr(r);
    for (int c = 0; c < w.cols; ++c) y[c] += xr * wr[c];
  }
}

// dx += W * dy, the adjoint of addmul_vec_mat with respect to x.
inline void addmul_mat_vec(const Mat& w, const double* dy, double* dx) {
  for (int r = 0; r < w.rows; ++r) {
    const double* wr = w.row_ptr(r);
    double acc = 0.0;
    for (int c = 0; c < w.cols; ++c) acc += wr[c] * dy[c];
    dx[r] += acc;
  }
}

// dW += outer(x, dy).
inline void add_outer(const double* x, const double* dy, Mat& dw) {
  for (int r = 0; r < dw.rows; ++r) {
    const double xr = x[r];
    if (xr == 0.0) continue;
    double* wr = dw.row_ptr(r);
    for (int c = 0; c < dw.cols; ++c) wr[c] += xr * dy[c];
  }
}

// Named parameter collection. std::map keeps iteration sorted by name, which
// fixes the order used by checkpoints, Adam and finite differences.
using ParamStore = std::map<std::string, Mat>;

inline void store_add_scaled(ParamStore& dst, const ParamStore& src, double s) {
  for (const auto& [name, m] : src) {
    auto it = dst.find(name);
    if (it == dst.end()) {
      Mat copy = m;
      copy *= s;
      dst.emplace(name, std::move(copy));
    } else {
      if (!it->second.same_shape(m)) throw ArgumentError("store_add_scaled: shape mismatch for " + name);
      for (size_t i = 0; i < m.data.size(); ++i) it->second.data[i] += s * m.data[i];
    }
  }
}

inline double store_sq_norm(const ParamStore& s) {
  double acc = 0.0;
  for (const auto& [name, m] : s) {
    (void)name;
    for (double v : m.data) acc += v * v;
  }
  return acc;
}

inline bool store_all_finite(const ParamStore& s) {
  for (const auto& [name, m] : s) {
    (void)name;
    if (!m.all_finite()) return false;
  }
  return true;
}

// Rescales grads in place so the global L2 norm is at most max_norm.
// max_norm <= 0 disables clipping.
inline void clip_global_norm(ParamStore& grads, double max_norm) {
  if (max_norm <= 0.0) return;
  const double norm = std::sqrt(store_sq_norm(grads));
  if (norm <= max_norm || norm == 0.0) return;
  const double scale = max_norm / norm;
  for (auto& [name, m] : grads) {
    (void)name;
    m *= scale;
  }
}

}  // namespace irltg
