#pragma once

#include <cmath>
#include <functional>

#include "irltg/mat.hpp"

namespace irltg {

// Central-difference gradient of a deterministic scalar function of a
// ParamStore: (f(p + h e) - f(p - h e)) / 2h per coordinate. Used as the
// independent oracle for every hand-derived gradient in this library.
inline ParamStore finite_diff_grad(const std::function<double(const ParamStore&)>& f,
                                   const ParamStore& params, double h) {
  if (h <= 0.0) throw ArgumentError("finite_diff_grad: h must be positive");

  ParamStore grads;
  ParamStore work = params;
  for (auto& [name, m] : work) {
    Mat g(m.rows, m.cols);
    for (size_t i = 0; i < m.data.size(); ++i) {
      const double saved = m.data[i];
      m.data[i] = saved + h;
      const double fp = f(work);
      m.data[i] = saved - h;
      const double fm = f(work);
      m.data[i] = saved;
      if (!std::isfinite(fp) || !std::isfinite(fm))
        throw NumericError("finite_diff_grad: non-finite function value at " + name);
      g.data[i] = (fp - fm) / (2.0 * h);
    }
    grads.emplace(name, std::move(g));
  }
  return grads;
}

}  // namespace irltg
