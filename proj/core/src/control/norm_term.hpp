#pragma once

#include "musculo/rmae/sensor.hpp"

namespace musculo::control::detail {

// w * |x|; adds w * x / |x| to grad when requested (zero subgradient at 0)
inline double norm_term(const Vector& x, double w, Eigen::Ref<Vector> grad, bool want_grad) {
  const double n = x.norm();
  if (want_grad && n > 1e-12) grad += (w / n) * x;
  return w * n;
}

// w * |x|^2; adds 2 w x to grad when requested
inline double squared_term(const Vector& x, double w, Eigen::Ref<Vector> grad, bool want_grad) {
  if (want_grad) grad += (2.0 * w) * x;
  return w * x.squaredNorm();
}

}  // namespace musculo::control::detail
