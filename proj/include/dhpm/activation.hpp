#pragma once

#include <Eigen/Dense>

namespace dhpm {

/// Elementwise tanh built on the vectorized exp. Eigen's own double-precision
/// tanh falls back to scalar libm, which dominated the training step.
/// Near zero a short series keeps full relative accuracy.
template <typename Derived>
Eigen::ArrayXXd tanh_array(const Eigen::ArrayBase<Derived>& x) {
  const Eigen::ArrayXXd ax = x.abs();
  const Eigen::ArrayXXd t = (-2.0 * ax).exp();
  const Eigen::ArrayXXd x2 = x.square();
  return (ax < 1e-3).select(x * (1.0 - x2 * (1.0 / 3.0 - x2 * (2.0 / 15.0))),
                            x.sign() * (1.0 - t) / (1.0 + t));
}

}  // namespace dhpm
