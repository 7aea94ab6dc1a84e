#pragma once

#include <Eigen/Core>

#include <cmath>
#include <numbers>

namespace dcbf {

using Vec2 = Eigen::Vector2d;

/// Rescales `v` so its Euclidean norm does not exceed `max_norm`.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Derived::RowsAtCompileTime, 1>
clamp_norm(const Eigen::MatrixBase<Derived>& v, typename Derived::Scalar max_norm) {
  using Scalar = typename Derived::Scalar;
  const Scalar n = v.norm();
  if (n <= max_norm) return v;
  return v * (max_norm / n);
}

/// Componentwise clamp into the square [-half, half]^2.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, 2, 1>
clamp_box(const Eigen::MatrixBase<Derived>& p, typename Derived::Scalar half) {
  return p.cwiseMax(-half).cwiseMin(half);
}

inline double rad_to_deg(double rad) { return rad * 180.0 / std::numbers::pi; }
inline double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }

}  // namespace dcbf
