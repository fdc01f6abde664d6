#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace stg {

template <class S> using Vec2 = Eigen::Matrix<S, 2, 1>;
template <class S> using Vec3 = Eigen::Matrix<S, 3, 1>;
template <class S> using Vec4 = Eigen::Matrix<S, 4, 1>;
template <class S> using Mat2 = Eigen::Matrix<S, 2, 2>;
template <class S> using Mat3 = Eigen::Matrix<S, 3, 3>;
template <class S> using Mat23 = Eigen::Matrix<S, 2, 3>;
template <class S> using Vec9 = Eigen::Matrix<S, 9, 1>;

template <class S>
inline S logistic(S x) {
  return S(1) / (S(1) + std::exp(-x));
}

template <class S>
inline S logit(S p) {
  return std::log(p / (S(1) - p));
}

}  // namespace stg
