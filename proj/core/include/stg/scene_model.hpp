#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <type_traits>
#include <vector>

#include "stg/math.hpp"

namespace stg {

inline constexpr int kFeatureDim = 9;

/// Structure-of-arrays store of every trainable per-Gaussian parameter.
///
/// Motion coefficients are laid out [i][k][xyz] with k = 0..motion_degree and
/// rotation coefficients [i][k][wxyz] with k = 0..rotation_degree. Coefficient
/// k multiplies (t - temporal_center)^k. Scales, spatial opacity and temporal
/// scale are stored in unconstrained form (log / logit / log).
template <class S>
struct GaussianCloud {
  int motion_degree = 3;
  int rotation_degree = 1;

  std::vector<S> motion;
  std::vector<S> rotation;
  std::vector<S> log_scales;
  std::vector<S> opacity_logit;
  std::vector<S> temporal_center;
  std::vector<S> log_temporal_scale;
  std::vector<S> f_base;
  std::vector<S> f_dir;
  std::vector<S> f_time;

  GaussianCloud() = default;
  GaussianCloud(std::size_t n, int motion_deg, int rotation_deg) { reset(n, motion_deg, rotation_deg); }

  std::size_t size() const { return opacity_logit.size(); }
  bool empty() const { return size() == 0; }

  int motion_stride() const { return 3 * (motion_degree + 1); }
  int rotation_stride() const { return 4 * (rotation_degree + 1); }
  /// Floats per Gaussian across all fields.
  int floats_per_gaussian() const { return motion_stride() + rotation_stride() + 3 + 1 + 1 + 1 + 9; }

  /// Zero-filled cloud of n Gaussians.
  void reset(std::size_t n, int motion_deg, int rotation_deg);
  void resize(std::size_t n);

  /// Throws UsageError if any array length disagrees with size().
  void check_consistent() const;

  Vec3<S> motion_coeff(std::size_t i, int k) const {
    const S* p = motion.data() + i * motion_stride() + 3 * k;
    return {p[0], p[1], p[2]};
  }
  void set_motion_coeff(std::size_t i, int k, const Vec3<S>& v) {
    S* p = motion.data() + i * motion_stride() + 3 * k;
    p[0] = v.x(); p[1] = v.y(); p[2] = v.z();
  }
  Vec4<S> rotation_coeff(std::size_t i, int k) const {
    const S* p = rotation.data() + i * rotation_stride() + 4 * k;
    return {p[0], p[1], p[2], p[3]};
  }
  void set_rotation_coeff(std::size_t i, int k, const Vec4<S>& q) {
    S* p = rotation.data() + i * rotation_stride() + 4 * k;
    p[0] = q[0]; p[1] = q[1]; p[2] = q[2]; p[3] = q[3];
  }
  Vec3<S> vec3(const std::vector<S>& field, std::size_t i) const {
    return {field[3 * i], field[3 * i + 1], field[3 * i + 2]};
  }
  static void set_vec3(std::vector<S>& field, std::size_t i, const Vec3<S>& v) {
    field[3 * i] = v.x(); field[3 * i + 1] = v.y(); field[3 * i + 2] = v.z();
  }

  bool params_finite(std::size_t i) const;

  template <class T>
  GaussianCloud<T> cast() const;
};

/// One named parameter array with its per-Gaussian stride. Order matches the
/// on-disk layout.
template <class Vec>
struct FieldRef {
  std::string_view name;
  Vec* values;
  int stride;
};

template <class Cloud, class Fn>
void for_each_field(Cloud& c, Fn&& fn) {
  using Vec = std::remove_reference_t<decltype((c.motion))>;
  fn(FieldRef<Vec>{"motion", &c.motion, c.motion_stride()});
  fn(FieldRef<Vec>{"rotation", &c.rotation, c.rotation_stride()});
  fn(FieldRef<Vec>{"log_scales", &c.log_scales, 3});
  fn(FieldRef<Vec>{"opacity_logit", &c.opacity_logit, 1});
  fn(FieldRef<Vec>{"temporal_center", &c.temporal_center, 1});
  fn(FieldRef<Vec>{"log_temporal_scale", &c.log_temporal_scale, 1});
  fn(FieldRef<Vec>{"f_base", &c.f_base, 3});
  fn(FieldRef<Vec>{"f_dir", &c.f_dir, 3});
  fn(FieldRef<Vec>{"f_time", &c.f_time, 3});
}

/// Keeps rows where keep[i] is true, preserving order.
template <class S>
void filter_rows(GaussianCloud<S>& c, const std::vector<bool>& keep);

/// Appends a copy of row `src` of `from` to `to`.
template <class S>
void append_row(GaussianCloud<S>& to, const GaussianCloud<S>& from, std::size_t src);

/// Appends n zero rows.
template <class S>
void append_zero_rows(GaussianCloud<S>& c, std::size_t n);

// Time evaluation. All take a normalized time t and throw UsageError for an
// out-of-range index.

template <class S>
Vec3<S> eval_position(const GaussianCloud<S>& c, std::size_t i, S t);

/// Polynomial quaternion (w, x, y, z) before normalization.
template <class S>
Vec4<S> eval_rotation_raw(const GaussianCloud<S>& c, std::size_t i, S t);

/// Unit quaternion; NumericalError if the polynomial norm drops below 1e-8.
template <class S>
Vec4<S> eval_rotation(const GaussianCloud<S>& c, std::size_t i, S t);

template <class S>
S eval_temporal_opacity(const GaussianCloud<S>& c, std::size_t i, S t);

template <class S>
Mat3<S> eval_covariance(const GaussianCloud<S>& c, std::size_t i, S t);

template <class S>
Vec9<S> eval_features(const GaussianCloud<S>& c, std::size_t i, S t);

template <class S>
Mat3<S> quaternion_to_matrix(const Vec4<S>& q);

/// Frame index j of an F-frame sequence mapped to t = j / max(F - 1, 1).
inline double frame_time(int frame, int frame_count) {
  return static_cast<double>(frame) / static_cast<double>(frame_count > 1 ? frame_count - 1 : 1);
}

}  // namespace stg
