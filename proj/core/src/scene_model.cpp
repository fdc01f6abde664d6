#include "stg/scene_model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "stg/errors.hpp"

namespace stg {

namespace {

template <class S>
void check_index(const GaussianCloud<S>& c, std::size_t i) {
  if (i >= c.size())
    throw UsageError("gaussian index " + std::to_string(i) + " out of range (N=" +
                     std::to_string(c.size()) + ")");
}

}  // namespace

template <class S>
void GaussianCloud<S>::reset(std::size_t n, int motion_deg, int rotation_deg) {
  if (motion_deg < 0 || rotation_deg < 0) throw UsageError("polynomial degree must be non-negative");
  motion_degree = motion_deg;
  rotation_degree = rotation_deg;
  for_each_field(*this, [&](auto f) { f.values->assign(n * f.stride, S(0)); });
}

template <class S>
void GaussianCloud<S>::resize(std::size_t n) {
  for_each_field(*this, [&](auto f) { f.values->resize(n * f.stride, S(0)); });
}

template <class S>
void GaussianCloud<S>::check_consistent() const {
  const std::size_t n = size();
  for_each_field(*this, [&](auto f) {
    if (f.values->size() != n * f.stride)
      throw UsageError("field " + std::string(f.name) + " has " + std::to_string(f.values->size()) +
                       " values, expected " + std::to_string(n * f.stride));
  });
}

template <class S>
bool GaussianCloud<S>::params_finite(std::size_t i) const {
  bool ok = true;
  for_each_field(*this, [&](auto f) {
    const S* p = f.values->data() + i * f.stride;
    for (int k = 0; k < f.stride; ++k) ok = ok && std::isfinite(p[k]);
  });
  return ok;
}

template <class S>
template <class T>
GaussianCloud<T> GaussianCloud<S>::cast() const {
  GaussianCloud<T> out;
  out.motion_degree = motion_degree;
  out.rotation_degree = rotation_degree;
  auto conv = [](const std::vector<S>& v) { return std::vector<T>(v.begin(), v.end()); };
  out.motion = conv(motion);
  out.rotation = conv(rotation);
  out.log_scales = conv(log_scales);
  out.opacity_logit = conv(opacity_logit);
  out.temporal_center = conv(temporal_center);
  out.log_temporal_scale = conv(log_temporal_scale);
  out.f_base = conv(f_base);
  out.f_dir = conv(f_dir);
  out.f_time = conv(f_time);
  return out;
}

template <class S>
void filter_rows(GaussianCloud<S>& c, const std::vector<bool>& keep) {
  if (keep.size() != c.size()) throw UsageError("filter_rows: mask length mismatch");
  for_each_field(c, [&](auto f) {
    std::vector<S>& v = *f.values;
    std::size_t out = 0;
    for (std::size_t i = 0; i < keep.size(); ++i) {
      if (!keep[i]) continue;
      if (out != i)
        std::copy_n(v.begin() + i * f.stride, f.stride, v.begin() + out * f.stride);
      ++out;
    }
    v.resize(out * f.stride);
  });
}

template <class S>
void append_row(GaussianCloud<S>& to, const GaussianCloud<S>& from, std::size_t src) {
  if (to.motion_degree != from.motion_degree || to.rotation_degree != from.rotation_degree)
    throw UsageError("append_row: polynomial degrees differ");
  check_index(from, src);
  // Fields are visited in the same order for both clouds.
  std::vector<const std::vector<S>*> sources;
  for_each_field(from, [&](auto f) { sources.push_back(f.values); });
  std::size_t k = 0;
  for_each_field(to, [&](auto f) {
    const std::vector<S>& s = *sources[k++];
    // Copy first: `to` and `from` may alias.
    std::vector<S> row(s.begin() + src * f.stride, s.begin() + (src + 1) * f.stride);
    f.values->insert(f.values->end(), row.begin(), row.end());
  });
}

template <class S>
void append_zero_rows(GaussianCloud<S>& c, std::size_t n) {
  c.resize(c.size() + n);
}

template <class S>
Vec3<S> eval_position(const GaussianCloud<S>& c, std::size_t i, S t) {
  check_index(c, i);
  const S dt = t - c.temporal_center[i];
  Vec3<S> p = Vec3<S>::Zero();
  S power = S(1);
  for (int k = 0; k <= c.motion_degree; ++k) {
    p += c.motion_coeff(i, k) * power;
    power *= dt;
  }
  return p;
}

template <class S>
Vec4<S> eval_rotation_raw(const GaussianCloud<S>& c, std::size_t i, S t) {
  check_index(c, i);
  const S dt = t - c.temporal_center[i];
  Vec4<S> q = Vec4<S>::Zero();
  S power = S(1);
  for (int k = 0; k <= c.rotation_degree; ++k) {
    q += c.rotation_coeff(i, k) * power;
    power *= dt;
  }
  return q;
}

template <class S>
Vec4<S> eval_rotation(const GaussianCloud<S>& c, std::size_t i, S t) {
  const Vec4<S> q = eval_rotation_raw(c, i, t);
  const S n = q.norm();
  if (!(n >= S(1e-8)))
    throw NumericalError("degenerate rotation polynomial for gaussian " + std::to_string(i));
  return q / n;
}

template <class S>
S eval_temporal_opacity(const GaussianCloud<S>& c, std::size_t i, S t) {
  check_index(c, i);
  const S dt = t - c.temporal_center[i];
  return logistic(c.opacity_logit[i]) * std::exp(-std::exp(c.log_temporal_scale[i]) * dt * dt);
}

template <class S>
Mat3<S> quaternion_to_matrix(const Vec4<S>& q) {
  const S w = q[0], x = q[1], y = q[2], z = q[3];
  Mat3<S> r;
  r << S(1) - S(2) * (y * y + z * z), S(2) * (x * y - w * z), S(2) * (x * z + w * y),
      S(2) * (x * y + w * z), S(1) - S(2) * (x * x + z * z), S(2) * (y * z - w * x),
      S(2) * (x * z - w * y), S(2) * (y * z + w * x), S(1) - S(2) * (x * x + y * y);
  return r;
}

template <class S>
Mat3<S> eval_covariance(const GaussianCloud<S>& c, std::size_t i, S t) {
  const Mat3<S> r = quaternion_to_matrix(eval_rotation(c, i, t));
  const Vec3<S> s = c.vec3(c.log_scales, i).array().exp().matrix();
  const Mat3<S> m = r * s.asDiagonal();
  return m * m.transpose();
}

template <class S>
Vec9<S> eval_features(const GaussianCloud<S>& c, std::size_t i, S t) {
  check_index(c, i);
  const S dt = t - c.temporal_center[i];
  Vec9<S> f;
  for (int k = 0; k < 3; ++k) {
    f[k] = c.f_base[3 * i + k];
    f[3 + k] = c.f_dir[3 * i + k];
    f[6 + k] = dt * c.f_time[3 * i + k];
  }
  return f;
}

#define STG_INSTANTIATE(S)                                                               \
  template struct GaussianCloud<S>;                                                      \
  template void filter_rows<S>(GaussianCloud<S>&, const std::vector<bool>&);                \
  template void append_row<S>(GaussianCloud<S>&, const GaussianCloud<S>&, std::size_t);  \
  template void append_zero_rows<S>(GaussianCloud<S>&, std::size_t);                     \
  template Vec3<S> eval_position<S>(const GaussianCloud<S>&, std::size_t, S);            \
  template Vec4<S> eval_rotation_raw<S>(const GaussianCloud<S>&, std::size_t, S);        \
  template Vec4<S> eval_rotation<S>(const GaussianCloud<S>&, std::size_t, S);            \
  template S eval_temporal_opacity<S>(const GaussianCloud<S>&, std::size_t, S);          \
  template Mat3<S> eval_covariance<S>(const GaussianCloud<S>&, std::size_t, S);          \
  template Vec9<S> eval_features<S>(const GaussianCloud<S>&, std::size_t, S);            \
  template Mat3<S> quaternion_to_matrix<S>(const Vec4<S>&);

STG_INSTANTIATE(float)
STG_INSTANTIATE(double)
#undef STG_INSTANTIATE

template GaussianCloud<double> GaussianCloud<float>::cast<double>() const;
template GaussianCloud<float> GaussianCloud<double>::cast<float>() const;
template GaussianCloud<float> GaussianCloud<float>::cast<float>() const;
template GaussianCloud<double> GaussianCloud<double>::cast<double>() const;

}  // namespace stg
