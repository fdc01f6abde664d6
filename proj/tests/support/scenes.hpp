#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "stg/camera.hpp"
#include "stg/rasterizer.hpp"
#include "stg/scene_model.hpp"
#include "stg/shading.hpp"
#include "stg/trainer.hpp"

namespace stg::testing {

/// Camera at the origin looking down +z.
inline Camera axis_camera(int w, int h, double f) {
  Camera c;
  c.width = w;
  c.height = h;
  c.fx = c.fy = f;
  c.cx = 0.5 * (w - 1);
  c.cy = 0.5 * (h - 1);
  return c;
}

struct RandomCloudOptions {
  double depth_min = 3.0, depth_max = 5.0;
  double lateral = 1.5;  // |x|, |y| bound at depth 4
  double scale_min = 0.15, scale_max = 0.4;
  double opacity_min = 0.3, opacity_max = 0.8;
  double motion = 0.1;       // magnitude of higher-order motion coefficients
  double rotation = 0.2;     // magnitude of the linear rotation coefficient
  double log_temporal = 1.0; // |log sτ| bound
  double feature = 1.0;
};

template <class S>
GaussianCloud<S> random_cloud(std::mt19937_64& rng, std::size_t n, const RandomCloudOptions& o = {}) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> g(0.0, 1.0);
  auto range = [&](double lo, double hi) { return S(lo + (hi - lo) * u(rng)); };
  GaussianCloud<S> c(n, 3, 1);
  for (std::size_t i = 0; i < n; ++i) {
    const S z = range(o.depth_min, o.depth_max);
    c.set_motion_coeff(i, 0, Vec3<S>(range(-o.lateral, o.lateral) * z / S(4), range(-o.lateral, o.lateral) * z / S(4), z));
    for (int k = 1; k <= 3; ++k)
      c.set_motion_coeff(i, k, Vec3<S>(S(o.motion * g(rng)), S(o.motion * g(rng)), S(o.motion * g(rng))));
    Vec4<S> q(S(g(rng)), S(g(rng)), S(g(rng)), S(g(rng)));
    c.set_rotation_coeff(i, 0, q.normalized());
    c.set_rotation_coeff(i, 1, Vec4<S>(S(o.rotation * g(rng)), S(o.rotation * g(rng)), S(o.rotation * g(rng)),
                                       S(o.rotation * g(rng))));
    for (int k = 0; k < 3; ++k) c.log_scales[3 * i + k] = std::log(range(o.scale_min, o.scale_max));
    c.opacity_logit[i] = logit(range(o.opacity_min, o.opacity_max));
    c.temporal_center[i] = range(0.0, 1.0);
    c.log_temporal_scale[i] = range(-o.log_temporal, o.log_temporal);
    for (int k = 0; k < 3; ++k) {
      c.f_base[3 * i + k] = range(-o.feature, o.feature);
      c.f_dir[3 * i + k] = range(-o.feature, o.feature);
      c.f_time[3 * i + k] = range(-o.feature, o.feature);
    }
  }
  return c;
}

/// True when no pixel sits near a discontinuity of the compositing rule:
/// alpha near the skip or clamp thresholds, transmittance near the stop
/// threshold, or two overlapping splats at nearly equal depth.
template <class S>
bool well_conditioned(const GaussianCloud<S>& cloud, const Camera& cam, S t, const RenderOptions& opts = {},
                      double margin = 0.02) {
  std::vector<ProjectedSplat<S>> splats;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    ProjectedSplat<S> p;
    if (project_gaussian(cloud, i, cam, t, opts, p)) splats.push_back(p);
  }
  std::sort(splats.begin(), splats.end(), [](const auto& a, const auto& b) { return a.depth < b.depth; });
  for (std::size_t k = 1; k < splats.size(); ++k)
    if (std::abs(double(splats[k].depth - splats[k - 1].depth)) < 1e-3) return false;
  auto near = [&](double v, double ref) { return std::abs(v - ref) < margin * ref; };
  for (int y = 0; y < cam.height; ++y)
    for (int x = 0; x < cam.width; ++x) {
      double trans = 1.0;
      for (const auto& s : splats) {
        const double dx = double(x) - double(s.center.x()), dy = double(y) - double(s.center.y());
        const double power = -0.5 * (double(s.conic[0]) * dx * dx + double(s.conic[2]) * dy * dy) -
                             double(s.conic[1]) * dx * dy;
        const double raw = double(s.opacity) * std::exp(power);
        if (near(raw, opts.alpha_min) || near(raw, opts.alpha_max)) return false;
        const double alpha = std::min(opts.alpha_max, raw);
        if (alpha < opts.alpha_min) continue;
        trans *= 1.0 - alpha;
        if (near(trans, opts.transmittance_min)) return false;
        if (trans < opts.transmittance_min) break;
      }
    }
  return true;
}

/// Relative error ‖a − b‖ / ‖b‖ (absolute when b vanishes).
inline double relative_error(const std::vector<double>& a, const std::vector<double>& b) {
  double num = 0, den = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    den += b[i] * b[i];
  }
  return den > 0 ? std::sqrt(num / den) : std::sqrt(num);
}

struct ClassError {
  std::string name;
  double error = 0;
  double norm = 0;  // ‖finite difference‖
};

/// Central differences of `loss` with respect to every element of every
/// field, compared per field with `analytic`.
inline std::vector<ClassError> compare_cloud_gradients(GaussianCloud<double> cloud, const GaussianCloud<double>& analytic,
                                                      const std::function<double(const GaussianCloud<double>&)>& loss,
                                                      double h = 1e-4) {
  std::vector<ClassError> out;
  std::vector<const std::vector<double>*> an;
  for_each_field(analytic, [&](auto f) { an.push_back(f.values); });
  std::size_t k = 0;
  for_each_field(cloud, [&](auto f) {
    std::vector<double>& v = *f.values;
    std::vector<double> fd(v.size());
    for (std::size_t j = 0; j < v.size(); ++j) {
      const double orig = v[j];
      v[j] = orig + h;
      const double lp = loss(cloud);
      v[j] = orig - h;
      const double lm = loss(cloud);
      v[j] = orig;
      fd[j] = (lp - lm) / (2 * h);
    }
    double norm = 0;
    for (double x : fd) norm += x * x;
    out.push_back({std::string(f.name), relative_error(*an[k], fd), std::sqrt(norm)});
    ++k;
  });
  return out;
}

inline std::vector<ClassError> compare_mlp_gradients(MlpHead<double> mlp, const MlpHead<double>& analytic,
                                                    const std::function<double(const MlpHead<double>&)>& loss,
                                                    double h = 1e-4) {
  static const char* names[] = {"mlp_w1", "mlp_b1", "mlp_w2", "mlp_b2"};
  std::vector<const std::vector<double>*> an;
  analytic.for_each_block([&](const std::vector<double>& b) { an.push_back(&b); });
  std::vector<std::vector<double>*> blocks;
  mlp.for_each_block([&](std::vector<double>& b) { blocks.push_back(&b); });
  std::vector<ClassError> out;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    std::vector<double>& v = *blocks[b];
    std::vector<double> fd(v.size());
    for (std::size_t j = 0; j < v.size(); ++j) {
      const double orig = v[j];
      v[j] = orig + h;
      const double lp = loss(mlp);
      v[j] = orig - h;
      const double lm = loss(mlp);
      v[j] = orig;
      fd[j] = (lp - lm) / (2 * h);
    }
    double norm = 0;
    for (double x : fd) norm += x * x;
    out.push_back({names[b], relative_error(*an[b], fd), std::sqrt(norm)});
  }
  return out;
}

/// Σ w ⊙ img.
template <class S>
double weighted_sum(const Image<S>& img, const Image<S>& w) {
  double acc = 0;
  for (std::size_t i = 0; i < img.data.size(); ++i) acc += double(img.data[i]) * double(w.data[i]);
  return acc;
}

template <class S>
Image<S> random_image(std::mt19937_64& rng, int w, int h, int c, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Image<S> img(w, h, c);
  for (auto& v : img.data) v = S(u(rng));
  return img;
}

/// Seeded gradient scene: a well-conditioned random cloud at 16×16.
struct GradientScene {
  GaussianCloud<double> cloud;
  Camera camera;
  double time = 0.4;
};

inline GradientScene gradient_scene(std::uint64_t seed, std::size_t n = 20) {
  GradientScene s;
  s.camera = axis_camera(16, 16, 16.0);
  for (std::uint64_t attempt = 0;; ++attempt) {
    std::mt19937_64 rng(seed * 1000 + attempt);
    s.cloud = random_cloud<double>(rng, n);
    if (well_conditioned(s.cloud, s.camera, s.time)) return s;
  }
}

/// Render → shade → loss against `gt`, all in double.
struct Chain {
  Camera camera;
  double time = 0;
  Image<double> gt;
  double lambda_dssim = 0.2;

  double loss(const GaussianCloud<double>& cloud, const MlpHead<double>& mlp) const {
    const auto out = render_forward(cloud, camera, time);
    return compute_loss<double>(shade(out.image, camera, &mlp), gt, lambda_dssim, nullptr);
  }

  std::pair<GaussianCloud<double>, MlpHead<double>> gradients(const GaussianCloud<double>& cloud,
                                                             const MlpHead<double>& mlp) const {
    const auto out = render_forward(cloud, camera, time);
    ShadeRecord<double> rec;
    const auto rgb = shade(out.image, camera, &mlp, &rec);
    Image<double> g;
    compute_loss(rgb, gt, lambda_dssim, &g);
    auto sg = shade_backward(rec, out.image, camera, &mlp, g);
    auto pg = render_backward(cloud, out.record, sg.features);
    return {std::move(pg.grads), std::move(sg.mlp)};
  }
};

/// Per-class FD errors of the full chain on a seeded gradient scene, MLP
/// blocks included.
inline std::vector<ClassError> chain_gradient_errors(std::uint64_t seed) {
  const auto s = gradient_scene(seed);
  std::mt19937_64 rng(seed + 7);
  auto mlp = MlpHead<float>::random(32, Activation::Sigmoid, rng).cast<double>();
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  for (auto& b : mlp.b1) b = u(rng);
  for (auto& b : mlp.b2) b = u(rng);
  Chain chain{s.camera, s.time, random_image<double>(rng, s.camera.width, s.camera.height, 3, 0.0, 1.0)};
  const auto [gc, gm] = chain.gradients(s.cloud, mlp);
  auto errors = compare_cloud_gradients(s.cloud, gc, [&](const GaussianCloud<double>& c) { return chain.loss(c, mlp); });
  // A small step keeps the ReLU kinks of the hidden layer out of the stencil.
  const auto mlp_errors =
      compare_mlp_gradients(mlp, gm, [&](const MlpHead<double>& m) { return chain.loss(s.cloud, m); }, 1e-6);
  errors.insert(errors.end(), mlp_errors.begin(), mlp_errors.end());
  return errors;
}

}  // namespace stg::testing
