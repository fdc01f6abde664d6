#include "stg/shading.hpp"

#include <algorithm>
#include <cmath>

#include <tbb/blocked_range.h>
#include <tbb/parallel_for.h>

#include "stg/errors.hpp"

namespace stg {

template <class S>
MlpHead<S> MlpHead<S>::zeros(int hidden, Activation act) {
  if (hidden <= 0) throw UsageError("MLP hidden width must be positive");
  MlpHead h;
  h.hidden = hidden;
  h.activation = act;
  h.w1.assign(std::size_t(hidden) * kInputs, S(0));
  h.b1.assign(hidden, S(0));
  h.w2.assign(std::size_t(kOutputs) * hidden, S(0));
  h.b2.assign(kOutputs, S(0));
  return h;
}

template <class S>
MlpHead<S> MlpHead<S>::random(int hidden, Activation act, std::mt19937_64& rng) {
  MlpHead h = zeros(hidden, act);
  std::uniform_real_distribution<double> u1(-1.0 / std::sqrt(double(kInputs)), 1.0 / std::sqrt(double(kInputs)));
  std::uniform_real_distribution<double> u2(-1.0 / std::sqrt(double(hidden)), 1.0 / std::sqrt(double(hidden)));
  for (auto& w : h.w1) w = S(u1(rng));
  for (auto& w : h.w2) w = S(u2(rng));
  return h;
}

template <class S>
bool MlpHead<S>::finite() const {
  bool ok = true;
  for_each_block([&](const std::vector<S>& v) {
    for (S x : v) ok = ok && std::isfinite(x);
  });
  return ok;
}

template <class S>
void MlpHead<S>::check_shapes() const {
  if (hidden <= 0 || w1.size() != std::size_t(hidden) * kInputs || b1.size() != std::size_t(hidden) ||
      w2.size() != std::size_t(kOutputs) * hidden || b2.size() != std::size_t(kOutputs))
    throw UsageError("MLP head has inconsistent weight shapes");
}

template <class S>
Vec3<S> ray_direction(const Camera& cam, S x, S y) {
  const Eigen::Vector3d d((double(x) - cam.cx) / cam.fx, (double(y) - cam.cy) / cam.fy, 1.0);
  return (cam.rotation().transpose() * d).normalized().cast<S>();
}

namespace {

template <class S>
void check_inputs(const FeatureImage<S>& f, const Camera& cam, const MlpHead<S>* mlp) {
  if (f.width() != cam.width || f.height() != cam.height)
    throw UsageError("shade: feature image resolution does not match the camera");
  if (mlp) mlp->check_shapes();
}

// Hidden pre-activations for one pixel; returns the MLP output.
template <class S>
Vec3<S> mlp_forward(const MlpHead<S>& m, const S* in, S* pre) {
  Vec3<S> out(m.b2[0], m.b2[1], m.b2[2]);
  for (int h = 0; h < m.hidden; ++h) {
    const S* w = m.w1.data() + std::size_t(h) * MlpHead<S>::kInputs;
    S acc = m.b1[h];
    for (int k = 0; k < MlpHead<S>::kInputs; ++k) acc += w[k] * in[k];
    pre[h] = acc;
    const S a = std::max(acc, S(0));
    for (int c = 0; c < 3; ++c) out[c] += m.w2[std::size_t(c) * m.hidden + h] * a;
  }
  return out;
}

template <class S>
void pixel_inputs(const FeatureImage<S>& f, const Camera& cam, int x, int y, S* in) {
  const S* px = &f.features.at(x, y, 0);
  for (int k = 0; k < 6; ++k) in[k] = px[3 + k];
  const Vec3<S> r = ray_direction<S>(cam, S(x), S(y));
  in[6] = r.x();
  in[7] = r.y();
  in[8] = r.z();
}

template <class S>
S activate(Activation a, S raw) {
  return a == Activation::Sigmoid ? logistic(raw) : std::clamp(raw, S(0), S(1));
}

template <class S>
S activation_grad(Activation a, S raw) {
  if (a == Activation::Sigmoid) {
    const S s = logistic(raw);
    return s * (S(1) - s);
  }
  return (raw >= S(0) && raw <= S(1)) ? S(1) : S(0);
}

}  // namespace

template <class S>
Image<S> shade(const FeatureImage<S>& f, const Camera& cam, const MlpHead<S>* mlp, ShadeRecord<S>* record) {
  check_inputs(f, cam, mlp);
  const int w = cam.width, h = cam.height;
  Image<S> rgb(w, h, 3);
  Image<S> raw(w, h, 3);
  const Activation act = mlp ? mlp->activation : Activation::Clamp;
  tbb::parallel_for(tbb::blocked_range<int>(0, h, 4), [&](const auto& r) {
    std::vector<S> pre(mlp ? mlp->hidden : 0);
    S in[MlpHead<S>::kInputs];
    for (int y = r.begin(); y != r.end(); ++y)
      for (int x = 0; x < w; ++x) {
        Vec3<S> v(f.features.at(x, y, 0), f.features.at(x, y, 1), f.features.at(x, y, 2));
        if (mlp) {
          pixel_inputs(f, cam, x, y, in);
          v += mlp_forward(*mlp, in, pre.data());
        }
        for (int c = 0; c < 3; ++c) {
          raw.at(x, y, c) = v[c];
          rgb.at(x, y, c) = activate(act, v[c]);
        }
      }
  });
  if (record) record->raw = std::move(raw);
  return rgb;
}

template <class S>
ShadeGradients<S> shade_backward(const ShadeRecord<S>& record, const FeatureImage<S>& f, const Camera& cam,
                                 const MlpHead<S>* mlp, const Image<S>& grad_rgb) {
  check_inputs(f, cam, mlp);
  const int w = cam.width, h = cam.height;
  if (grad_rgb.width != w || grad_rgb.height != h || grad_rgb.channels != 3 || !record.raw.same_shape(grad_rgb))
    throw UsageError("shade_backward: gradient shape mismatch");

  ShadeGradients<S> out;
  out.features = Image<S>(w, h, kFeatureDim);
  const Activation act = mlp ? mlp->activation : Activation::Clamp;
  if (mlp) out.mlp = MlpHead<S>::zeros(mlp->hidden, mlp->activation);

  // Per-row weight-gradient partials merged in row order keep the result
  // independent of the worker count.
  const std::size_t n_params = mlp ? mlp->parameter_count() : 0;
  std::vector<S> row_partials(std::size_t(h) * n_params, S(0));

  tbb::parallel_for(tbb::blocked_range<int>(0, h, 4), [&](const auto& r) {
    const int hidden = mlp ? mlp->hidden : 0;
    std::vector<S> pre(hidden), g_hidden(hidden);
    S in[MlpHead<S>::kInputs];
    for (int y = r.begin(); y != r.end(); ++y) {
      S* part = row_partials.data() + std::size_t(y) * n_params;
      S* gw1 = part;
      S* gb1 = gw1 + std::size_t(hidden) * MlpHead<S>::kInputs;
      S* gw2 = gb1 + hidden;
      S* gb2 = gw2 + std::size_t(3) * hidden;
      for (int x = 0; x < w; ++x) {
        S g_raw[3];
        bool any = false;
        for (int c = 0; c < 3; ++c) {
          g_raw[c] = grad_rgb.at(x, y, c) * activation_grad(act, record.raw.at(x, y, c));
          any = any || g_raw[c] != S(0);
        }
        S* gf = &out.features.at(x, y, 0);
        for (int c = 0; c < 3; ++c) gf[c] = g_raw[c];
        if (!mlp || !any) continue;
        pixel_inputs(f, cam, x, y, in);
        mlp_forward(*mlp, in, pre.data());
        for (int c = 0; c < 3; ++c) gb2[c] += g_raw[c];
        S g_in[MlpHead<S>::kInputs] = {};
        for (int k = 0; k < hidden; ++k) {
          const S a = std::max(pre[k], S(0));
          S g = S(0);
          for (int c = 0; c < 3; ++c) {
            gw2[std::size_t(c) * hidden + k] += g_raw[c] * a;
            g += g_raw[c] * mlp->w2[std::size_t(c) * hidden + k];
          }
          if (pre[k] <= S(0)) continue;
          gb1[k] += g;
          const S* wrow = mlp->w1.data() + std::size_t(k) * MlpHead<S>::kInputs;
          S* gwrow = gw1 + std::size_t(k) * MlpHead<S>::kInputs;
          for (int j = 0; j < MlpHead<S>::kInputs; ++j) {
            gwrow[j] += g * in[j];
            g_in[j] += g * wrow[j];
          }
        }
        for (int j = 0; j < 6; ++j) gf[3 + j] = g_in[j];
      }
    }
  });

  if (mlp) {
    std::vector<S> total(n_params, S(0));
    for (int y = 0; y < h; ++y) {
      const S* part = row_partials.data() + std::size_t(y) * n_params;
      for (std::size_t k = 0; k < n_params; ++k) total[k] += part[k];
    }
    std::size_t off = 0;
    out.mlp.for_each_block([&](std::vector<S>& v) {
      std::copy_n(total.begin() + off, v.size(), v.begin());
      off += v.size();
    });
  }
  return out;
}

#define STG_INSTANTIATE(S)                                                                            \
  template struct MlpHead<S>;                                                                         \
  template Vec3<S> ray_direction<S>(const Camera&, S, S);                                             \
  template Image<S> shade<S>(const FeatureImage<S>&, const Camera&, const MlpHead<S>*, ShadeRecord<S>*); \
  template ShadeGradients<S> shade_backward<S>(const ShadeRecord<S>&, const FeatureImage<S>&,         \
                                               const Camera&, const MlpHead<S>*, const Image<S>&);

STG_INSTANTIATE(float)
STG_INSTANTIATE(double)
#undef STG_INSTANTIATE

}  // namespace stg
