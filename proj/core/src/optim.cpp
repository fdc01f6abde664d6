#include <cmath>

#include "stg/errors.hpp"
#include "stg/metrics.hpp"
#include "stg/trainer.hpp"

namespace stg {

template <class S>
double compute_loss(const Image<S>& rendered, const Image<S>& gt, double lambda, Image<S>* grad) {
  require_same_shape(rendered, gt, "compute_loss");
  if (!(lambda >= 0 && lambda <= 1)) throw UsageError("compute_loss: lambda_dssim must be in [0, 1]");
  const std::size_t n = rendered.data.size();
  if (n == 0) throw UsageError("compute_loss: empty image");
  const double inv_n = 1.0 / double(n);

  double l1 = 0;
  for (std::size_t i = 0; i < n; ++i) l1 += std::abs(double(rendered.data[i]) - double(gt.data[i]));
  l1 *= inv_n;

  double d = 0;
  Image<S> ssim_grad;
  if (lambda > 0) d = 0.5 * (1.0 - ssim(rendered, gt, 1.0, grad ? &ssim_grad : nullptr));

  if (grad) {
    *grad = Image<S>(rendered.width, rendered.height, rendered.channels);
    const double w1 = (1.0 - lambda) * inv_n;
    for (std::size_t i = 0; i < n; ++i) {
      const double diff = double(rendered.data[i]) - double(gt.data[i]);
      double g = diff > 0 ? w1 : diff < 0 ? -w1 : 0.0;
      if (lambda > 0) g -= 0.5 * lambda * double(ssim_grad.data[i]);
      grad->data[i] = S(g);
    }
  }
  return (1.0 - lambda) * l1 + lambda * d;
}

namespace {

// Bias corrections c1 = 1 - β1^t and c2 = 1 - β2^t precomputed by the caller.
template <class S>
void adam_range(S* p, const S* g, S* m, S* v, std::size_t n, double lr, double c1, double c2) {
  for (std::size_t i = 0; i < n; ++i) {
    const double gi = double(g[i]);
    const double mi = kAdamBeta1 * double(m[i]) + (1.0 - kAdamBeta1) * gi;
    const double vi = kAdamBeta2 * double(v[i]) + (1.0 - kAdamBeta2) * gi * gi;
    m[i] = S(mi);
    v[i] = S(vi);
    p[i] = S(double(p[i]) - lr * (mi / c1) / (std::sqrt(vi / c2) + kAdamEps));
  }
}

}  // namespace

template <class S>
void adam_update(std::span<S> p, std::span<const S> g, std::span<S> m, std::span<S> v, double lr, long step) {
  if (g.size() != p.size() || m.size() != p.size() || v.size() != p.size())
    throw UsageError("adam_update: array lengths differ");
  if (step < 1) throw UsageError("adam_update: step must be >= 1");
  adam_range(p.data(), g.data(), m.data(), v.data(), p.size(), lr, 1.0 - std::pow(kAdamBeta1, double(step)),
             1.0 - std::pow(kAdamBeta2, double(step)));
}

AdamState AdamState::like(const GaussianCloud<float>& cloud, const MlpHead<float>* mlp) {
  AdamState s;
  s.m.reset(cloud.size(), cloud.motion_degree, cloud.rotation_degree);
  s.v.reset(cloud.size(), cloud.motion_degree, cloud.rotation_degree);
  if (mlp) {
    s.mlp_m = MlpHead<float>::zeros(mlp->hidden, mlp->activation);
    s.mlp_v = MlpHead<float>::zeros(mlp->hidden, mlp->activation);
  }
  return s;
}

void adam_step(GaussianCloud<float>& cloud, const GaussianCloud<float>& grads, MlpHead<float>* mlp,
               const MlpHead<float>* mlp_grads, AdamState& st, const LearningRates& lr) {
  cloud.check_consistent();
  grads.check_consistent();
  st.m.check_consistent();
  st.v.check_consistent();
  if (grads.size() != cloud.size() || st.m.size() != cloud.size() || st.v.size() != cloud.size() ||
      grads.motion_degree != cloud.motion_degree || grads.rotation_degree != cloud.rotation_degree ||
      st.m.motion_degree != cloud.motion_degree || st.m.rotation_degree != cloud.rotation_degree)
    throw UsageError("adam_step: gradient or moment shapes do not match the cloud");
  if (bool(mlp) != bool(mlp_grads)) throw UsageError("adam_step: MLP and MLP gradients must both be given");
  if (mlp && (mlp_grads->parameter_count() != mlp->parameter_count() ||
              st.mlp_m.parameter_count() != mlp->parameter_count()))
    throw UsageError("adam_step: MLP gradient or moment shapes do not match");

  const long step = ++st.step;
  const double c1 = 1.0 - std::pow(kAdamBeta1, double(step));
  const double c2 = 1.0 - std::pow(kAdamBeta2, double(step));

  // Fields visited in layout order for all four clouds.
  std::vector<std::vector<float>*> p, m, v;
  std::vector<const std::vector<float>*> g;
  for_each_field(cloud, [&](auto f) { p.push_back(f.values); });
  for_each_field(grads, [&](auto f) { g.push_back(f.values); });
  for_each_field(st.m, [&](auto f) { m.push_back(f.values); });
  for_each_field(st.v, [&](auto f) { v.push_back(f.values); });
  const double rates[] = {0, lr.rotation, lr.scale, lr.opacity, lr.temporal_center, lr.temporal_scale,
                          lr.features, lr.features, lr.features};

  // Motion: the constant term is the position group, higher terms the motion
  // group.
  const std::size_t stride = cloud.motion_stride();
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const std::size_t off = i * stride;
    adam_range(p[0]->data() + off, g[0]->data() + off, m[0]->data() + off, v[0]->data() + off, 3, lr.position, c1,
               c2);
    adam_range(p[0]->data() + off + 3, g[0]->data() + off + 3, m[0]->data() + off + 3, v[0]->data() + off + 3,
               stride - 3, lr.motion, c1, c2);
  }
  for (std::size_t f = 1; f < p.size(); ++f)
    adam_range(p[f]->data(), g[f]->data(), m[f]->data(), v[f]->data(), p[f]->size(), rates[f], c1, c2);

  if (mlp) {
    std::vector<std::vector<float>*> mp, mm, mv;
    std::vector<const std::vector<float>*> mg;
    mlp->for_each_block([&](std::vector<float>& b) { mp.push_back(&b); });
    mlp_grads->for_each_block([&](const std::vector<float>& b) { mg.push_back(&b); });
    st.mlp_m.for_each_block([&](std::vector<float>& b) { mm.push_back(&b); });
    st.mlp_v.for_each_block([&](std::vector<float>& b) { mv.push_back(&b); });
    for (std::size_t b = 0; b < mp.size(); ++b)
      adam_range(mp[b]->data(), mg[b]->data(), mm[b]->data(), mv[b]->data(), mp[b]->size(), lr.mlp, c1, c2);
  }
}

template double compute_loss<float>(const Image<float>&, const Image<float>&, double, Image<float>*);
template double compute_loss<double>(const Image<double>&, const Image<double>&, double, Image<double>*);
template void adam_update<float>(std::span<float>, std::span<const float>, std::span<float>, std::span<float>,
                                 double, long);
template void adam_update<double>(std::span<double>, std::span<const double>, std::span<double>,
                                  std::span<double>, double, long);

}  // namespace stg
