#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "stg/camera.hpp"
#include "stg/image.hpp"
#include "stg/scene_model.hpp"

namespace stg {

struct RenderOptions : ProjectionOptions {
  int tile_size = 16;
  double alpha_max = 0.99;
  double transmittance_min = 1e-4;
};

/// Splatted 9-channel features (base | dir | time) plus accumulated alpha and
/// the unnormalized alpha-weighted depth Σ z·α·T.
template <class S>
struct FeatureImage {
  Image<S> features;
  Image<S> alpha;
  Image<S> depth;

  FeatureImage() = default;
  FeatureImage(int w, int h) : features(w, h, kFeatureDim), alpha(w, h, 1), depth(w, h, 1) {}
  int width() const { return features.width; }
  int height() const { return features.height; }
};

/// A Gaussian after time evaluation and projection, ready for compositing.
/// conic holds the upper triangle (a, b, c) of the inverse 2D covariance.
template <class S>
struct ProjectedSplat {
  Vec2<S> center;
  S conic[3];
  S opacity;  // temporal opacity σ(t)
  S depth;
  Vec9<S> features;
  S radius;
  Vec2<S> extent;  // half-size of the axis-aligned box where alpha can reach alpha_min
  // Exponents below this give alpha < alpha_min for certain; -inf disables
  // the shortcut.
  S power_cut = -std::numeric_limits<S>::infinity();
  std::uint32_t index;
};

template <class S>
struct PixelResult {
  Vec9<S> features = Vec9<S>::Zero();
  S alpha = S(0);
  S depth = S(0);
};

/// Front-to-back compositing of depth-sorted splats at one pixel. This is the
/// kernel shared by the tiled and the reference renderers.
template <class S>
PixelResult<S> composite_pixel(std::span<const ProjectedSplat<S>> sorted, const Vec2<S>& pixel,
                               const RenderOptions& opts = {});

/// Everything the backward pass needs from a forward render.
template <class S>
struct ForwardRecord {
  Camera camera;
  S time = S(0);
  RenderOptions options;
  std::size_t count = 0;
  std::uint64_t fingerprint = 0;
  std::vector<ProjectedSplat<S>> splats;  // one per visible Gaussian
  std::vector<std::int32_t> slot;         // Gaussian index -> splats index, -1 if culled
  int tiles_x = 0;
  int tiles_y = 0;
  std::vector<std::uint32_t> tile_offsets;  // tiles_x*tiles_y + 1
  std::vector<std::uint32_t> tile_entries;  // indices into splats, depth-sorted per tile
};

template <class S>
struct RenderOutput {
  FeatureImage<S> image;
  ForwardRecord<S> record;
};

/// Gradients mirroring GaussianCloud plus the per-Gaussian screen-space
/// statistics used by density control: the norm of dL/d(center) in
/// half-extent normalized coordinates, and whether the Gaussian was rendered.
template <class S>
struct ParamGradients {
  GaussianCloud<S> grads;
  std::vector<S> center_grad_norm;
  std::vector<std::uint32_t> hit_count;
};

/// Tiled forward renderer. Throws NumericalError naming the first Gaussian
/// with a non-finite parameter.
template <class S>
RenderOutput<S> render_forward(const GaussianCloud<S>& cloud, const Camera& cam, S t,
                               const RenderOptions& opts = {});

/// Brute-force oracle: every pixel composites every depth/temporally
/// surviving Gaussian in one global (depth, index) order.
template <class S>
FeatureImage<S> render_reference(const GaussianCloud<S>& cloud, const Camera& cam, S t,
                                 const RenderOptions& opts = {});

/// Analytic backward pass. grad_features is H×W×9; the alpha and depth maps
/// do not propagate gradients. Throws UsageError when `cloud` is not the
/// cloud `record` was rendered from.
template <class S>
ParamGradients<S> render_backward(const GaussianCloud<S>& cloud, const ForwardRecord<S>& record,
                                  const Image<S>& grad_features);

/// Order-sensitive hash of every parameter of a cloud.
template <class S>
std::uint64_t cloud_fingerprint(const GaussianCloud<S>& cloud);

/// Projects Gaussian i at time t; returns false when depth/temporal culling
/// rejects it. Footprint culling is left to the caller.
template <class S>
bool project_gaussian(const GaussianCloud<S>& cloud, std::size_t i, const Camera& cam, S t,
                      const RenderOptions& opts, ProjectedSplat<S>& out);

}  // namespace stg
