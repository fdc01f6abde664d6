#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "stg/camera.hpp"
#include "stg/dataset_io.hpp"
#include "stg/image.hpp"
#include "stg/rasterizer.hpp"
#include "stg/scene_model.hpp"
#include "stg/shading.hpp"

namespace stg {

struct TrainConfig {
  int iterations = 5000;
  std::uint64_t seed = 0;

  // Learning rates. Position and motion rates are multiplied by the scene
  // extent and decay exponentially to position_lr_final_factor of their
  // initial value.
  double lr_position = 1.6e-4;
  double lr_motion = 1.6e-4;
  double position_lr_final_factor = 0.01;
  double lr_rotation = 1e-3;
  double lr_scale = 5e-3;
  double lr_opacity = 5e-2;
  double lr_temporal = 1e-3;
  double lr_features = 2.5e-3;
  double lr_mlp = 1e-3;

  double lambda_dssim = 0.2;

  // Density control.
  int densify_interval = 100;
  int densify_start = 500;
  double densify_stop_fraction = 0.6;
  double densify_grad_threshold = 2e-4;
  double dense_scale_fraction = 0.01;  // clone below this fraction of the extent, split above
  double split_factor = 1.6;
  double prune_opacity = 0.005;
  int prune_interval = 100;
  int max_gaussians = 100000;

  // Guided sampling.
  bool guided_sampling = true;
  std::vector<int> guided_iterations = {4000, 7000, 10000};
  int guided_patch_size = 16;
  double guided_error_quantile = 0.9;
  double guided_min_error = 1e-3;
  int guided_samples_per_ray = 8;
  double guided_depth_factor = 0.7;
  double guided_far_factor = 7.5;
  double guided_jitter = 0.1;

  // Freezes temporal_center and log_temporal_scale when false.
  bool train_temporal_opacity = true;

  // Shading head. lite trains F_base only with clamp activation.
  bool lite = false;
  std::string activation = "clamp";
  int hidden = 32;

  // Initialization.
  double init_subsample = 1.0;

  int log_interval = 100;

  /// Throws UsageError when a field is out of range.
  void validate() const;
};

std::string config_to_json(const TrainConfig& c);
/// Fields missing from the JSON keep their defaults; unknown keys are an
/// error.
TrainConfig config_from_json(const std::string& text);
/// Applies `key=value`; value is parsed as JSON, falling back to a string.
void apply_override(TrainConfig& c, const std::string& assignment);

Activation parse_activation(const std::string& name);

// ---------------------------------------------------------------------------
// Loss

/// (1 - λ)·mean|I - GT| + λ·DSSIM₁(I, GT) with the mean over every pixel and
/// channel. The L1 subgradient at I == GT is 0.
template <class S>
double compute_loss(const Image<S>& rendered, const Image<S>& gt, double lambda_dssim, Image<S>* grad);

// ---------------------------------------------------------------------------
// Adam

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEps = 1e-15;

/// One bias-corrected Adam update on a flat array. `step` is the 1-based
/// step number.
template <class S>
void adam_update(std::span<S> params, std::span<const S> grads, std::span<S> m, std::span<S> v, double lr,
                 long step);

struct LearningRates {
  double position = 0;
  double motion = 0;
  double rotation = 0;
  double scale = 0;
  double opacity = 0;
  double temporal_center = 0;
  double temporal_scale = 0;
  double features = 0;
  double mlp = 0;
};

/// Moments for every Gaussian field and the MLP blocks.
struct AdamState {
  GaussianCloud<float> m;
  GaussianCloud<float> v;
  MlpHead<float> mlp_m;
  MlpHead<float> mlp_v;
  long step = 0;

  /// Zero moments shaped like `cloud` (and `mlp` when non-null).
  static AdamState like(const GaussianCloud<float>& cloud, const MlpHead<float>* mlp);
};

/// Advances `state.step` and updates every parameter group. UsageError on a
/// shape mismatch.
void adam_step(GaussianCloud<float>& cloud, const GaussianCloud<float>& grads, MlpHead<float>* mlp,
               const MlpHead<float>* mlp_grads, AdamState& state, const LearningRates& lr);

// ---------------------------------------------------------------------------
// Initialization, density control, guided sampling

/// One Gaussian per point. f_base and f_dir start at the inverse activation
/// of the point color. With subsample < 1, each timestamp keeps the
/// ceil(subsample·n) points with the largest nearest-neighbor distance.
GaussianCloud<float> initialize_scene(const PointCloud& points, Activation act = Activation::Clamp,
                                      double subsample = 1.0, int motion_degree = 3, int rotation_degree = 1);

/// Inverse of the final color activation, clamped to a finite range.
float inverse_activation(Activation act, float value);

/// Screen-space gradient statistics accumulated between density-control
/// steps.
struct GradStats {
  std::vector<double> sum;
  std::vector<std::uint32_t> count;

  void reset(std::size_t n);
  void add(const ParamGradients<float>& g);
};

struct DensifyResult {
  std::size_t cloned = 0;
  std::size_t split = 0;
  std::size_t pruned = 0;
};

/// Clone/split Gaussians with a large mean screen-space gradient (when
/// `grow`), then prune low spatial opacity. Optimizer moments follow the
/// rows; new rows start with zero moments. stats is reset.
DensifyResult densify_and_prune(GaussianCloud<float>& cloud, AdamState& adam, GradStats& stats,
                                const TrainConfig& config, double scene_extent, bool grow, std::mt19937_64& rng);

/// One training view prepared for guided sampling.
struct GuidedView {
  Camera camera;
  double time = 0;
  Image<float> error;         // H×W×1 per-pixel error
  Image<float> depth;         // H×W×1 coarse depth
  const Image<float>* ground_truth = nullptr;  // H×W×3, colors of new Gaussians
};

struct GuidedSample {
  int view = 0;
  int patch_x = 0;
  int patch_y = 0;
  double max_depth = 0;  // d, the largest value of the view's depth map
  double ray_depth = 0;  // camera z before jitter
  double depth = 0;      // camera z after jitter
};

/// Adds Gaussians along rays through the centers of high-error patches.
/// Returns what was added, in order.
std::vector<GuidedSample> guided_sample(GaussianCloud<float>& cloud, AdamState* adam,
                                        std::span<const GuidedView> views, const TrainConfig& config,
                                        Activation act, std::mt19937_64& rng);

// ---------------------------------------------------------------------------
// Training loop

struct TrainLogRecord {
  int iteration = 0;
  double loss = 0;
  double psnr = 0;
  std::size_t gaussians = 0;
  double seconds = 0;
};

struct TrainResult {
  GaussianCloud<float> cloud;
  std::optional<MlpHead<float>> mlp;
  std::vector<TrainLogRecord> log;
  std::vector<GuidedSample> guided;
  std::vector<DensifyResult> densify;
};

/// Largest distance of a camera center from their mean, times 1.1; 1 for a
/// single camera.
double scene_extent(const std::vector<Camera>& cameras);

using TrainCallback = std::function<void(const TrainLogRecord&)>;

/// Full optimization on the training cameras of `dataset`. `initial`, when
/// given, replaces the point-cloud initialization.
TrainResult train(const Dataset& dataset, const TrainConfig& config, const TrainCallback& on_log = {},
                  const GaussianCloud<float>* initial = nullptr);

}  // namespace stg
