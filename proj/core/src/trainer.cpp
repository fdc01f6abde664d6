#include <algorithm>
#include <chrono>
#include <cmath>

#include "stg/errors.hpp"
#include "stg/metrics.hpp"
#include "stg/trainer.hpp"

namespace stg {

double scene_extent(const std::vector<Camera>& cameras) {
  if (cameras.size() < 2) return 1.0;
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (const auto& c : cameras) mean += c.center();
  mean /= double(cameras.size());
  double r = 0;
  for (const auto& c : cameras) r = std::max(r, (c.center() - mean).norm());
  return r > 0 ? 1.1 * r : 1.0;
}

namespace {

Image<float> error_map(const Image<float>& rendered, const Image<float>& gt) {
  Image<float> e(rendered.width, rendered.height, 1);
  for (int y = 0; y < rendered.height; ++y)
    for (int x = 0; x < rendered.width; ++x) {
      float acc = 0;
      for (int c = 0; c < rendered.channels; ++c) acc += std::abs(rendered.at(x, y, c) - gt.at(x, y, c));
      e.at(x, y) = acc / float(rendered.channels);
    }
  return e;
}

}  // namespace

TrainResult train(const Dataset& dataset, const TrainConfig& cfg, const TrainCallback& on_log,
                  const GaussianCloud<float>* initial) {
  cfg.validate();
  const DatasetManifest& man = dataset.manifest();
  if (man.cameras.size() < 2) throw DataError("training needs at least 2 cameras");
  const std::vector<int> train_cams = man.train_cameras();
  if (train_cams.empty()) throw DataError("every camera is held out; nothing to train on");
  const Activation act = cfg.lite ? Activation::Clamp : parse_activation(cfg.activation);

  std::mt19937_64 rng(cfg.seed);
  TrainResult res;
  if (initial) {
    initial->check_consistent();
    res.cloud = *initial;
  } else {
    res.cloud = initialize_scene(dataset.point_cloud(), act, cfg.init_subsample);
  }
  if (!cfg.lite) res.mlp = MlpHead<float>::random(cfg.hidden, act, rng);
  if (cfg.iterations == 0) return res;

  std::vector<Camera> cams;
  for (int c : train_cams) cams.push_back(man.cameras[c].camera);
  const double extent = scene_extent(cams);

  GaussianCloud<float>& cloud = res.cloud;
  MlpHead<float>* mlp = res.mlp ? &*res.mlp : nullptr;
  AdamState adam = AdamState::like(cloud, mlp);
  GradStats stats;
  stats.reset(cloud.size());

  const int densify_stop = int(cfg.densify_stop_fraction * cfg.iterations);
  std::uniform_int_distribution<std::size_t> pick_cam(0, train_cams.size() - 1);
  std::uniform_int_distribution<int> pick_frame(0, man.frame_count - 1);
  const auto t0 = std::chrono::steady_clock::now();
  const double temporal_lr = cfg.train_temporal_opacity ? cfg.lr_temporal : 0.0;

  for (int it = 1; it <= cfg.iterations; ++it) {
    const double progress = cfg.iterations > 1 ? double(it - 1) / double(cfg.iterations - 1) : 0.0;
    const double decay = std::exp(std::log(cfg.position_lr_final_factor) * progress);
    LearningRates lr;
    lr.position = cfg.lr_position * extent * decay;
    lr.motion = cfg.lr_motion * extent * decay;
    lr.rotation = cfg.lr_rotation;
    lr.scale = cfg.lr_scale;
    lr.opacity = cfg.lr_opacity;
    lr.temporal_center = temporal_lr;
    lr.temporal_scale = temporal_lr;
    lr.features = cfg.lr_features;
    lr.mlp = cfg.lr_mlp;

    const int cam_index = train_cams[pick_cam(rng)];
    const int frame = pick_frame(rng);
    const Camera& cam = man.cameras[cam_index].camera;
    const float t = float(man.frame_time(frame));
    const Image<float>& gt = dataset.image(cam_index, frame);

    RenderOutput<float> out = render_forward(cloud, cam, t);
    ShadeRecord<float> shade_rec;
    const Image<float> rgb = shade(out.image, cam, mlp, &shade_rec);
    Image<float> grad_rgb;
    const double loss = compute_loss(rgb, gt, cfg.lambda_dssim, &grad_rgb);
    ShadeGradients<float> sg = shade_backward(shade_rec, out.image, cam, mlp, grad_rgb);
    ParamGradients<float> pg = render_backward(cloud, out.record, sg.features);
    if (it <= densify_stop) stats.add(pg);
    adam_step(cloud, pg.grads, mlp, mlp ? &sg.mlp : nullptr, adam, lr);

    TrainLogRecord rec;
    rec.iteration = it;
    rec.loss = loss;
    rec.psnr = psnr(rgb, gt);
    rec.gaussians = cloud.size();
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    if (it >= cfg.densify_start && it <= densify_stop && it % cfg.densify_interval == 0) {
      res.densify.push_back(densify_and_prune(cloud, adam, stats, cfg, extent, true, rng));
    } else if (it > densify_stop && it % cfg.prune_interval == 0) {
      res.densify.push_back(densify_and_prune(cloud, adam, stats, cfg, extent, false, rng));
    }

    if (cfg.guided_sampling &&
        std::find(cfg.guided_iterations.begin(), cfg.guided_iterations.end(), it) != cfg.guided_iterations.end()) {
      std::vector<GuidedView> views;
      for (int c : train_cams) {
        const int f = pick_frame(rng);
        const Camera& vc = man.cameras[c].camera;
        const float vt = float(man.frame_time(f));
        const RenderOutput<float> vo = render_forward(cloud, vc, vt);
        const Image<float> vrgb = shade(vo.image, vc, mlp);
        GuidedView gv;
        gv.camera = vc;
        gv.time = vt;
        gv.ground_truth = &dataset.image(c, f);
        gv.error = error_map(vrgb, *gv.ground_truth);
        gv.depth = vo.image.depth;
        views.push_back(std::move(gv));
      }
      const auto added = guided_sample(cloud, &adam, views, cfg, act, rng);
      res.guided.insert(res.guided.end(), added.begin(), added.end());
      stats.reset(cloud.size());
    }

    rec.gaussians = cloud.size();
    res.log.push_back(rec);
    if (on_log && (it % cfg.log_interval == 0 || it == cfg.iterations)) on_log(rec);
  }
  return res;
}

}  // namespace stg
