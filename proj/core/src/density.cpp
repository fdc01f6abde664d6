#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "stg/errors.hpp"
#include "stg/trainer.hpp"

namespace stg {

namespace {

constexpr float kInitOpacity = 0.1f;
constexpr double kMinNeighborDist2 = 1e-7;
constexpr float kLonelyScale = 0.01f;

// Sorted squared distances from each point to its k nearest neighbors in
// `pts` (brute force).
std::vector<std::vector<double>> knn_dist2(const std::vector<Eigen::Vector3d>& pts, std::size_t k) {
  std::vector<std::vector<double>> out(pts.size());
  std::vector<double> d2;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    d2.clear();
    for (std::size_t j = 0; j < pts.size(); ++j)
      if (j != i) d2.push_back((pts[i] - pts[j]).squaredNorm());
    const std::size_t kk = std::min(k, d2.size());
    std::partial_sort(d2.begin(), d2.begin() + kk, d2.end());
    out[i].assign(d2.begin(), d2.begin() + kk);
  }
  return out;
}

void identity_row(GaussianCloud<float>& c, std::size_t i) {
  c.set_rotation_coeff(i, 0, Vec4<float>(1, 0, 0, 0));
}

}  // namespace

float inverse_activation(Activation act, float value) {
  if (act == Activation::Sigmoid) {
    const float p = std::clamp(value, 1e-3f, 1.0f - 1e-3f);
    return logit(p);
  }
  return std::clamp(value, 0.0f, 1.0f);
}

GaussianCloud<float> initialize_scene(const PointCloud& pc, Activation act, double subsample, int np, int nq) {
  if (pc.size() == 0) throw UsageError("initialize_scene: empty point cloud");
  if (pc.xyz.size() != 3 * pc.size() || pc.rgb.size() != 3 * pc.size())
    throw UsageError("initialize_scene: point array lengths disagree");
  if (!(subsample > 0 && subsample <= 1)) throw UsageError("initialize_scene: subsample must be in (0, 1]");

  auto point = [&](std::size_t i) { return Eigen::Vector3d(pc.xyz[3 * i], pc.xyz[3 * i + 1], pc.xyz[3 * i + 2]); };

  std::map<float, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < pc.size(); ++i) groups[pc.time[i]].push_back(i);

  // Per-timestamp redundancy subsampling on nearest-neighbor distance.
  std::vector<std::size_t> kept;
  for (auto& [t, idx] : groups) {
    if (subsample >= 1.0) {
      kept.insert(kept.end(), idx.begin(), idx.end());
      continue;
    }
    std::vector<Eigen::Vector3d> pts;
    for (std::size_t i : idx) pts.push_back(point(i));
    const auto nn = knn_dist2(pts, 1);
    std::vector<std::size_t> order(idx.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      const double da = nn[a].empty() ? 0.0 : nn[a][0];
      const double db = nn[b].empty() ? 0.0 : nn[b][0];
      return da > db;
    });
    const std::size_t keep = std::min(idx.size(), std::size_t(std::ceil(subsample * double(idx.size()) - 1e-9)));
    std::vector<std::size_t> chosen;
    for (std::size_t r = 0; r < keep; ++r) chosen.push_back(idx[order[r]]);
    std::sort(chosen.begin(), chosen.end());
    kept.insert(kept.end(), chosen.begin(), chosen.end());
  }
  std::sort(kept.begin(), kept.end());

  // Scales from the mean distance to the 3 nearest kept neighbors at the same
  // timestamp, or in the whole kept set when a timestamp has too few points.
  std::map<float, std::vector<std::size_t>> kept_groups;
  for (std::size_t i : kept) kept_groups[pc.time[i]].push_back(i);
  std::vector<Eigen::Vector3d> all_pts;
  for (std::size_t i : kept) all_pts.push_back(point(i));
  std::vector<std::vector<double>> all_nn;
  std::map<std::size_t, double> mean_dist;
  for (auto& [t, idx] : kept_groups) {
    if (idx.size() >= 4) {
      std::vector<Eigen::Vector3d> pts;
      for (std::size_t i : idx) pts.push_back(point(i));
      const auto nn = knn_dist2(pts, 3);
      for (std::size_t r = 0; r < idx.size(); ++r) {
        double acc = 0;
        for (double d2 : nn[r]) acc += std::sqrt(std::max(d2, kMinNeighborDist2));
        mean_dist[idx[r]] = acc / double(nn[r].size());
      }
      continue;
    }
    if (all_nn.empty()) all_nn = knn_dist2(all_pts, 3);
    for (std::size_t i : idx) {
      const std::size_t r = std::size_t(std::lower_bound(kept.begin(), kept.end(), i) - kept.begin());
      if (all_nn[r].empty()) {
        mean_dist[i] = kLonelyScale;
        continue;
      }
      double acc = 0;
      for (double d2 : all_nn[r]) acc += std::sqrt(std::max(d2, kMinNeighborDist2));
      mean_dist[i] = acc / double(all_nn[r].size());
    }
  }

  GaussianCloud<float> c(kept.size(), np, nq);
  for (std::size_t r = 0; r < kept.size(); ++r) {
    const std::size_t i = kept[r];
    c.set_motion_coeff(r, 0, point(i).cast<float>());
    identity_row(c, r);
    const float ls = float(std::log(mean_dist[i]));
    c.set_vec3(c.log_scales, r, Vec3<float>(ls, ls, ls));
    c.opacity_logit[r] = logit(kInitOpacity);
    c.temporal_center[r] = pc.time[i];
    c.log_temporal_scale[r] = 0.0f;
    for (int k = 0; k < 3; ++k) {
      const float f = inverse_activation(act, pc.rgb[3 * i + k]);
      c.f_base[3 * r + k] = f;
      c.f_dir[3 * r + k] = f;
      c.f_time[3 * r + k] = 0.0f;
    }
  }
  return c;
}

void GradStats::reset(std::size_t n) {
  sum.assign(n, 0.0);
  count.assign(n, 0);
}

void GradStats::add(const ParamGradients<float>& g) {
  if (g.center_grad_norm.size() != sum.size()) reset(g.center_grad_norm.size());
  for (std::size_t i = 0; i < sum.size(); ++i)
    if (g.hit_count[i]) {
      sum[i] += g.center_grad_norm[i];
      count[i] += g.hit_count[i];
    }
}

DensifyResult densify_and_prune(GaussianCloud<float>& cloud, AdamState& adam, GradStats& stats,
                                const TrainConfig& cfg, double extent, bool grow, std::mt19937_64& rng) {
  DensifyResult res;
  const std::size_t n = cloud.size();
  if (stats.sum.size() != n) stats.reset(n);
  std::vector<bool> keep(n, true);

  if (grow) {
    std::vector<std::pair<double, std::size_t>> candidates;
    for (std::size_t i = 0; i < n; ++i) {
      if (stats.count[i] == 0) continue;
      const double mean = stats.sum[i] / double(stats.count[i]);
      if (mean > cfg.densify_grad_threshold) candidates.push_back({mean, i});
    }
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    std::size_t total = n;
    std::normal_distribution<float> normal(0.0f, 1.0f);
    const double dense_scale = cfg.dense_scale_fraction * extent;
    for (const auto& [mean, i] : candidates) {
      if (total + 1 > std::size_t(cfg.max_gaussians)) break;
      const Vec3<float> ls = cloud.vec3(cloud.log_scales, i);
      const double max_scale = std::exp(double(ls.maxCoeff()));
      if (max_scale <= dense_scale) {
        append_row(cloud, cloud, i);
        ++res.cloned;
      } else {
        // Two children replace the parent, offset by samples of the parent.
        const Vec3<float> s = ls.array().exp().matrix();
        const Vec4<float> q0 = cloud.rotation_coeff(i, 0);
        const Mat3<float> rot = quaternion_to_matrix<float>(q0.norm() > 1e-8f ? Vec4<float>(q0.normalized())
                                                                             : Vec4<float>(1, 0, 0, 0));
        const float shrink = float(std::log(cfg.split_factor));
        for (int child = 0; child < 2; ++child) {
          append_row(cloud, cloud, i);
          const std::size_t c = cloud.size() - 1;
          const Vec3<float> z(normal(rng), normal(rng), normal(rng));
          cloud.set_motion_coeff(c, 0, cloud.motion_coeff(i, 0) + rot * s.cwiseProduct(z));
          cloud.set_vec3(cloud.log_scales, c, ls.array() - shrink);
        }
        keep[i] = false;
        ++res.split;
      }
      total = cloud.size() - (n - std::size_t(std::count(keep.begin(), keep.end(), true)));
    }
  }

  const std::size_t added = cloud.size() - n;
  append_zero_rows(adam.m, added);
  append_zero_rows(adam.v, added);
  keep.resize(cloud.size(), true);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (!keep[i]) continue;
    if (logistic(double(cloud.opacity_logit[i])) < cfg.prune_opacity || !cloud.params_finite(i)) {
      keep[i] = false;
      ++res.pruned;
    }
  }
  filter_rows(cloud, keep);
  filter_rows(adam.m, keep);
  filter_rows(adam.v, keep);
  stats.reset(cloud.size());
  return res;
}

std::vector<GuidedSample> guided_sample(GaussianCloud<float>& cloud, AdamState* adam,
                                        std::span<const GuidedView> views, const TrainConfig& cfg, Activation act,
                                        std::mt19937_64& rng) {
  std::vector<GuidedSample> added;
  const std::size_t start = cloud.size();
  const int P = cfg.guided_patch_size;
  const int samples = cfg.guided_samples_per_ray;
  std::normal_distribution<double> normal(0.0, 1.0);

  for (std::size_t v = 0; v < views.size(); ++v) {
    const GuidedView& view = views[v];
    const Camera& cam = view.camera;
    const int w = cam.width, h = cam.height;
    if (view.error.width != w || view.error.height != h || view.error.channels != 1 || view.depth.width != w ||
        view.depth.height != h || view.depth.channels != 1)
      throw UsageError("guided_sample: error/depth maps must be single-channel at camera resolution");
    if (view.ground_truth && (view.ground_truth->width != w || view.ground_truth->height != h ||
                              view.ground_truth->channels < 3))
      throw UsageError("guided_sample: ground truth must be RGB at camera resolution");

    const double d = *std::max_element(view.depth.data.begin(), view.depth.data.end());
    if (!(d > 0)) continue;

    const int px = (w + P - 1) / P, py = (h + P - 1) / P;
    std::vector<double> means(std::size_t(px) * py, 0.0);
    for (int by = 0; by < py; ++by)
      for (int bx = 0; bx < px; ++bx) {
        double acc = 0;
        int cnt = 0;
        for (int y = by * P; y < std::min(h, (by + 1) * P); ++y)
          for (int x = bx * P; x < std::min(w, (bx + 1) * P); ++x, ++cnt) acc += view.error.at(x, y);
        means[std::size_t(by) * px + bx] = acc / cnt;
      }
    std::vector<double> sorted = means;
    std::sort(sorted.begin(), sorted.end());
    const double threshold = sorted[std::size_t(std::floor(cfg.guided_error_quantile * double(sorted.size() - 1)))];

    const double near = cfg.guided_depth_factor * d, far = cfg.guided_far_factor * d;
    const double spacing = samples > 1 ? (far - near) / double(samples - 1) : 0.0;
    const double sigma = cfg.guided_jitter * spacing;
    const Eigen::Matrix3d r_t = cam.rotation().transpose();
    const Eigen::Vector3d t_cam = cam.translation();

    for (int by = 0; by < py; ++by)
      for (int bx = 0; bx < px; ++bx) {
        const double mean = means[std::size_t(by) * px + bx];
        if (!(mean > threshold) || !(mean > cfg.guided_min_error)) continue;
        const int x0 = bx * P, y0 = by * P;
        const int pw = std::min(w, x0 + P) - x0, ph = std::min(h, y0 + P) - y0;
        const double u = x0 + 0.5 * (pw - 1), vv = y0 + 0.5 * (ph - 1);
        const Eigen::Vector3d dir((u - cam.cx) / cam.fx, (vv - cam.cy) / cam.fy, 1.0);

        Vec3<float> color(0.5f, 0.5f, 0.5f);
        if (view.ground_truth) {
          const int cx = std::clamp(int(std::lround(u)), 0, w - 1), cy = std::clamp(int(std::lround(vv)), 0, h - 1);
          for (int k = 0; k < 3; ++k) color[k] = view.ground_truth->at(cx, cy, k);
        }
        for (int s = 0; s < samples; ++s) {
          if (cloud.size() >= std::size_t(cfg.max_gaussians)) break;
          const double z0 = samples > 1 ? near + spacing * s : near;
          Eigen::Vector3d p_cam = dir * z0;
          if (sigma > 0) {
            p_cam.x() += sigma * normal(rng);
            p_cam.y() += sigma * normal(rng);
            p_cam.z() = std::clamp(p_cam.z() + sigma * normal(rng), near, far);
          }
          const Eigen::Vector3d world = r_t * (p_cam - t_cam);

          const std::size_t i = cloud.size();
          append_zero_rows(cloud, 1);
          cloud.set_motion_coeff(i, 0, world.cast<float>());
          identity_row(cloud, i);
          // Footprint of about a quarter patch in pixels.
          const float ls = float(std::log(p_cam.z() * P / (4.0 * 0.5 * (cam.fx + cam.fy))));
          cloud.set_vec3(cloud.log_scales, i, Vec3<float>(ls, ls, ls));
          cloud.opacity_logit[i] = logit(kInitOpacity);
          cloud.temporal_center[i] = float(view.time);
          cloud.log_temporal_scale[i] = 0.0f;
          for (int k = 0; k < 3; ++k) {
            const float f = inverse_activation(act, color[k]);
            cloud.f_base[3 * i + k] = f;
            cloud.f_dir[3 * i + k] = f;
          }
          added.push_back({int(v), bx, by, d, z0, p_cam.z()});
        }
      }
  }
  if (adam) {
    append_zero_rows(adam->m, cloud.size() - start);
    append_zero_rows(adam->v, cloud.size() - start);
  }
  return added;
}

}  // namespace stg
