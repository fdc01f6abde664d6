#include "stg/synth.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

#include "stg/errors.hpp"
#include "stg/rasterizer.hpp"
#include "stg/shading.hpp"

namespace stg {

namespace fs = std::filesystem;

MotionFamily parse_motion_family(const std::string& name) {
  if (name == "static") return MotionFamily::Static;
  if (name == "linear") return MotionFamily::Linear;
  if (name == "cubic") return MotionFamily::Cubic;
  if (name == "transient") return MotionFamily::Transient;
  if (name == "mixed") return MotionFamily::Mixed;
  throw UsageError("unknown motion family '" + name + "' (static, linear, cubic, transient, mixed)");
}

const char* motion_family_name(MotionFamily f) {
  switch (f) {
    case MotionFamily::Static: return "static";
    case MotionFamily::Linear: return "linear";
    case MotionFamily::Cubic: return "cubic";
    case MotionFamily::Transient: return "transient";
    case MotionFamily::Mixed: return "mixed";
  }
  return "?";
}

void SynthSpec::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw UsageError(std::string("invalid scene spec: ") + what);
  };
  require(cameras >= 1, "cameras must be >= 1");
  require(width >= 1 && height >= 1, "resolution must be positive");
  require(frames >= 1, "frames must be >= 1");
  require(blobs >= 1, "blobs must be >= 1");
  require(!(motion == MotionFamily::Transient || motion == MotionFamily::Mixed) || blobs >= 3,
          "transient and mixed scenes need at least 3 blobs");
  require(ring_radius > 0, "ring_radius must be > 0");
  require(arc_degrees >= 0 && arc_degrees < 360, "arc_degrees must be in [0, 360)");
  require(fov_degrees > 0 && fov_degrees < 180, "fov_degrees must be in (0, 180)");
  require(points_per_blob >= 1, "points_per_blob must be >= 1");
  require(background_points >= 0, "background_points must be >= 0");
  require(point_jitter >= 0, "point_jitter must be >= 0");
  require(backdrop_distance > 0, "backdrop_distance must be > 0");
  require(backdrop_columns >= 1 && backdrop_rows >= 1, "backdrop grid must be non-empty");
}

namespace {

// Effectively zero temporal decay.
constexpr float kStaticLogTemporalScale = -20.0f;
constexpr float kTransientLogTemporalScale = 2.0794415f;  // sτ = 8

enum class Kind { Static, Linear, Cubic, Appear, Vanish };

std::vector<Kind> blob_kinds(const SynthSpec& s) {
  std::vector<Kind> kinds;
  const int b = s.blobs;
  switch (s.motion) {
    case MotionFamily::Static: kinds.assign(b, Kind::Static); break;
    case MotionFamily::Linear: kinds.assign(b, Kind::Linear); break;
    case MotionFamily::Cubic: kinds.assign(b, Kind::Cubic); break;
    case MotionFamily::Transient:
      kinds.assign(b - 2, Kind::Static);
      kinds.push_back(Kind::Appear);
      kinds.push_back(Kind::Vanish);
      break;
    case MotionFamily::Mixed:
      for (int i = 0; i < b - 2; ++i) kinds.push_back(i % 3 == 0 ? Kind::Static : i % 3 == 1 ? Kind::Linear : Kind::Cubic);
      kinds.push_back(Kind::Appear);
      kinds.push_back(Kind::Vanish);
      break;
  }
  return kinds;
}

Vec3<float> random_vec(std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  return Vec3<float>(float(u(rng)), float(u(rng)), float(u(rng)));
}

Vec3<float> random_direction(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::Vector3d v(n(rng), n(rng), n(rng));
  return v.normalized().cast<float>();
}

Vec4<float> random_quaternion(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::Vector4d q(n(rng), n(rng), n(rng), n(rng));
  return q.normalized().cast<float>();
}

void make_blobs(const SynthSpec& spec, std::mt19937_64& rng, GaussianCloud<float>& c) {
  const auto kinds = blob_kinds(spec);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::uniform_real_distribution<double> log_scale(std::log(0.08), std::log(0.25));
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t b = 0; b < kinds.size(); ++b) {
    const std::size_t i = c.size();
    append_zero_rows(c, 1);
    Vec3<float> pos = random_vec(rng, -1.0, 1.0).cwiseProduct(Vec3<float>(1.2f, 0.9f, 0.8f));
    const Kind k = kinds[b];
    if (k == Kind::Appear || k == Kind::Vanish) {
      // In front of an earlier blob so that fading cannot be faked by
      // darkening against the background.
      const std::size_t anchor = k == Kind::Appear ? 0 : std::min<std::size_t>(3, i - 1);
      pos = c.motion_coeff(anchor, 0) + Vec3<float>(0.1f, 0.05f, -0.6f);
    }
    c.set_motion_coeff(i, 0, pos);
    c.set_rotation_coeff(i, 0, random_quaternion(rng));
    c.set_vec3(c.log_scales, i,
               Vec3<float>(float(log_scale(rng)), float(log_scale(rng)), float(log_scale(rng))));
    c.opacity_logit[i] = logit(float(0.7 + 0.25 * u01(rng)));
    c.temporal_center[i] = 0.5f;
    c.log_temporal_scale[i] = kStaticLogTemporalScale;
    c.set_vec3(c.f_base, i, random_vec(rng, 0.15, 0.95));
    switch (k) {
      case Kind::Static: break;
      case Kind::Linear:
        c.set_motion_coeff(i, 1, random_direction(rng) * float(0.3 + 0.3 * u01(rng)));
        break;
      case Kind::Cubic:
        c.set_motion_coeff(i, 1, random_direction(rng) * 0.3f);
        c.set_motion_coeff(i, 2, random_direction(rng) * 1.0f);
        c.set_motion_coeff(i, 3, random_direction(rng) * 2.0f);
        c.set_rotation_coeff(i, 1, Vec4<float>(0, float(0.5 * normal(rng)), float(0.5 * normal(rng)),
                                               float(0.5 * normal(rng))));
        break;
      case Kind::Appear:
        c.temporal_center[i] = 1.0f;
        c.log_temporal_scale[i] = kTransientLogTemporalScale;
        break;
      case Kind::Vanish:
        c.temporal_center[i] = 0.0f;
        c.log_temporal_scale[i] = kTransientLogTemporalScale;
        break;
    }
  }
}

void make_backdrop(const SynthSpec& spec, std::mt19937_64& rng, GaussianCloud<float>& c) {
  const double half_w = 7.0, half_h = 5.0;
  const double dx = 2 * half_w / spec.backdrop_columns, dy = 2 * half_h / spec.backdrop_rows;
  const float in_plane = float(std::log(0.6 * std::max(dx, dy)));
  for (int r = 0; r < spec.backdrop_rows; ++r)
    for (int col = 0; col < spec.backdrop_columns; ++col) {
      const std::size_t i = c.size();
      append_zero_rows(c, 1);
      c.set_motion_coeff(i, 0, Vec3<float>(float(-half_w + (col + 0.5) * dx), float(-half_h + (r + 0.5) * dy),
                                           float(spec.backdrop_distance)));
      c.set_rotation_coeff(i, 0, Vec4<float>(1, 0, 0, 0));
      c.set_vec3(c.log_scales, i, Vec3<float>(in_plane, in_plane, std::log(0.05f)));
      c.opacity_logit[i] = logit(0.95f);
      c.temporal_center[i] = 0.5f;
      c.log_temporal_scale[i] = kStaticLogTemporalScale;
      c.set_vec3(c.f_base, i, random_vec(rng, 0.1, 0.9));
    }
}

}  // namespace

SynthScene generate_scene(const SynthSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  SynthScene scene;

  GaussianCloud<float> cloud(0, 3, 1);
  make_blobs(spec, rng, cloud);
  const std::size_t blob_count = cloud.size();
  if (spec.backdrop) make_backdrop(spec, rng, cloud);

  // Cameras on an arc facing +z, centered on the -z axis.
  DatasetManifest& m = scene.manifest;
  m.frame_count = spec.frames;
  const double f = 0.5 * spec.width / std::tan(0.5 * spec.fov_degrees * std::numbers::pi / 180.0);
  for (int k = 0; k < spec.cameras; ++k) {
    const double a = spec.cameras > 1 ? (-0.5 + double(k) / (spec.cameras - 1)) * spec.arc_degrees : 0.0;
    const double rad = a * std::numbers::pi / 180.0;
    const Eigen::Vector3d eye(spec.ring_radius * std::sin(rad), 0.0, -spec.ring_radius * std::cos(rad));
    char name[16];
    std::snprintf(name, sizeof name, "cam%02d", k);
    CameraEntry e;
    e.name = name;
    e.camera = look_at(spec.width, spec.height, f, f, eye, Eigen::Vector3d::Zero(), Eigen::Vector3d::UnitY());
    e.image_template = std::string("images/") + name + "/{frame}.png";
    m.cameras.push_back(e);
  }
  if (spec.cameras >= 2) m.held_out_cameras = {spec.cameras / 2};
  m.point_cloud = "points.ply";

  // Init points: jittered samples of each blob at every frame where it is
  // clearly visible, plus uniform clutter. The backdrop is left out.
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::uniform_int_distribution<int> any_frame(0, spec.frames - 1);
  for (int fr = 0; fr < spec.frames; ++fr) {
    const float t = float(frame_time(fr, spec.frames));
    for (std::size_t b = 0; b < blob_count; ++b) {
      const float spatial = logistic(cloud.opacity_logit[b]);
      if (eval_temporal_opacity(cloud, b, t) < 0.5f * spatial) continue;
      const Vec3<float> center = eval_position(cloud, b, t);
      const Mat3<float> rot = quaternion_to_matrix(eval_rotation(cloud, b, t));
      const Vec3<float> s = cloud.vec3(cloud.log_scales, b).array().exp().matrix();
      const Vec3<float> color = cloud.vec3(cloud.f_base, b);
      for (int p = 0; p < spec.points_per_blob; ++p) {
        const Vec3<float> z(float(normal(rng)), float(normal(rng)), float(normal(rng)));
        const Vec3<float> j(float(normal(rng)), float(normal(rng)), float(normal(rng)));
        scene.points.push_back(center + 0.5f * (rot * s.cwiseProduct(z)) + float(spec.point_jitter) * j, color, t);
      }
    }
  }
  for (int p = 0; p < spec.background_points; ++p) {
    const Vec3<float> pos = random_vec(rng, -1.5, 1.5);
    const Vec3<float> color = random_vec(rng, 0.0, 1.0);
    scene.points.push_back(pos, color, float(frame_time(any_frame(rng), spec.frames)));
  }

  scene.ground_truth.cloud = cloud;
  scene.ground_truth.time_min = 0.0f;
  scene.ground_truth.time_max = 1.0f;

  for (const auto& e : m.cameras)
    for (int fr = 0; fr < spec.frames; ++fr) {
      const FeatureImage<float> feat = render_reference(cloud, e.camera, float(frame_time(fr, spec.frames)));
      scene.images.push_back(shade<float>(feat, e.camera, nullptr));
    }
  return scene;
}

void write_scene(const SynthScene& scene, const fs::path& dir) {
  fs::create_directories(dir);
  write_manifest(dir / "manifest.json", scene.manifest);
  const int frames = scene.manifest.frame_count;
  for (int c = 0; c < int(scene.manifest.cameras.size()); ++c)
    for (int f = 0; f < frames; ++f)
      write_png(dir / scene.manifest.image_path(c, f), scene.images[std::size_t(c) * frames + f]);
  save_pointcloud(dir / scene.manifest.point_cloud, scene.points);
  save_model(scene.ground_truth, dir / "ground_truth.stgm");
}

}  // namespace stg
