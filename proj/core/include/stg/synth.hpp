#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "stg/dataset_io.hpp"

namespace stg {

enum class MotionFamily { Static, Linear, Cubic, Transient, Mixed };

MotionFamily parse_motion_family(const std::string& name);
const char* motion_family_name(MotionFamily f);

/// Synthetic scene description. Cameras sit on a horizontal arc of radius
/// ring_radius around the origin, looking at it.
struct SynthSpec {
  int cameras = 6;
  int width = 128;
  int height = 128;
  int frames = 16;
  int blobs = 12;
  MotionFamily motion = MotionFamily::Mixed;
  std::uint64_t seed = 0;

  double ring_radius = 4.0;
  double arc_degrees = 60.0;
  double fov_degrees = 50.0;

  int points_per_blob = 4;  // init points per blob per frame it is visible in
  int background_points = 64;
  double point_jitter = 0.02;

  /// Distant textured wall behind the scene that the init cloud omits.
  bool backdrop = false;
  double backdrop_distance = 8.0;  // from the origin, away from the cameras
  int backdrop_columns = 12;
  int backdrop_rows = 8;

  /// Throws UsageError for out-of-range values.
  void validate() const;
};

struct SynthScene {
  DatasetManifest manifest;
  ModelFile ground_truth;  // lite, clamp activation
  PointCloud points;
  std::vector<Image<float>> images;  // camera-major: images[c * frames + f]
};

/// Builds the ground-truth cloud and renders every (camera, frame) with the
/// reference renderer and lite shading. Deterministic for a given spec.
SynthScene generate_scene(const SynthSpec& spec);

/// Writes manifest.json, images/camXX/NNNN.png, points.ply and
/// ground_truth.stgm into `dir`.
void write_scene(const SynthScene& scene, const std::filesystem::path& dir);

}  // namespace stg
