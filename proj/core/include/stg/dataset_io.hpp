#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stg/camera.hpp"
#include "stg/image.hpp"
#include "stg/scene_model.hpp"
#include "stg/shading.hpp"

namespace stg {

// ---------------------------------------------------------------------------
// Images

/// Reads an 8-bit PNG as RGB in [0, 1].
Image<float> read_png(const std::filesystem::path& path);
/// Width and height from the PNG header without decoding pixels.
std::pair<int, int> read_png_size(const std::filesystem::path& path);
/// Writes the first three channels as 8-bit RGB, clamped and rounded.
void write_png(const std::filesystem::path& path, const Image<float>& rgb);

// ---------------------------------------------------------------------------
// Point clouds

/// Timestamped colored points; rgb in [0, 1], time normalized.
struct PointCloud {
  std::vector<float> xyz;
  std::vector<float> rgb;
  std::vector<float> time;

  std::size_t size() const { return time.size(); }
  void push_back(const Eigen::Vector3f& p, const Eigen::Vector3f& c, float t);
};

/// PLY with vertex properties x, y, z, red, green, blue, t. ASCII and
/// binary_little_endian are accepted; uchar colors are scaled by 1/255.
PointCloud load_pointcloud(const std::filesystem::path& path);
/// ASCII PLY; floats are written with round-trip precision and colors as
/// uchar.
void save_pointcloud(const std::filesystem::path& path, const PointCloud& points);

// ---------------------------------------------------------------------------
// Model files (.stgm)

inline constexpr char kModelMagic[4] = {'S', 'T', 'G', 'M'};
inline constexpr std::uint32_t kModelVersion = 1;
inline constexpr std::size_t kModelHeaderBytes = 60;
inline constexpr std::uint32_t kFlagLite = 1u;

struct ModelFile {
  GaussianCloud<float> cloud;
  std::optional<MlpHead<float>> mlp;  // absent for lite models
  float time_min = 0.0f;
  float time_max = 1.0f;

  bool lite() const { return !mlp.has_value(); }
};

/// Exact byte size of a model file; hidden = 0 for lite.
std::size_t model_file_size(std::size_t n, int motion_degree, int rotation_degree, int hidden);

std::vector<std::uint8_t> serialize_model(const ModelFile& model);
/// FormatError on bad magic, unsupported version, truncation or trailing bytes.
ModelFile parse_model(std::span<const std::uint8_t> bytes);

void save_model(const ModelFile& model, const std::filesystem::path& path);
ModelFile load_model(const std::filesystem::path& path);

/// Writes the lite form of `model` (MLP dropped, clamp activation).
void export_web(const ModelFile& model, const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Datasets

struct CameraEntry {
  std::string name;
  Camera camera;
  std::string image_template;  // relative to the manifest, "{frame}" -> 4-digit frame index
};

struct DatasetManifest {
  std::vector<CameraEntry> cameras;
  int frame_count = 0;
  std::vector<int> held_out_cameras;
  std::string time_normalization = "frame_index";
  std::string point_cloud;  // relative path, may be empty

  std::vector<int> train_cameras() const;
  bool is_held_out(int camera) const;
  double frame_time(int frame) const { return stg::frame_time(frame, frame_count); }
  std::string image_path(int camera, int frame) const;
};

std::string manifest_to_json(const DatasetManifest& m);
/// Structural validation only (no file checks); FormatError on problems.
DatasetManifest manifest_from_json(const std::string& text);

/// Validated manifest plus lazily loaded, cached images.
class Dataset {
 public:
  /// Checks every referenced image exists and matches its camera resolution.
  /// Throws MissingFileError, ResolutionMismatchError or FormatError.
  static Dataset load(const std::filesystem::path& manifest_path);

  const DatasetManifest& manifest() const { return manifest_; }
  const std::filesystem::path& root() const { return root_; }
  std::filesystem::path image_file(int camera, int frame) const;
  const Image<float>& image(int camera, int frame) const;
  /// Loads the point cloud named in the manifest; DataError if none.
  PointCloud point_cloud() const;

 private:
  DatasetManifest manifest_;
  std::filesystem::path root_;
  mutable std::vector<std::optional<Image<float>>> cache_;
};

void write_manifest(const std::filesystem::path& path, const DatasetManifest& m);

}  // namespace stg
