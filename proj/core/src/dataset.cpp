#include <algorithm>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "stg/dataset_io.hpp"
#include "stg/errors.hpp"

namespace stg {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<int> DatasetManifest::train_cameras() const {
  std::vector<int> out;
  for (int c = 0; c < int(cameras.size()); ++c)
    if (!is_held_out(c)) out.push_back(c);
  return out;
}

bool DatasetManifest::is_held_out(int camera) const {
  return std::find(held_out_cameras.begin(), held_out_cameras.end(), camera) != held_out_cameras.end();
}

std::string DatasetManifest::image_path(int camera, int frame) const {
  if (camera < 0 || camera >= int(cameras.size())) throw UsageError("camera index out of range");
  if (frame < 0 || frame >= frame_count) throw UsageError("frame index out of range");
  std::string path = cameras[camera].image_template;
  char digits[16];
  std::snprintf(digits, sizeof digits, "%04d", frame);
  const std::string key = "{frame}";
  for (auto pos = path.find(key); pos != std::string::npos; pos = path.find(key, pos))
    path.replace(pos, key.size(), digits);
  return path;
}

std::string manifest_to_json(const DatasetManifest& m) {
  json j;
  j["frame_count"] = m.frame_count;
  j["time_normalization"] = m.time_normalization;
  j["held_out_cameras"] = m.held_out_cameras;
  if (!m.point_cloud.empty()) j["point_cloud"] = m.point_cloud;
  j["cameras"] = json::array();
  for (const auto& e : m.cameras) {
    std::vector<double> w2c(16);
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c) w2c[r * 4 + c] = e.camera.world_to_camera(r, c);
    j["cameras"].push_back({{"name", e.name},
                            {"width", e.camera.width},
                            {"height", e.camera.height},
                            {"fx", e.camera.fx},
                            {"fy", e.camera.fy},
                            {"cx", e.camera.cx},
                            {"cy", e.camera.cy},
                            {"world_to_camera", w2c},
                            {"images", e.image_template}});
  }
  return j.dump(2);
}

namespace {

template <class T>
T field(const json& j, const char* key, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) throw FormatError(where + ": missing field '" + key + "'");
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw FormatError(where + ": field '" + key + "' has the wrong type");
  }
}

}  // namespace

DatasetManifest manifest_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("manifest is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw FormatError("manifest: top level must be an object");

  DatasetManifest m;
  m.frame_count = field<int>(j, "frame_count", "manifest");
  if (m.frame_count < 1) throw FormatError("manifest: frame_count must be at least 1");
  m.time_normalization = j.value("time_normalization", std::string("frame_index"));
  if (m.time_normalization != "frame_index")
    throw FormatError("manifest: unsupported time_normalization '" + m.time_normalization + "'");
  if (j.contains("held_out_cameras")) m.held_out_cameras = field<std::vector<int>>(j, "held_out_cameras", "manifest");
  if (j.contains("point_cloud")) m.point_cloud = field<std::string>(j, "point_cloud", "manifest");

  const json cams = j.value("cameras", json());
  if (!cams.is_array() || cams.empty()) throw FormatError("manifest: 'cameras' must be a non-empty array");
  for (std::size_t i = 0; i < cams.size(); ++i) {
    const std::string where = "manifest camera " + std::to_string(i);
    const json& c = cams[i];
    if (!c.is_object()) throw FormatError(where + ": must be an object");
    CameraEntry e;
    e.name = c.value("name", "cam" + std::to_string(i));
    e.camera.width = field<int>(c, "width", where);
    e.camera.height = field<int>(c, "height", where);
    e.camera.fx = field<double>(c, "fx", where);
    e.camera.fy = field<double>(c, "fy", where);
    e.camera.cx = field<double>(c, "cx", where);
    e.camera.cy = field<double>(c, "cy", where);
    const auto w2c = field<std::vector<double>>(c, "world_to_camera", where);
    if (w2c.size() != 16) throw FormatError(where + ": world_to_camera needs 16 values (row-major 4x4)");
    for (int r = 0; r < 4; ++r)
      for (int k = 0; k < 4; ++k) e.camera.world_to_camera(r, k) = w2c[r * 4 + k];
    e.image_template = field<std::string>(c, "images", where);
    try {
      e.camera.validate();
    } catch (const UsageError& err) {
      throw FormatError(where + ": " + err.what());
    }
    m.cameras.push_back(std::move(e));
  }
  for (int h : m.held_out_cameras)
    if (h < 0 || h >= int(m.cameras.size())) throw FormatError("manifest: held-out camera index out of range");
  return m;
}

void write_manifest(const fs::path& path, const DatasetManifest& m) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out << manifest_to_json(m) << '\n';
}

Dataset Dataset::load(const fs::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw MissingFileError(manifest_path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  Dataset d;
  d.manifest_ = manifest_from_json(ss.str());
  d.root_ = manifest_path.parent_path();
  for (int c = 0; c < int(d.manifest_.cameras.size()); ++c) {
    const Camera& cam = d.manifest_.cameras[c].camera;
    for (int f = 0; f < d.manifest_.frame_count; ++f) {
      const fs::path p = d.image_file(c, f);
      if (!fs::exists(p)) throw MissingFileError(p.string());
      const auto [w, h] = read_png_size(p);
      if (w != cam.width || h != cam.height)
        throw ResolutionMismatchError(p.string() + ": image is " + std::to_string(w) + "x" + std::to_string(h) +
                                      " but the camera declares " + std::to_string(cam.width) + "x" +
                                      std::to_string(cam.height));
    }
  }
  if (!d.manifest_.point_cloud.empty() && !fs::exists(d.root_ / d.manifest_.point_cloud))
    throw MissingFileError((d.root_ / d.manifest_.point_cloud).string());
  d.cache_.resize(d.manifest_.cameras.size() * std::size_t(d.manifest_.frame_count));
  return d;
}

fs::path Dataset::image_file(int camera, int frame) const { return root_ / manifest_.image_path(camera, frame); }

const Image<float>& Dataset::image(int camera, int frame) const {
  const std::size_t slot = std::size_t(camera) * manifest_.frame_count + frame;
  if (camera < 0 || camera >= int(manifest_.cameras.size()) || frame < 0 || frame >= manifest_.frame_count)
    throw UsageError("image index out of range");
  if (!cache_[slot]) cache_[slot] = read_png(image_file(camera, frame));
  return *cache_[slot];
}

PointCloud Dataset::point_cloud() const {
  if (manifest_.point_cloud.empty()) throw DataError("dataset has no point cloud");
  return load_pointcloud(root_ / manifest_.point_cloud);
}

}  // namespace stg
