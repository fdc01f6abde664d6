#include <cstring>
#include <fstream>
#include <random>

#include <gtest/gtest.h>

#include "stg/dataset_io.hpp"
#include "stg/errors.hpp"
#include "stg/rasterizer.hpp"
#include "support/scenes.hpp"
#include "support/tempdir.hpp"

namespace stg {
namespace {

void write_text(const std::filesystem::path& p, const std::string& s) { std::ofstream(p) << s; }

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

// ---------------------------------------------------------------------------
// PLY

TEST(LoadPointcloud, SingleVertex) {
  testing::TempDir dir;
  write_text(dir / "one.ply",
             "ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nproperty float y\nproperty float z\n"
             "property uchar red\nproperty uchar green\nproperty uchar blue\nproperty float t\nend_header\n"
             "1.5 -2 3 255 0 51 0.25\n");
  const auto pc = load_pointcloud(dir / "one.ply");
  ASSERT_EQ(pc.size(), 1u);
  EXPECT_EQ(pc.xyz, (std::vector<float>{1.5f, -2.0f, 3.0f}));
  EXPECT_EQ(pc.rgb[0], 1.0f);
  EXPECT_EQ(pc.rgb[1], 0.0f);
  EXPECT_FLOAT_EQ(pc.rgb[2], 0.2f);
  EXPECT_EQ(pc.time[0], 0.25f);
}

TEST(LoadPointcloud, MissingTimeIsFormatError) {
  testing::TempDir dir;
  write_text(dir / "no_t.ply",
             "ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nproperty float y\nproperty float z\n"
             "property uchar red\nproperty uchar green\nproperty uchar blue\nend_header\n0 0 0 1 2 3\n");
  EXPECT_THROW(load_pointcloud(dir / "no_t.ply"), FormatError);
}

TEST(LoadPointcloud, MalformedHeaderAndMissingFile) {
  testing::TempDir dir;
  write_text(dir / "bad.ply", "not a ply\n");
  EXPECT_THROW(load_pointcloud(dir / "bad.ply"), FormatError);
  write_text(dir / "short.ply",
             "ply\nformat ascii 1.0\nelement vertex 2\nproperty float x\nproperty float y\nproperty float z\n"
             "property uchar red\nproperty uchar green\nproperty uchar blue\nproperty float t\nend_header\n"
             "0 0 0 1 2 3 0\n");
  EXPECT_THROW(load_pointcloud(dir / "short.ply"), FormatError);
  EXPECT_THROW(load_pointcloud(dir / "absent.ply"), MissingFileError);
}

TEST(LoadPointcloud, BinaryLittleEndian) {
  testing::TempDir dir;
  std::ofstream out(dir / "bin.ply", std::ios::binary);
  out << "ply\nformat binary_little_endian 1.0\nelement vertex 1\nproperty double x\nproperty float y\n"
         "property float z\nproperty uchar red\nproperty uchar green\nproperty uchar blue\nproperty float t\n"
         "end_header\n";
  const double x = 0.5;
  const float y = -1, z = 2, t = 1;
  const unsigned char rgb[3] = {0, 255, 0};
  out.write(reinterpret_cast<const char*>(&x), 8);
  out.write(reinterpret_cast<const char*>(&y), 4);
  out.write(reinterpret_cast<const char*>(&z), 4);
  out.write(reinterpret_cast<const char*>(rgb), 3);
  out.write(reinterpret_cast<const char*>(&t), 4);
  out.close();
  const auto pc = load_pointcloud(dir / "bin.ply");
  EXPECT_EQ(pc.xyz, (std::vector<float>{0.5f, -1.0f, 2.0f}));
  EXPECT_EQ(pc.rgb[1], 1.0f);
  EXPECT_EQ(pc.time[0], 1.0f);
}

TEST(SavePointcloud, RoundTripsGeneratedPoints) {
  testing::TempDir dir;
  PointCloud pc;
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<float> u(-10, 10);
  std::uniform_int_distribution<int> byte(0, 255);
  for (int i = 0; i < 100; ++i)
    pc.push_back({u(rng), u(rng), u(rng)}, {byte(rng) / 255.0f, byte(rng) / 255.0f, byte(rng) / 255.0f},
                 float(i % 7) / 6.0f);
  save_pointcloud(dir / "p.ply", pc);
  const auto back = load_pointcloud(dir / "p.ply");
  EXPECT_EQ(back.xyz, pc.xyz);
  EXPECT_EQ(back.rgb, pc.rgb);
  EXPECT_EQ(back.time, pc.time);
}

// ---------------------------------------------------------------------------
// Model files

ModelFile random_model(std::size_t n, bool lite, std::uint64_t seed = 2) {
  std::mt19937_64 rng(seed);
  ModelFile m;
  m.cloud = testing::random_cloud<float>(rng, n);
  if (!lite) m.mlp = MlpHead<float>::random(32, Activation::Sigmoid, rng);
  m.time_min = 0.0f;
  m.time_max = 1.0f;
  return m;
}

TEST(ModelFile, RoundTripIsBitExact) {
  testing::TempDir dir;
  const auto m = random_model(37, false);
  save_model(m, dir / "m.stgm");
  const auto back = load_model(dir / "m.stgm");
  for_each_field(back.cloud, [&](auto f) {
    for_each_field(m.cloud, [&](auto g) {
      if (f.name == g.name) {
        ASSERT_EQ(f.values->size(), g.values->size());
        EXPECT_EQ(std::memcmp(f.values->data(), g.values->data(), f.values->size() * 4), 0) << f.name;
      }
    });
  });
  ASSERT_TRUE(back.mlp.has_value());
  EXPECT_EQ(back.mlp->activation, Activation::Sigmoid);
  EXPECT_EQ(back.mlp->w1, m.mlp->w1);
  EXPECT_EQ(back.mlp->b2, m.mlp->b2);
  EXPECT_EQ(serialize_model(back), serialize_model(m));
}

TEST(ModelFile, LiteFlagOmitsMlp) {
  const auto m = random_model(5, true);
  const auto bytes = serialize_model(m);
  EXPECT_EQ(bytes.size(), 60u + 140u * 5);
  std::uint32_t flags;
  std::memcpy(&flags, bytes.data() + 8, 4);
  EXPECT_EQ(flags & kFlagLite, kFlagLite);
  EXPECT_TRUE(parse_model(bytes).lite());
}

TEST(ModelFile, SizeMatchesClosedForm) {
  const std::size_t mlp_bytes = 4 * (32 * 9 + 32 + 3 * 32 + 3);
  for (std::size_t n : {1u, 100u, 10000u}) {
    EXPECT_EQ(model_file_size(n, 3, 1, 0), 60 + 140 * n);
    EXPECT_EQ(model_file_size(n, 3, 1, 32), 60 + 140 * n + mlp_bytes);
    EXPECT_EQ(serialize_model(random_model(n, false)).size(), 60 + 140 * n + mlp_bytes);
  }
  EXPECT_EQ(model_file_size(2, 1, 0, 0), 60 + 2 * 4 * (6 + 4 + 3 + 1 + 1 + 1 + 9));
}

TEST(ModelFile, HeaderLayout) {
  auto m = random_model(3, false);
  m.time_min = -0.5f;
  const auto b = serialize_model(m);
  EXPECT_EQ(std::memcmp(b.data(), "STGM", 4), 0);
  auto u32 = [&](std::size_t off) {
    std::uint32_t v;
    std::memcpy(&v, b.data() + off, 4);
    return v;
  };
  EXPECT_EQ(u32(4), 1u);    // version
  EXPECT_EQ(u32(8), 0u);    // flags
  EXPECT_EQ(u32(12), 3u);   // N
  EXPECT_EQ(u32(16), 3u);   // n_p
  EXPECT_EQ(u32(20), 1u);   // n_q
  EXPECT_EQ(u32(24), 32u);  // hidden
  EXPECT_EQ(u32(28), 1u);   // activation
  float tmin;
  std::memcpy(&tmin, b.data() + 32, 4);
  EXPECT_EQ(tmin, -0.5f);
  for (std::size_t i = 40; i < 60; ++i) EXPECT_EQ(b[i], 0);
  float first;
  std::memcpy(&first, b.data() + 60, 4);
  EXPECT_EQ(first, m.cloud.motion[0]);
}

TEST(ModelFile, RejectsCorruptFiles) {
  auto bytes = serialize_model(random_model(4, false));
  auto bad = bytes;
  bad[0] = 'X';
  EXPECT_THROW(parse_model(bad), FormatError);
  bad = bytes;
  bad[4] = 2;
  EXPECT_THROW(parse_model(bad), FormatError);
  bad = bytes;
  bad.pop_back();
  EXPECT_THROW(parse_model(bad), FormatError);
  bad = bytes;
  bad.push_back(0);
  EXPECT_THROW(parse_model(bad), FormatError);
  EXPECT_THROW(parse_model(std::span(bytes).first(30)), FormatError);
  testing::TempDir dir;
  EXPECT_THROW(load_model(dir / "missing.stgm"), MissingFileError);
}

TEST(ExportWeb, DropsMlpAndCopiesLiteModels) {
  testing::TempDir dir;
  const auto full = random_model(20, false);
  save_model(full, dir / "full.stgm");
  export_web(full, dir / "web.stgm");
  const auto web = load_model(dir / "web.stgm");
  EXPECT_TRUE(web.lite());
  EXPECT_EQ(web.cloud.f_base, full.cloud.f_base);

  const auto lite = random_model(20, true, 3);
  save_model(lite, dir / "lite.stgm");
  export_web(lite, dir / "lite_web.stgm");
  EXPECT_EQ(read_bytes(dir / "lite_web.stgm"), read_bytes(dir / "lite.stgm"));

  const Camera cam = testing::axis_camera(32, 32, 32);
  const auto a = render_forward(full.cloud, cam, 0.4f), b = render_forward(web.cloud, cam, 0.4f);
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 32; ++x)
      for (int c = 0; c < 3; ++c) EXPECT_EQ(a.image.features.at(x, y, c), b.image.features.at(x, y, c));
}

// ---------------------------------------------------------------------------
// Manifests and datasets

DatasetManifest two_camera_manifest() {
  DatasetManifest m;
  m.frame_count = 1;
  for (int c = 0; c < 2; ++c) {
    CameraEntry e;
    e.name = "cam" + std::to_string(c);
    e.camera = testing::axis_camera(8, 6, 10);
    e.camera.world_to_camera(0, 3) = double(c);
    e.image_template = "img" + std::to_string(c) + "_{frame}.png";
    m.cameras.push_back(e);
  }
  m.held_out_cameras = {1};
  return m;
}

TEST(Dataset, MinimalTwoCameraManifestLoads) {
  testing::TempDir dir;
  const auto m = two_camera_manifest();
  write_manifest(dir / "manifest.json", m);
  Image<float> img(8, 6, 3, 0.5f);
  img.at(2, 3, 1) = 1.0f;
  write_png(dir / "img0_0000.png", img);
  write_png(dir / "img1_0000.png", Image<float>(8, 6, 3, 0.0f));
  const auto ds = Dataset::load(dir / "manifest.json");
  EXPECT_EQ(ds.manifest().frame_count, 1);
  EXPECT_EQ(ds.manifest().cameras.size(), 2u);
  EXPECT_EQ(ds.manifest().train_cameras(), std::vector<int>{0});
  EXPECT_TRUE(ds.manifest().is_held_out(1));
  const auto& loaded = ds.image(0, 0);
  EXPECT_EQ(loaded.at(2, 3, 1), 1.0f);
  EXPECT_NEAR(loaded.at(0, 0, 0), 128 / 255.0f, 1e-6);
  EXPECT_EQ(&ds.image(0, 0), &loaded);  // cached
  EXPECT_THROW(ds.point_cloud(), DataError);
}

TEST(Dataset, MissingImageNamesThePath) {
  testing::TempDir dir;
  write_manifest(dir / "manifest.json", two_camera_manifest());
  write_png(dir / "img0_0000.png", Image<float>(8, 6, 3));
  try {
    Dataset::load(dir / "manifest.json");
    FAIL() << "expected MissingFileError";
  } catch (const MissingFileError& e) {
    EXPECT_NE(e.path().find("img1_0000.png"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("img1_0000.png"), std::string::npos);
  }
}

TEST(Dataset, ResolutionMismatch) {
  testing::TempDir dir;
  write_manifest(dir / "manifest.json", two_camera_manifest());
  write_png(dir / "img0_0000.png", Image<float>(8, 6, 3));
  write_png(dir / "img1_0000.png", Image<float>(6, 8, 3));
  EXPECT_THROW(Dataset::load(dir / "manifest.json"), ResolutionMismatchError);
}

TEST(Dataset, MalformedJson) {
  testing::TempDir dir;
  write_text(dir / "manifest.json", "{\"cameras\": [");
  EXPECT_THROW(Dataset::load(dir / "manifest.json"), FormatError);
  write_text(dir / "manifest.json", "{\"frame_count\": 0, \"cameras\": []}");
  EXPECT_THROW(Dataset::load(dir / "manifest.json"), FormatError);
  EXPECT_THROW(Dataset::load(dir / "absent.json"), MissingFileError);
}

TEST(Manifest, JsonRoundTrip) {
  auto m = two_camera_manifest();
  m.point_cloud = "points.ply";
  m.frame_count = 20;
  m.cameras[1].camera.world_to_camera.topLeftCorner<3, 3>() =
      Eigen::AngleAxisd(0.4, Eigen::Vector3d::UnitY()).toRotationMatrix();
  const auto back = manifest_from_json(manifest_to_json(m));
  EXPECT_EQ(manifest_to_json(back), manifest_to_json(m));
  EXPECT_EQ(back.cameras[1].camera.world_to_camera, m.cameras[1].camera.world_to_camera);
  EXPECT_EQ(back.image_path(0, 12), "img0_0012.png");
}

TEST(Png, RoundTripsQuantizedValues) {
  testing::TempDir dir;
  Image<float> img(5, 4, 3);
  for (std::size_t i = 0; i < img.data.size(); ++i) img.data[i] = float(i % 256) / 255.0f;
  write_png(dir / "x.png", img);
  EXPECT_EQ(read_png_size(dir / "x.png"), std::make_pair(5, 4));
  EXPECT_EQ(read_png(dir / "x.png").data, img.data);
}

}  // namespace
}  // namespace stg
