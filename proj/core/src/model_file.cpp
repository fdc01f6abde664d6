#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "stg/dataset_io.hpp"
#include "stg/errors.hpp"

namespace stg {

namespace {

class Writer {
 public:
  explicit Writer(std::vector<std::uint8_t>& out) : out_(out) {}
  void u32(std::uint32_t v) {
    for (int k = 0; k < 4; ++k) out_.push_back(std::uint8_t(v >> (8 * k)));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void f32s(const std::vector<float>& v) {
    for (float x : v) f32(x);
  }
  void zeros(std::size_t n) { out_.insert(out_.end(), n, 0); }

 private:
  std::vector<std::uint8_t>& out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}
  void need(std::size_t n) const {
    if (pos_ + n > in_.size()) throw FormatError("model file truncated");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int k = 0; k < 4; ++k) v |= std::uint32_t(in_[pos_ + k]) << (8 * k);
    pos_ += 4;
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  void f32s(std::vector<float>& v, std::size_t n) {
    need(4 * n);
    v.resize(n);
    for (auto& x : v) x = f32();
  }
  void skip(std::size_t n) {
    need(n);
    pos_ += n;
  }
  std::size_t remaining() const { return in_.size() - pos_; }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

std::size_t mlp_floats(int hidden) { return std::size_t(hidden) * (9 + 1 + 3) + 3; }

}  // namespace

std::size_t model_file_size(std::size_t n, int motion_degree, int rotation_degree, int hidden) {
  const std::size_t per = 3 * (motion_degree + 1) + 4 * (rotation_degree + 1) + 3 + 1 + 1 + 1 + 9;
  return kModelHeaderBytes + 4 * (n * per + (hidden > 0 ? mlp_floats(hidden) : 0));
}

std::vector<std::uint8_t> serialize_model(const ModelFile& m) {
  m.cloud.check_consistent();
  if (m.mlp) m.mlp->check_shapes();
  std::vector<std::uint8_t> out;
  const int hidden = m.mlp ? m.mlp->hidden : 0;
  out.reserve(model_file_size(m.cloud.size(), m.cloud.motion_degree, m.cloud.rotation_degree, hidden));
  Writer w(out);
  out.insert(out.end(), std::begin(kModelMagic), std::end(kModelMagic));
  w.u32(kModelVersion);
  w.u32(m.lite() ? kFlagLite : 0u);
  w.u32(std::uint32_t(m.cloud.size()));
  w.u32(std::uint32_t(m.cloud.motion_degree));
  w.u32(std::uint32_t(m.cloud.rotation_degree));
  w.u32(std::uint32_t(hidden));
  w.u32(m.mlp ? std::uint32_t(m.mlp->activation) : std::uint32_t(Activation::Clamp));
  w.f32(m.time_min);
  w.f32(m.time_max);
  w.zeros(kModelHeaderBytes - out.size());
  for_each_field(m.cloud, [&](auto f) { w.f32s(*f.values); });
  if (m.mlp) m.mlp->for_each_block([&](const std::vector<float>& v) { w.f32s(v); });
  return out;
}

ModelFile parse_model(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kModelMagic, 4) != 0)
    throw FormatError("not a model file (bad magic)");
  Reader r(bytes);
  r.skip(4);
  const std::uint32_t version = r.u32();
  if (version != kModelVersion) throw FormatError("unsupported model version " + std::to_string(version));
  const std::uint32_t flags = r.u32();
  const std::uint32_t n = r.u32();
  const std::uint32_t np = r.u32();
  const std::uint32_t nq = r.u32();
  const std::uint32_t hidden = r.u32();
  const std::uint32_t activation = r.u32();
  ModelFile m;
  m.time_min = r.f32();
  m.time_max = r.f32();
  r.skip(kModelHeaderBytes - 40);
  if (np > 16 || nq > 16) throw FormatError("implausible polynomial degree in model header");
  if (activation > 1) throw FormatError("unknown activation in model header");
  const bool lite = (flags & kFlagLite) != 0;
  if (lite != (hidden == 0)) throw FormatError("lite flag disagrees with hidden width");
  const std::size_t expected = model_file_size(n, int(np), int(nq), int(hidden));
  if (bytes.size() < expected) throw FormatError("model file truncated");
  if (bytes.size() > expected) throw FormatError("model file has trailing bytes");

  m.cloud.motion_degree = int(np);
  m.cloud.rotation_degree = int(nq);
  for_each_field(m.cloud, [&](auto f) { r.f32s(*f.values, std::size_t(n) * f.stride); });
  if (!lite) {
    MlpHead<float> head = MlpHead<float>::zeros(int(hidden), Activation(activation));
    head.for_each_block([&](std::vector<float>& v) { r.f32s(v, v.size()); });
    m.mlp = std::move(head);
  }
  return m;
}

void save_model(const ModelFile& m, const std::filesystem::path& path) {
  const auto bytes = serialize_model(m);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open " + path.string() + " for writing");
  f.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
  if (!f) throw DataError("write failed: " + path.string());
}

ModelFile load_model(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw MissingFileError(path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return parse_model(bytes);
}

void export_web(const ModelFile& model, const std::filesystem::path& path) {
  ModelFile lite;
  lite.cloud = model.cloud;
  lite.time_min = model.time_min;
  lite.time_max = model.time_max;
  save_model(lite, path);
}

}  // namespace stg
