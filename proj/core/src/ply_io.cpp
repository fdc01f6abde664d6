#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "stg/dataset_io.hpp"
#include "stg/errors.hpp"

namespace stg {

namespace fs = std::filesystem;

void PointCloud::push_back(const Eigen::Vector3f& p, const Eigen::Vector3f& c, float t) {
  xyz.insert(xyz.end(), {p.x(), p.y(), p.z()});
  rgb.insert(rgb.end(), {c.x(), c.y(), c.z()});
  time.push_back(t);
}

namespace {

enum class PlyType { I8, U8, I16, U16, I32, U32, F32, F64 };

PlyType parse_type(const std::string& s) {
  static const std::map<std::string, PlyType> types = {
      {"char", PlyType::I8},    {"int8", PlyType::I8},     {"uchar", PlyType::U8},  {"uint8", PlyType::U8},
      {"short", PlyType::I16},  {"int16", PlyType::I16},   {"ushort", PlyType::U16}, {"uint16", PlyType::U16},
      {"int", PlyType::I32},    {"int32", PlyType::I32},   {"uint", PlyType::U32},  {"uint32", PlyType::U32},
      {"float", PlyType::F32},  {"float32", PlyType::F32}, {"double", PlyType::F64}, {"float64", PlyType::F64}};
  auto it = types.find(s);
  if (it == types.end()) throw FormatError("unsupported PLY property type '" + s + "'");
  return it->second;
}

std::size_t type_size(PlyType t) {
  switch (t) {
    case PlyType::I8: case PlyType::U8: return 1;
    case PlyType::I16: case PlyType::U16: return 2;
    case PlyType::I32: case PlyType::U32: case PlyType::F32: return 4;
    case PlyType::F64: return 8;
  }
  return 0;
}

double read_binary(const unsigned char* p, PlyType t) {
  std::uint64_t raw = 0;
  for (std::size_t k = 0; k < type_size(t); ++k) raw |= std::uint64_t(p[k]) << (8 * k);
  switch (t) {
    case PlyType::I8: return double(std::int8_t(raw));
    case PlyType::U8: return double(std::uint8_t(raw));
    case PlyType::I16: return double(std::int16_t(raw));
    case PlyType::U16: return double(std::uint16_t(raw));
    case PlyType::I32: return double(std::int32_t(raw));
    case PlyType::U32: return double(std::uint32_t(raw));
    case PlyType::F32: return double(std::bit_cast<float>(std::uint32_t(raw)));
    case PlyType::F64: return std::bit_cast<double>(raw);
  }
  return 0;
}

struct Property {
  std::string name;
  PlyType type;
};

}  // namespace

PointCloud load_pointcloud(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingFileError(path.string());
  std::string line;
  if (!std::getline(in, line) || line.rfind("ply", 0) != 0) throw FormatError(path.string() + ": not a PLY file");

  std::string format;
  std::size_t vertex_count = 0;
  bool in_vertex = false, seen_vertex = false;
  std::vector<Property> props;
  while (true) {
    if (!std::getline(in, line)) throw FormatError(path.string() + ": PLY header not terminated");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "end_header") break;
    if (key == "comment" || key == "obj_info" || key.empty()) continue;
    if (key == "format") {
      ls >> format;
    } else if (key == "element") {
      std::string name;
      std::size_t count = 0;
      if (!(ls >> name >> count)) throw FormatError(path.string() + ": malformed element line");
      in_vertex = name == "vertex";
      if (in_vertex) {
        vertex_count = count;
        seen_vertex = true;
      } else if (!seen_vertex) {
        throw FormatError(path.string() + ": vertex element must come first");
      }
    } else if (key == "property") {
      std::string type, name;
      if (!(ls >> type)) throw FormatError(path.string() + ": malformed property line");
      if (type == "list") {
        if (in_vertex) throw FormatError(path.string() + ": list properties on vertices are not supported");
        continue;
      }
      if (!(ls >> name)) throw FormatError(path.string() + ": malformed property line");
      if (in_vertex) props.push_back({name, parse_type(type)});
    } else {
      throw FormatError(path.string() + ": unexpected header line '" + line + "'");
    }
  }
  if (!seen_vertex) throw FormatError(path.string() + ": no vertex element");
  if (format != "ascii" && format != "binary_little_endian")
    throw FormatError(path.string() + ": unsupported PLY format '" + format + "'");

  static constexpr std::array<const char*, 7> kRequired = {"x", "y", "z", "red", "green", "blue", "t"};
  std::array<int, 7> column{};
  for (std::size_t r = 0; r < kRequired.size(); ++r) {
    column[r] = -1;
    for (std::size_t p = 0; p < props.size(); ++p)
      if (props[p].name == kRequired[r]) column[r] = int(p);
    if (column[r] < 0) throw FormatError(path.string() + ": missing vertex property '" + kRequired[r] + "'");
  }

  std::vector<double> row(props.size());
  PointCloud pc;
  pc.xyz.reserve(3 * vertex_count);
  pc.rgb.reserve(3 * vertex_count);
  pc.time.reserve(vertex_count);
  std::size_t stride = 0;
  for (const auto& p : props) stride += type_size(p.type);
  std::vector<unsigned char> buf(stride);
  for (std::size_t v = 0; v < vertex_count; ++v) {
    if (format == "ascii") {
      if (!std::getline(in, line)) throw FormatError(path.string() + ": truncated vertex data");
      const char* cur = line.data();
      const char* end = line.data() + line.size();
      for (std::size_t p = 0; p < props.size(); ++p) {
        while (cur < end && (*cur == ' ' || *cur == '\t')) ++cur;
        auto res = std::from_chars(cur, end, row[p]);
        if (res.ec != std::errc()) throw FormatError(path.string() + ": bad number on vertex line " + std::to_string(v));
        cur = res.ptr;
      }
    } else {
      if (!in.read(reinterpret_cast<char*>(buf.data()), std::streamsize(stride)))
        throw FormatError(path.string() + ": truncated vertex data");
      std::size_t off = 0;
      for (std::size_t p = 0; p < props.size(); ++p) {
        row[p] = read_binary(buf.data() + off, props[p].type);
        off += type_size(props[p].type);
      }
    }
    for (int k = 0; k < 3; ++k) pc.xyz.push_back(float(row[column[k]]));
    for (int k = 0; k < 3; ++k) {
      const Property& p = props[column[3 + k]];
      const double c = row[column[3 + k]];
      pc.rgb.push_back(p.type == PlyType::F32 || p.type == PlyType::F64 ? float(c) : float(c / 255.0));
    }
    pc.time.push_back(float(row[column[6]]));
  }
  return pc;
}

void save_pointcloud(const fs::path& path, const PointCloud& pc) {
  if (pc.xyz.size() != 3 * pc.size() || pc.rgb.size() != 3 * pc.size())
    throw UsageError("save_pointcloud: array lengths disagree");
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out << "ply\nformat ascii 1.0\nelement vertex " << pc.size()
      << "\nproperty float x\nproperty float y\nproperty float z\n"
         "property uchar red\nproperty uchar green\nproperty uchar blue\nproperty float t\nend_header\n";
  char buf[32];
  auto put = [&](float v) {
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    out.write(buf, res.ptr - buf);
  };
  for (std::size_t i = 0; i < pc.size(); ++i) {
    put(pc.xyz[3 * i]);
    out << ' ';
    put(pc.xyz[3 * i + 1]);
    out << ' ';
    put(pc.xyz[3 * i + 2]);
    for (int k = 0; k < 3; ++k) {
      const float c = std::min(1.0f, std::max(0.0f, pc.rgb[3 * i + k]));
      out << ' ' << std::lround(c * 255.0f);
    }
    out << ' ';
    put(pc.time[i]);
    out << '\n';
  }
  if (!out) throw DataError("write failed: " + path.string());
}

}  // namespace stg
