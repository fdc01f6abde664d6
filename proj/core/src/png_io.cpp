#include <png.h>

#include <cmath>
#include <cstring>

#include "stg/dataset_io.hpp"
#include "stg/errors.hpp"

namespace stg {

namespace fs = std::filesystem;

Image<float> read_png(const fs::path& path) {
  if (!fs::exists(path)) throw MissingFileError(path.string());
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.c_str()))
    throw FormatError("cannot decode PNG " + path.string() + ": " + img.message);
  img.format = PNG_FORMAT_RGB;
  std::vector<png_byte> buf(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, buf.data(), 0, nullptr)) {
    png_image_free(&img);
    throw FormatError("cannot decode PNG " + path.string() + ": " + img.message);
  }
  Image<float> out(int(img.width), int(img.height), 3);
  for (std::size_t i = 0; i < buf.size(); ++i) out.data[i] = float(buf[i]) / 255.0f;
  return out;
}

std::pair<int, int> read_png_size(const fs::path& path) {
  if (!fs::exists(path)) throw MissingFileError(path.string());
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.c_str()))
    throw FormatError("cannot decode PNG " + path.string() + ": " + img.message);
  const std::pair<int, int> size{int(img.width), int(img.height)};
  png_image_free(&img);
  return size;
}

void write_png(const fs::path& path, const Image<float>& rgb) {
  if (rgb.channels < 3) throw UsageError("write_png: need at least 3 channels");
  std::vector<png_byte> buf(rgb.pixel_count() * 3);
  for (std::size_t p = 0; p < rgb.pixel_count(); ++p)
    for (int c = 0; c < 3; ++c) {
      const float v = rgb.data[p * rgb.channels + c];
      const float clamped = std::isfinite(v) ? std::min(1.0f, std::max(0.0f, v)) : 0.0f;
      buf[p * 3 + c] = png_byte(std::lround(clamped * 255.0f));
    }
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  img.width = png_uint_32(rgb.width);
  img.height = png_uint_32(rgb.height);
  img.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&img, path.c_str(), 0, buf.data(), 0, nullptr))
    throw DataError("cannot write PNG " + path.string() + ": " + img.message);
}

}  // namespace stg
