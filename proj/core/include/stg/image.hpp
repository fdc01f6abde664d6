#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "stg/errors.hpp"

namespace stg {

/// Interleaved H×W×C buffer, row-major, channel fastest.
template <class S>
struct Image {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<S> data;

  Image() = default;
  Image(int w, int h, int c, S fill = S(0))
      : width(w), height(h), channels(c),
        data(static_cast<std::size_t>(w) * h * c, fill) {}

  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
  std::size_t index(int x, int y, int c = 0) const {
    return (static_cast<std::size_t>(y) * width + x) * channels + c;
  }
  S& at(int x, int y, int c = 0) { return data[index(x, y, c)]; }
  const S& at(int x, int y, int c = 0) const { return data[index(x, y, c)]; }
  std::span<S> pixel(int x, int y) { return {data.data() + index(x, y), std::size_t(channels)}; }
  std::span<const S> pixel(int x, int y) const {
    return {data.data() + index(x, y), std::size_t(channels)};
  }

  bool same_shape(const Image& o) const {
    return width == o.width && height == o.height && channels == o.channels;
  }

  template <class T>
  Image<T> cast() const {
    Image<T> out(width, height, channels);
    for (std::size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<T>(data[i]);
    return out;
  }
};

template <class A, class B>
void require_same_shape(const Image<A>& a, const Image<B>& b, const char* what) {
  if (a.width != b.width || a.height != b.height || a.channels != b.channels)
    throw UsageError(std::string(what) + ": image shape mismatch");
}

}  // namespace stg
