#include "stg/metrics.hpp"

#include <array>
#include <cmath>

namespace stg {

namespace {

constexpr int kRadius = 5;
constexpr double kSigma = 1.5;

std::array<double, 2 * kRadius + 1> gaussian_window() {
  std::array<double, 2 * kRadius + 1> w{};
  double sum = 0;
  for (int k = -kRadius; k <= kRadius; ++k) {
    w[k + kRadius] = std::exp(-(k * k) / (2 * kSigma * kSigma));
    sum += w[k + kRadius];
  }
  for (double& v : w) v /= sum;
  return w;
}

// Symmetric (half-sample) reflection: -1 -> 0, n -> n-1.
int reflect(int i, int n) {
  while (i < 0 || i >= n) {
    if (i < 0) i = -i - 1;
    if (i >= n) i = 2 * n - i - 1;
  }
  return i;
}

// Single-channel plane, row-major.
using Plane = std::vector<double>;

// Source index for every padded position -kRadius..n-1+kRadius.
std::vector<int> reflect_table(int n) {
  std::vector<int> t(n + 2 * kRadius);
  for (int i = 0; i < int(t.size()); ++i) t[i] = reflect(i - kRadius, n);
  return t;
}

// Separable blur with symmetric padding.
Plane filter(const Plane& in, int w, int h) {
  static const auto win = gaussian_window();
  const auto rx = reflect_table(w), ry = reflect_table(h);
  Plane tmp(in.size()), out(in.size());
  std::vector<double> row(w + 2 * kRadius);
  for (int y = 0; y < h; ++y) {
    const double* src = in.data() + std::size_t(y) * w;
    for (int i = 0; i < int(row.size()); ++i) row[i] = src[rx[i]];
    double* dst = tmp.data() + std::size_t(y) * w;
    for (int x = 0; x < w; ++x) {
      double acc = 0;
      for (int k = 0; k <= 2 * kRadius; ++k) acc += win[k] * row[x + k];
      dst[x] = acc;
    }
  }
  for (int y = 0; y < h; ++y) {
    double* dst = out.data() + std::size_t(y) * w;
    for (int k = 0; k <= 2 * kRadius; ++k) {
      const double wk = win[k];
      const double* src = tmp.data() + std::size_t(ry[y + k]) * w;
      for (int x = 0; x < w; ++x) dst[x] += wk * src[x];
    }
  }
  return out;
}

// Adjoint of filter(): scatter through the window, then fold the padding
// back onto the pixels it was copied from.
Plane filter_adjoint(const Plane& in, int w, int h) {
  static const auto win = gaussian_window();
  const auto rx = reflect_table(w), ry = reflect_table(h);
  Plane tmp(in.size(), 0.0), out(in.size(), 0.0);
  for (int y = 0; y < h; ++y) {
    const double* src = in.data() + std::size_t(y) * w;
    for (int k = 0; k <= 2 * kRadius; ++k) {
      const double wk = win[k];
      double* dst = tmp.data() + std::size_t(ry[y + k]) * w;
      for (int x = 0; x < w; ++x) dst[x] += wk * src[x];
    }
  }
  std::vector<double> row(w + 2 * kRadius);
  for (int y = 0; y < h; ++y) {
    std::fill(row.begin(), row.end(), 0.0);
    const double* src = tmp.data() + std::size_t(y) * w;
    for (int x = 0; x < w; ++x)
      for (int k = 0; k <= 2 * kRadius; ++k) row[x + k] += win[k] * src[x];
    double* dst = out.data() + std::size_t(y) * w;
    for (int i = 0; i < int(row.size()); ++i) dst[rx[i]] += row[i];
  }
  return out;
}

template <class S>
Plane channel(const Image<S>& img, int c) {
  Plane p(img.pixel_count());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = double(img.data[i * img.channels + c]);
  return p;
}

}  // namespace

template <class S>
double psnr(const Image<S>& a, const Image<S>& b) {
  require_same_shape(a, b, "psnr");
  double se = 0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double d = double(a.data[i]) - double(b.data[i]);
    se += d * d;
  }
  if (se == 0) return std::numeric_limits<double>::infinity();
  return -10.0 * std::log10(se / double(a.data.size()));
}

template <class S>
double ssim(const Image<S>& a, const Image<S>& b, double data_range, Image<S>* grad_a) {
  require_same_shape(a, b, "ssim");
  const int w = a.width, h = a.height;
  const double c1 = (0.01 * data_range) * (0.01 * data_range);
  const double c2 = (0.03 * data_range) * (0.03 * data_range);
  const std::size_t n = a.pixel_count();
  const double norm = 1.0 / double(n * a.channels);
  if (grad_a) *grad_a = Image<S>(w, h, a.channels);

  double total = 0;
  for (int c = 0; c < a.channels; ++c) {
    const Plane x = channel(a, c), y = channel(b, c);
    Plane xx(n), yy(n), xy(n);
    for (std::size_t i = 0; i < n; ++i) {
      xx[i] = x[i] * x[i];
      yy[i] = y[i] * y[i];
      xy[i] = x[i] * y[i];
    }
    const Plane mx = filter(x, w, h), my = filter(y, w, h);
    const Plane exx = filter(xx, w, h), eyy = filter(yy, w, h), exy = filter(xy, w, h);
    Plane ga, gb, gc;
    if (grad_a) ga.resize(n), gb.resize(n), gc.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double vx = exx[i] - mx[i] * mx[i];
      const double vy = eyy[i] - my[i] * my[i];
      const double cxy = exy[i] - mx[i] * my[i];
      const double n1 = 2 * mx[i] * my[i] + c1, n2 = 2 * cxy + c2;
      const double d1 = mx[i] * mx[i] + my[i] * my[i] + c1, d2 = vx + vy + c2;
      const double s = (n1 * n2) / (d1 * d2);
      total += s;
      if (!grad_a) continue;
      const double ds_dmx = 2 * my[i] * n2 / (d1 * d2) - s * 2 * mx[i] / d1;
      const double ds_dvx = -s / d2;
      const double ds_dcxy = 2 * n1 / (d1 * d2);
      ga[i] = ds_dmx - 2 * ds_dvx * mx[i] - ds_dcxy * my[i];
      gb[i] = ds_dvx;
      gc[i] = ds_dcxy;
    }
    if (!grad_a) continue;
    const Plane ta = filter_adjoint(ga, w, h), tb = filter_adjoint(gb, w, h), tc = filter_adjoint(gc, w, h);
    for (std::size_t i = 0; i < n; ++i)
      grad_a->data[i * a.channels + c] = S(norm * (ta[i] + 2 * tb[i] * x[i] + tc[i] * y[i]));
  }
  return total * norm;
}

template <class S>
double dssim(const Image<S>& a, const Image<S>& b, double data_range) {
  return 0.5 * (1.0 - ssim(a, b, data_range));
}

void MetricReport::add(FrameMetrics f) { frames.push_back(f); }

void MetricReport::finalize() {
  psnr = dssim1 = dssim2 = 0;
  if (frames.empty()) return;
  for (const auto& f : frames) {
    psnr += f.psnr;
    dssim1 += f.dssim1;
    dssim2 += f.dssim2;
  }
  const double n = double(frames.size());
  psnr /= n;
  dssim1 /= n;
  dssim2 /= n;
}

template double psnr<float>(const Image<float>&, const Image<float>&);
template double psnr<double>(const Image<double>&, const Image<double>&);
template double ssim<float>(const Image<float>&, const Image<float>&, double, Image<float>*);
template double ssim<double>(const Image<double>&, const Image<double>&, double, Image<double>*);
template double dssim<float>(const Image<float>&, const Image<float>&, double);
template double dssim<double>(const Image<double>&, const Image<double>&, double);

}  // namespace stg
