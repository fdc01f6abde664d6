#pragma once

#include <limits>
#include <vector>

#include "stg/image.hpp"

namespace stg {

/// PSNR in dB for images in [0, 1]; +infinity when the images are identical.
template <class S>
double psnr(const Image<S>& a, const Image<S>& b);

/// Mean SSIM over pixels and channels with an 11×11 Gaussian window
/// (sigma 1.5), K1 = 0.01, K2 = 0.03 and symmetric edge padding. When
/// grad_a is non-null it receives dSSIM/da.
template <class S>
double ssim(const Image<S>& a, const Image<S>& b, double data_range, Image<S>* grad_a = nullptr);

/// (1 - SSIM) / 2. data_range 1.0 gives DSSIM₁, 2.0 gives DSSIM₂.
template <class S>
double dssim(const Image<S>& a, const Image<S>& b, double data_range);

struct FrameMetrics {
  int camera = 0;
  int frame = 0;
  double psnr = 0;
  double dssim1 = 0;
  double dssim2 = 0;
};

struct MetricReport {
  double psnr = 0;    // mean over frames
  double dssim1 = 0;
  double dssim2 = 0;
  std::vector<FrameMetrics> frames;

  void add(FrameMetrics f);
  /// Recomputes the means from `frames`. PSNR is averaged per frame, with
  /// identical frames (infinite PSNR) making the mean infinite.
  void finalize();
};

}  // namespace stg
