#pragma once

#include <vector>

#include "ktraj/common.hpp"

namespace ktraj {

/// Real-valued (magnitude) image, row-major [height][width].
struct RealImage {
  int h = 0;
  int w = 0;
  std::vector<double> v;

  RealImage() = default;
  RealImage(int height, int width) : h(height), w(width) {
    require(height >= 1 && width >= 1, "image dimensions must be positive");
    v.assign(static_cast<std::size_t>(height) * width, 0.0);
  }
  double& at(int y, int x) { return v[static_cast<std::size_t>(y) * w + x]; }
  double at(int y, int x) const { return v[static_cast<std::size_t>(y) * w + x]; }
};

/// 10 log10(data_range^2 / MSE), capped at 100 dB for MSE = 0.
double psnr(const RealImage& ref, const RealImage& test, double data_range = 1.0);

/// Pixel-domain visual information fidelity over a 4-scale Gaussian pyramid.
/// Inputs are scaled to 0..255 internally; the stabilizing noise variance is
/// 2.0 on that scale. A constant reference yields 1 if the images are
/// identical and 0 otherwise.
double vif(const RealImage& ref, const RealImage& test);

/// Feature similarity: phase congruency from a log-Gabor bank (4 scales x
/// 4 orientations, min wavelength 6, mult 2, sigmaOnf 0.55) combined with
/// Scharr gradient magnitude, pooled with phase-congruency weighting
/// (T1 = 0.85, T2 = 160 on the 0..255 scale).
double fsim(const RealImage& ref, const RealImage& test);

struct MetricStats {
  double mean = 0.0;
  double stderr_ = 0.0;  // standard error of the mean
};

MetricStats aggregate(const std::vector<double>& values);

}  // namespace ktraj
