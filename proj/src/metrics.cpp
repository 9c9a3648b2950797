#include "ktraj/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "ktraj/fft.hpp"

namespace ktraj {

namespace {

void check_same_shape(const RealImage& a, const RealImage& b) {
  require(a.h == b.h && a.w == b.w, "metric inputs must have the same shape");
  require(a.v.size() == static_cast<std::size_t>(a.h) * a.w &&
              b.v.size() == static_cast<std::size_t>(b.h) * b.w,
          "malformed image buffer");
}

bool images_identical(const RealImage& a, const RealImage& b) {
  for (std::size_t i = 0; i < a.v.size(); ++i)
    if (a.v[i] != b.v[i]) return false;
  return true;
}

}  // namespace

double psnr(const RealImage& ref, const RealImage& test, double data_range) {
  check_same_shape(ref, test);
  require(data_range > 0.0, "data_range must be positive");
  double mse = 0.0;
  for (std::size_t i = 0; i < ref.v.size(); ++i) {
    const double d = ref.v[i] - test.v[i];
    mse += d * d;
  }
  mse /= static_cast<double>(ref.v.size());
  if (mse == 0.0) return 100.0;
  return std::min(100.0, 10.0 * std::log10(data_range * data_range / mse));
}

// ---------------------------------------------------------------------------
// VIF (pixel domain)
// ---------------------------------------------------------------------------

namespace {

constexpr double kVifIntensityScale = 255.0;
constexpr double kVifSigmaNsq = 2.0;
constexpr double kVifEps = 1e-10;

struct Mat {
  int h = 0, w = 0;
  std::vector<double> v;
  Mat() = default;
  Mat(int hh, int ww) : h(hh), w(ww), v(static_cast<std::size_t>(hh) * ww, 0.0) {}
  double& at(int y, int x) { return v[static_cast<std::size_t>(y) * w + x]; }
  double at(int y, int x) const { return v[static_cast<std::size_t>(y) * w + x]; }
};

std::vector<double> gaussian_kernel(int n, double sd) {
  std::vector<double> k(n);
  const double c = (n - 1) / 2.0;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    k[i] = std::exp(-0.5 * (i - c) * (i - c) / (sd * sd));
    sum += k[i];
  }
  for (auto& x : k) x /= sum;
  return k;
}

// Separable valid-mode filtering.
Mat filter_valid(const Mat& img, const std::vector<double>& k) {
  const int n = static_cast<int>(k.size());
  const int oh = img.h - n + 1;
  const int ow = img.w - n + 1;
  Mat tmp(img.h, ow);
  for (int y = 0; y < img.h; ++y)
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += img.at(y, x + i) * k[i];
      tmp.at(y, x) = s;
    }
  Mat out(oh, ow);
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += tmp.at(y + i, x) * k[i];
      out.at(y, x) = s;
    }
  return out;
}

Mat decimate2(const Mat& img) {
  Mat out((img.h + 1) / 2, (img.w + 1) / 2);
  for (int y = 0; y < out.h; ++y)
    for (int x = 0; x < out.w; ++x) out.at(y, x) = img.at(2 * y, 2 * x);
  return out;
}

}  // namespace

double vif(const RealImage& ref_in, const RealImage& test_in) {
  check_same_shape(ref_in, test_in);
  const bool identical = images_identical(ref_in, test_in);

  Mat ref(ref_in.h, ref_in.w), tst(test_in.h, test_in.w);
  for (std::size_t i = 0; i < ref_in.v.size(); ++i) {
    ref.v[i] = ref_in.v[i] * kVifIntensityScale;
    tst.v[i] = test_in.v[i] * kVifIntensityScale;
  }

  double num = 0.0, den = 0.0;
  for (int scale = 1; scale <= 4; ++scale) {
    const int n = (1 << (4 - scale + 1)) + 1;  // 17, 9, 5, 3
    const auto win = gaussian_kernel(n, n / 5.0);
    if (scale > 1) {
      if (ref.h < n || ref.w < n) break;
      ref = decimate2(filter_valid(ref, win));
      tst = decimate2(filter_valid(tst, win));
    }
    if (ref.h < n || ref.w < n) break;

    Mat ref2(ref.h, ref.w), tst2(ref.h, ref.w), cross(ref.h, ref.w);
    for (std::size_t i = 0; i < ref.v.size(); ++i) {
      ref2.v[i] = ref.v[i] * ref.v[i];
      tst2.v[i] = tst.v[i] * tst.v[i];
      cross.v[i] = ref.v[i] * tst.v[i];
    }
    const Mat mu1 = filter_valid(ref, win);
    const Mat mu2 = filter_valid(tst, win);
    const Mat m11 = filter_valid(ref2, win);
    const Mat m22 = filter_valid(tst2, win);
    const Mat m12 = filter_valid(cross, win);

    for (std::size_t i = 0; i < mu1.v.size(); ++i) {
      double s1 = m11.v[i] - mu1.v[i] * mu1.v[i];
      double s2 = m22.v[i] - mu2.v[i] * mu2.v[i];
      double s12 = m12.v[i] - mu1.v[i] * mu2.v[i];
      s1 = std::max(s1, 0.0);
      s2 = std::max(s2, 0.0);

      double g = s12 / (s1 + kVifEps);
      double sv = s2 - g * s12;
      if (s1 < kVifEps) {
        g = 0.0;
        sv = s2;
        s1 = 0.0;
      }
      if (s2 < kVifEps) {
        g = 0.0;
        sv = 0.0;
      }
      if (g < 0.0) {
        sv = s2;
        g = 0.0;
      }
      sv = std::max(sv, kVifEps);
      num += std::log10(1.0 + g * g * s1 / (sv + kVifSigmaNsq));
      den += std::log10(1.0 + s1 / kVifSigmaNsq);
    }
  }
  if (den <= 1e-12) return identical ? 1.0 : 0.0;  // constant reference
  return num / den;
}

// ---------------------------------------------------------------------------
// FSIM
// ---------------------------------------------------------------------------

namespace {

constexpr double kFsimT1 = 0.85;
constexpr double kFsimT2 = 160.0;

// Phase congruency from a log-Gabor bank: per orientation, the coherent
// energy |sum_s resp_s| over the total amplitude sum_s |resp_s|.
Mat phase_congruency(const Mat& img) {
  const int h = img.h, w = img.w;
  const int nscale = 4, norient = 4;
  const double min_wavelength = 6.0, mult = 2.0, sigma_onf = 0.55;
  const double dtheta_on_sigma = 1.2;
  const double theta_sigma = kPi / norient / dtheta_on_sigma;

  Fft2D fft(h, w);
  for (int i = 0; i < h * w; ++i) fft.data()[i] = cplx{img.v[i], 0.0};
  fft.execute_forward();
  std::vector<cplx> spectrum(fft.data(), fft.data() + fft.size());

  // frequency grids in cycles/pixel, FFT layout
  std::vector<double> fx(w), fy(h);
  for (int x = 0; x < w; ++x) fx[x] = (x <= w / 2 ? x : x - w) / double(w);
  for (int y = 0; y < h; ++y) fy[y] = (y <= h / 2 ? y : y - h) / double(h);

  Mat energy_total(h, w), amplitude_total(h, w);
  std::vector<double> radial(static_cast<std::size_t>(h) * w);
  const double log_sigma = std::log(sigma_onf);

  for (int o = 0; o < norient; ++o) {
    const double angle = o * kPi / norient;
    std::vector<cplx> sum_resp(static_cast<std::size_t>(h) * w, cplx{0, 0});
    Mat amp_sum(h, w);
    for (int s = 0; s < nscale; ++s) {
      const double wavelength = min_wavelength * std::pow(mult, s);
      const double f0 = 1.0 / wavelength;
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          const std::size_t i = static_cast<std::size_t>(y) * w + x;
          const double r = std::sqrt(fx[x] * fx[x] + fy[y] * fy[y]);
          double g;
          if (r < 1e-12) {
            g = 0.0;  // no DC response
          } else {
            const double lr = std::log(r / f0);
            g = std::exp(-lr * lr / (2.0 * log_sigma * log_sigma));
            // lowpass keeps the bank inside the Nyquist square
            g /= 1.0 + std::pow(r / 0.45, 30.0);
            const double th = std::atan2(-fy[y], fx[x]);
            const double dth = std::atan2(std::sin(th - angle), std::cos(th - angle));
            g *= std::exp(-dth * dth / (2.0 * theta_sigma * theta_sigma));
          }
          radial[i] = g;
        }
      }
      for (std::size_t i = 0; i < fft.size(); ++i) fft.data()[i] = spectrum[i] * radial[i];
      fft.execute_backward();
      const double inv = 1.0 / (double(h) * w);
      for (std::size_t i = 0; i < fft.size(); ++i) {
        const cplx resp = fft.data()[i] * inv;
        sum_resp[i] += resp;
        amp_sum.v[i] += std::abs(resp);
      }
    }
    for (std::size_t i = 0; i < sum_resp.size(); ++i) {
      energy_total.v[i] += std::abs(sum_resp[i]);
      amplitude_total.v[i] += amp_sum.v[i];
    }
  }

  Mat pc(h, w);
  for (std::size_t i = 0; i < pc.v.size(); ++i)
    pc.v[i] = energy_total.v[i] / (amplitude_total.v[i] + 1e-4);
  return pc;
}

// Scharr gradient magnitude with reflect padding.
Mat gradient_magnitude(const Mat& img) {
  const int h = img.h, w = img.w;
  auto refl = [&](int i, int n) { return i < 0 ? -i : (i >= n ? 2 * n - i - 2 : i); };
  Mat out(h, w);
  static const double kx[3][3] = {{3, 0, -3}, {10, 0, -10}, {3, 0, -3}};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double gx = 0.0, gy = 0.0;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const double p = img.at(refl(y + dy, h), refl(x + dx, w));
          gx += kx[dy + 1][dx + 1] * p;
          gy += kx[dx + 1][dy + 1] * p;
        }
      }
      gx /= 16.0;
      gy /= 16.0;
      out.at(y, x) = std::sqrt(gx * gx + gy * gy);
    }
  }
  return out;
}

}  // namespace

double fsim(const RealImage& ref_in, const RealImage& test_in) {
  check_same_shape(ref_in, test_in);

  Mat ref(ref_in.h, ref_in.w), tst(test_in.h, test_in.w);
  for (std::size_t i = 0; i < ref_in.v.size(); ++i) {
    ref.v[i] = ref_in.v[i] * kVifIntensityScale;
    tst.v[i] = test_in.v[i] * kVifIntensityScale;
  }

  const Mat pc1 = phase_congruency(ref);
  const Mat pc2 = phase_congruency(tst);
  const Mat g1 = gradient_magnitude(ref);
  const Mat g2 = gradient_magnitude(tst);

  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < pc1.v.size(); ++i) {
    const double s_pc = (2.0 * pc1.v[i] * pc2.v[i] + kFsimT1) /
                        (pc1.v[i] * pc1.v[i] + pc2.v[i] * pc2.v[i] + kFsimT1);
    const double s_g = (2.0 * g1.v[i] * g2.v[i] + kFsimT2) /
                       (g1.v[i] * g1.v[i] + g2.v[i] * g2.v[i] + kFsimT2);
    const double pcm = std::max(pc1.v[i], pc2.v[i]);
    num += s_pc * s_g * pcm;
    den += pcm;
  }
  if (den <= 1e-12) return images_identical(ref_in, test_in) ? 1.0 : 0.0;
  return num / den;
}

MetricStats aggregate(const std::vector<double>& values) {
  require(!values.empty(), "cannot aggregate an empty metric list");
  MetricStats s;
  for (double v : values) s.mean += v;
  s.mean /= static_cast<double>(values.size());
  if (values.size() > 1) {
    double var = 0.0;
    for (double v : values) var += (v - s.mean) * (v - s.mean);
    var /= static_cast<double>(values.size() - 1);
    s.stderr_ = std::sqrt(var / static_cast<double>(values.size()));
  }
  return s;
}

}  // namespace ktraj
