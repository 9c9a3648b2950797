#include "ktraj/nufft.hpp"

#include <algorithm>
#include <cmath>

namespace ktraj {

namespace {

constexpr double kCoordTol = 1e-12;

// Modified Bessel function I0, Abramowitz & Stegun 9.8.1 / 9.8.2.
double bessel_i0(double x) {
  const double ax = std::abs(x);
  if (ax < 3.75) {
    const double t = (x / 3.75) * (x / 3.75);
    return 1.0 + t * (3.5156229 + t * (3.0899424 + t * (1.2067492 +
                 t * (0.2659732 + t * (0.0360768 + t * 0.0045813)))));
  }
  const double t = 3.75 / ax;
  return (std::exp(ax) / std::sqrt(ax)) *
         (0.39894228 + t * (0.01328592 + t * (0.00225319 + t * (-0.00157565 +
          t * (0.00916281 + t * (-0.02057706 + t * (0.02635537 +
          t * (-0.01647633 + t * 0.00392377))))))));
}

void check_coords(const FrameCoords& fc) {
  require(fc.xy != nullptr && fc.n_shots >= 1 && fc.m >= 1, "empty frame coordinates");
  for (std::size_t j = 0; j < fc.count(); ++j) {
    const double kx = fc.kx(j), ky = fc.ky(j);
    if (!(std::isfinite(kx) && std::isfinite(ky)) ||
        std::abs(kx) > 0.5 + kCoordTol || std::abs(ky) > 0.5 + kCoordTol)
      throw ArgumentError("k-space coordinate out of range [-0.5, 0.5]");
  }
}

void check_image(const ComplexImage& img) {
  require(img.h >= 1 && img.w >= 1 &&
              img.v.size() == static_cast<std::size_t>(img.h) * img.w,
          "malformed image");
}

int wrap_index(int i, int n) {
  const int r = i % n;
  return r < 0 ? r + n : r;
}

int even_oversampled(int n, double sigma) {
  int v = static_cast<int>(std::ceil(sigma * n));
  if (v % 2 != 0) ++v;
  return v;
}

}  // namespace

double GriddingKernel::beta() const {
  validate();
  const double a = (width / oversampling) * (oversampling - 0.5);
  return kPi * std::sqrt(a * a - 0.8);
}

KSamples forward_direct(const ComplexImage& img, const FrameCoords& fc) {
  check_image(img);
  check_coords(fc);
  const int h = img.h, w = img.w;
  KSamples out;
  out.n_shots = fc.n_shots;
  out.m = fc.m;
  out.values.resize(fc.count());
  std::vector<cplx> ex(w), ey(h);
  std::vector<cplx> row_sum(h);
  for (std::size_t j = 0; j < fc.count(); ++j) {
    const double kx = fc.kx(j), ky = fc.ky(j);
    for (int x = 0; x < w; ++x) {
      const double ph = -kTwoPi * kx * (x - w / 2);
      ex[x] = cplx{std::cos(ph), std::sin(ph)};
    }
    for (int y = 0; y < h; ++y) {
      const double ph = -kTwoPi * ky * (y - h / 2);
      ey[y] = cplx{std::cos(ph), std::sin(ph)};
    }
    cplx acc{0.0, 0.0};
    for (int y = 0; y < h; ++y) {
      cplx rs{0.0, 0.0};
      const cplx* row = img.v.data() + static_cast<std::size_t>(y) * w;
      for (int x = 0; x < w; ++x) rs += row[x] * ex[x];
      acc += rs * ey[y];
    }
    out.values[j] = acc;
  }
  return out;
}

ComplexImage adjoint_direct(const KSamples& samples, const FrameCoords& fc,
                            int h, int w) {
  check_coords(fc);
  require(samples.values.size() == fc.count(), "sample/coordinate shape mismatch");
  ComplexImage out(h, w);
  std::vector<cplx> ex(w), ey(h);
  for (std::size_t j = 0; j < fc.count(); ++j) {
    const double kx = fc.kx(j), ky = fc.ky(j);
    for (int x = 0; x < w; ++x) {
      const double ph = kTwoPi * kx * (x - w / 2);
      ex[x] = cplx{std::cos(ph), std::sin(ph)};
    }
    for (int y = 0; y < h; ++y) {
      const double ph = kTwoPi * ky * (y - h / 2);
      ey[y] = cplx{std::cos(ph), std::sin(ph)};
    }
    const cplx val = samples.values[j];
    for (int y = 0; y < h; ++y) {
      const cplx vy = val * ey[y];
      cplx* row = out.v.data() + static_cast<std::size_t>(y) * w;
      for (int x = 0; x < w; ++x) row[x] += vy * ex[x];
    }
  }
  return out;
}

namespace {

template <typename ForwardFn>
std::vector<double> grad_impl(ForwardFn&& fwd, const ComplexImage& img,
                              const FrameCoords& fc, const KSamples& upstream) {
  check_image(img);
  require(upstream.values.size() == fc.count(), "upstream/coordinate shape mismatch");
  ComplexImage wx(img.h, img.w), wy(img.h, img.w);
  for (int y = 0; y < img.h; ++y) {
    for (int x = 0; x < img.w; ++x) {
      wx.at(y, x) = img.at(y, x) * static_cast<double>(x - img.w / 2);
      wy.at(y, x) = img.at(y, x) * static_cast<double>(y - img.h / 2);
    }
  }
  const KSamples fx = fwd(wx, fc);
  const KSamples fy = fwd(wy, fc);
  std::vector<double> grad(2 * fc.count());
  const cplx mtpi{0.0, -kTwoPi};  // -2 pi i
  for (std::size_t j = 0; j < fc.count(); ++j) {
    const cplx up = upstream.values[j];
    grad[2 * j] = std::real(std::conj(up) * (mtpi * fx.values[j]));
    grad[2 * j + 1] = std::real(std::conj(up) * (mtpi * fy.values[j]));
  }
  return grad;
}

}  // namespace

std::vector<double> grad_wrt_coords_direct(const ComplexImage& img, const FrameCoords& fc,
                                           const KSamples& upstream) {
  return grad_impl([](const ComplexImage& i, const FrameCoords& c) { return forward_direct(i, c); },
                   img, fc, upstream);
}

GriddedNufft::GriddedNufft(int h, int w, GriddingKernel kernel)
    : h_(h), w_(w), kernel_(kernel) {
  require(h >= 1 && w >= 1, "image dimensions must be positive");
  kernel_.validate();
  n1_ = even_oversampled(h, kernel_.oversampling);
  n2_ = even_oversampled(w, kernel_.oversampling);
  require(kernel_.width <= n1_ && kernel_.width <= n2_,
          "kernel width exceeds oversampled grid; image too small");

  const double beta = kernel_.beta();
  const double i0b = bessel_i0(beta);
  const int W = kernel_.width;
  auto psi_hat = [&](double xi) {
    const double arg = kPi * W * xi;
    const double z2 = beta * beta - arg * arg;
    double s;
    if (z2 > 1e-12) {
      const double z = std::sqrt(z2);
      s = std::sinh(z) / z;
    } else if (z2 < -1e-12) {
      const double z = std::sqrt(-z2);
      s = std::sin(z) / z;
    } else {
      s = 1.0;
    }
    return W * s / i0b;
  };
  deapod_y_.resize(h);
  for (int y = 0; y < h; ++y) deapod_y_[y] = 1.0 / psi_hat((y - h / 2) / double(n1_));
  deapod_x_.resize(w);
  for (int x = 0; x < w; ++x) deapod_x_[x] = 1.0 / psi_hat((x - w / 2) / double(n2_));

  fft_ = std::make_unique<Fft2D>(n1_, n2_);
  wy_.resize(W + 2);
  wx_.resize(W + 2);
}

namespace {

// Kaiser-Bessel kernel value at offset t in grid cells, support |t| <= W/2.
double kb_value(double t, int W, double beta, double i0b) {
  const double r = 2.0 * t / W;
  const double s = 1.0 - r * r;
  if (s <= 0.0) return 0.0;
  return bessel_i0(beta * std::sqrt(s)) / i0b;
}

}  // namespace

KSamples GriddedNufft::forward(const ComplexImage& img, const FrameCoords& fc) {
  check_image(img);
  require(img.h == h_ && img.w == w_, "image shape does not match engine");
  check_coords(fc);

  fft_->zero();
  cplx* buf = fft_->data();
  for (int y = 0; y < h_; ++y) {
    const int r = wrap_index(y - h_ / 2, n1_);
    for (int x = 0; x < w_; ++x) {
      const int c = wrap_index(x - w_ / 2, n2_);
      buf[static_cast<std::size_t>(r) * n2_ + c] =
          img.at(y, x) * (deapod_y_[y] * deapod_x_[x]);
    }
  }
  fft_->execute_forward();

  const int W = kernel_.width;
  const double beta = kernel_.beta();
  const double i0b = bessel_i0(beta);
  KSamples out;
  out.n_shots = fc.n_shots;
  out.m = fc.m;
  out.values.resize(fc.count());
  for (std::size_t j = 0; j < fc.count(); ++j) {
    const double ty = fc.ky(j) * n1_;
    const double tx = fc.kx(j) * n2_;
    const int ly0 = static_cast<int>(std::ceil(ty - W / 2.0));
    const int ly1 = static_cast<int>(std::floor(ty + W / 2.0));
    const int lx0 = static_cast<int>(std::ceil(tx - W / 2.0));
    const int lx1 = static_cast<int>(std::floor(tx + W / 2.0));
    for (int ly = ly0; ly <= ly1; ++ly) wy_[ly - ly0] = kb_value(ty - ly, W, beta, i0b);
    for (int lx = lx0; lx <= lx1; ++lx) wx_[lx - lx0] = kb_value(tx - lx, W, beta, i0b);
    cplx acc{0.0, 0.0};
    for (int ly = ly0; ly <= ly1; ++ly) {
      const int r = wrap_index(ly, n1_);
      const cplx* row = buf + static_cast<std::size_t>(r) * n2_;
      cplx rs{0.0, 0.0};
      for (int lx = lx0; lx <= lx1; ++lx) rs += row[wrap_index(lx, n2_)] * wx_[lx - lx0];
      acc += rs * wy_[ly - ly0];
    }
    out.values[j] = acc;
  }
  return out;
}

ComplexImage GriddedNufft::adjoint(const KSamples& samples, const FrameCoords& fc) {
  check_coords(fc);
  require(samples.values.size() == fc.count(), "sample/coordinate shape mismatch");

  const int W = kernel_.width;
  const double beta = kernel_.beta();
  const double i0b = bessel_i0(beta);
  fft_->zero();
  cplx* buf = fft_->data();
  for (std::size_t j = 0; j < fc.count(); ++j) {
    const double ty = fc.ky(j) * n1_;
    const double tx = fc.kx(j) * n2_;
    const int ly0 = static_cast<int>(std::ceil(ty - W / 2.0));
    const int ly1 = static_cast<int>(std::floor(ty + W / 2.0));
    const int lx0 = static_cast<int>(std::ceil(tx - W / 2.0));
    const int lx1 = static_cast<int>(std::floor(tx + W / 2.0));
    for (int ly = ly0; ly <= ly1; ++ly) wy_[ly - ly0] = kb_value(ty - ly, W, beta, i0b);
    for (int lx = lx0; lx <= lx1; ++lx) wx_[lx - lx0] = kb_value(tx - lx, W, beta, i0b);
    const cplx val = samples.values[j];
    for (int ly = ly0; ly <= ly1; ++ly) {
      const int r = wrap_index(ly, n1_);
      cplx* row = buf + static_cast<std::size_t>(r) * n2_;
      const cplx vy = val * wy_[ly - ly0];
      for (int lx = lx0; lx <= lx1; ++lx) row[wrap_index(lx, n2_)] += vy * wx_[lx - lx0];
    }
  }
  fft_->execute_backward();

  ComplexImage out(h_, w_);
  for (int y = 0; y < h_; ++y) {
    const int r = wrap_index(y - h_ / 2, n1_);
    for (int x = 0; x < w_; ++x) {
      const int c = wrap_index(x - w_ / 2, n2_);
      out.at(y, x) = buf[static_cast<std::size_t>(r) * n2_ + c] *
                     (deapod_y_[y] * deapod_x_[x]);
    }
  }
  return out;
}

std::vector<double> GriddedNufft::grad_wrt_coords(const ComplexImage& img,
                                                  const FrameCoords& fc,
                                                  const KSamples& upstream) {
  return grad_impl([this](const ComplexImage& i, const FrameCoords& c) { return forward(i, c); },
                   img, fc, upstream);
}

KSamples forward_fast(const ComplexImage& img, const FrameCoords& fc, GriddingKernel kernel) {
  GriddedNufft engine(img.h, img.w, kernel);
  return engine.forward(img, fc);
}

ComplexImage adjoint_fast(const KSamples& samples, const FrameCoords& fc, int h, int w,
                          GriddingKernel kernel) {
  GriddedNufft engine(h, w, kernel);
  return engine.adjoint(samples, fc);
}

void dump_ksamples_csv(std::ostream& out, const KSamples& samples, const FrameCoords& fc) {
  require(samples.values.size() == fc.count(), "sample/coordinate shape mismatch");
  out << "shot,sample,kx,ky,re,im\n";
  for (int s = 0; s < fc.n_shots; ++s) {
    for (int i = 0; i < fc.m; ++i) {
      const std::size_t j = static_cast<std::size_t>(s) * fc.m + i;
      out << s << ',' << i << ',' << fc.kx(j) << ',' << fc.ky(j) << ','
          << samples.values[j].real() << ',' << samples.values[j].imag() << '\n';
    }
  }
}

}  // namespace ktraj
