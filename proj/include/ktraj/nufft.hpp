#pragma once

#include <memory>
#include <ostream>
#include <vector>

#include "ktraj/common.hpp"
#include "ktraj/fft.hpp"
#include "ktraj/trajectory.hpp"

namespace ktraj {

/// Complex-valued 2D image, row-major [height][width].
struct ComplexImage {
  int h = 0;
  int w = 0;
  std::vector<cplx> v;

  ComplexImage() = default;
  ComplexImage(int height, int width) : h(height), w(width) {
    require(height >= 1 && width >= 1, "image dimensions must be positive");
    v.assign(static_cast<std::size_t>(height) * width, cplx{0.0, 0.0});
  }
  cplx& at(int y, int x) { return v[static_cast<std::size_t>(y) * w + x]; }
  const cplx& at(int y, int x) const { return v[static_cast<std::size_t>(y) * w + x]; }
};

/// Non-uniform frequency samples of one frame, [n_shots][m].
struct KSamples {
  int n_shots = 0;
  int m = 0;
  std::vector<cplx> values;
};

/// One frame's slice of a TrajectorySet: n_shots*m (kx, ky) pairs.
struct FrameCoords {
  const double* xy = nullptr;
  int n_shots = 0;
  int m = 0;
  std::size_t count() const { return static_cast<std::size_t>(n_shots) * m; }
  double kx(std::size_t j) const { return xy[2 * j]; }
  double ky(std::size_t j) const { return xy[2 * j + 1]; }
};

inline FrameCoords frame_coords(const TrajectorySet& traj, int frame) {
  require(frame >= 0 && frame < traj.n_frames(), "frame index out of range");
  return FrameCoords{traj.frame_data(frame), traj.n_shots(), traj.m()};
}

/// Kaiser-Bessel spreading kernel for the gridded transform. The shape
/// parameter follows the minimal-oversampling rule
///   beta = pi * sqrt((W/sigma)^2 (sigma - 1/2)^2 - 0.8).
struct GriddingKernel {
  int width = 7;              // support in oversampled grid cells
  double oversampling = 2.0;  // sigma

  void validate() const {
    require(width >= 2, "kernel width must be >= 2");
    require(oversampling >= 1.25, "kernel oversampling must be >= 1.25");
  }
  double beta() const;
};

/// Exact O(HW * M) evaluation of
///   X[j] = sum_{x,y} img[y][x] exp(-2 pi i (kx u(x) + ky v(y)))
/// with centered integer pixel grids u, v (DC at k = (0,0)).
KSamples forward_direct(const ComplexImage& img, const FrameCoords& fc);

/// Exact conjugate-transpose of forward_direct.
ComplexImage adjoint_direct(const KSamples& samples, const FrameCoords& fc,
                            int h, int w);

/// d(loss)/d(coords) for loss pairing real-linearly with the sample values:
///   grad_kx[j] = Re( conj(upstream[j]) * (-2 pi i) * F(u . img)(k_j) )
/// Evaluated with two extra NUFFT calls on the coordinate-weighted images.
/// Returns [n_shots][m][2] reals. The direct variant is exact.
std::vector<double> grad_wrt_coords_direct(const ComplexImage& img, const FrameCoords& fc,
                                           const KSamples& upstream);

/// Kaiser-Bessel gridded NUFFT for a fixed image size: deapodize, zero-pad
/// to the oversampled grid, FFT, then kernel interpolation at the sample
/// locations. The adjoint is the exact transpose of the forward steps, so
/// the fast pair satisfies the adjoint identity to machine precision and
/// matches the direct pair within kernel accuracy. Instances own FFT
/// buffers and are not reentrant; use one per thread.
class GriddedNufft {
public:
  GriddedNufft(int h, int w, GriddingKernel kernel = {});

  int h() const { return h_; }
  int w() const { return w_; }
  const GriddingKernel& kernel() const { return kernel_; }

  KSamples forward(const ComplexImage& img, const FrameCoords& fc);
  ComplexImage adjoint(const KSamples& samples, const FrameCoords& fc);
  std::vector<double> grad_wrt_coords(const ComplexImage& img, const FrameCoords& fc,
                                      const KSamples& upstream);

private:
  int h_, w_;
  GriddingKernel kernel_;
  int n1_, n2_;  // oversampled grid (rows, cols)
  std::vector<double> deapod_y_, deapod_x_;  // 1 / psi_hat per centered pixel
  std::unique_ptr<Fft2D> fft_;
  std::vector<double> wy_, wx_;  // per-sample kernel weight scratch
};

/// One-shot conveniences for tests and tools (plan setup per call).
KSamples forward_fast(const ComplexImage& img, const FrameCoords& fc,
                      GriddingKernel kernel = {});
ComplexImage adjoint_fast(const KSamples& samples, const FrameCoords& fc, int h, int w,
                          GriddingKernel kernel = {});

/// CSV rows: shot,sample,kx,ky,re,im
void dump_ksamples_csv(std::ostream& out, const KSamples& samples, const FrameCoords& fc);

}  // namespace ktraj
