#include "ktraj/fft.hpp"

#include <fftw3.h>

#include <cstring>
#include <mutex>

namespace ktraj {

namespace {
// FFTW planning is not thread-safe; execution of distinct plans is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

Fft2D::Fft2D(int rows, int cols) : rows_(rows), cols_(cols) {
  require(rows >= 1 && cols >= 1, "FFT dimensions must be positive");
  buf_ = reinterpret_cast<cplx*>(fftw_malloc(sizeof(fftw_complex) * size()));
  if (!buf_) throw std::bad_alloc();
  std::memset(buf_, 0, sizeof(cplx) * size());
  std::lock_guard<std::mutex> lock(planner_mutex());
  auto* raw = reinterpret_cast<fftw_complex*>(buf_);
  plan_fwd_ = fftw_plan_dft_2d(rows, cols, raw, raw, FFTW_FORWARD, FFTW_ESTIMATE);
  plan_bwd_ = fftw_plan_dft_2d(rows, cols, raw, raw, FFTW_BACKWARD, FFTW_ESTIMATE);
}

Fft2D::~Fft2D() {
  std::lock_guard<std::mutex> lock(planner_mutex());
  fftw_destroy_plan(static_cast<fftw_plan>(plan_fwd_));
  fftw_destroy_plan(static_cast<fftw_plan>(plan_bwd_));
  fftw_free(buf_);
}

void Fft2D::zero() { std::memset(buf_, 0, sizeof(cplx) * size()); }

void Fft2D::execute_forward() { fftw_execute(static_cast<fftw_plan>(plan_fwd_)); }

void Fft2D::execute_backward() { fftw_execute(static_cast<fftw_plan>(plan_bwd_)); }

}  // namespace ktraj
