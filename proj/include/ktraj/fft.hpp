#pragma once

#include <memory>

#include "ktraj/common.hpp"

namespace ktraj {

/// Complex 2D FFT of fixed size, backed by FFTW. Owns an aligned in-place
/// buffer; callers fill data(), execute, and read data() back. Forward is
/// sign -1, backward is sign +1, both unnormalized. Plan creation is
/// serialized internally; a single instance is not reentrant.
class Fft2D {
public:
  Fft2D(int rows, int cols);
  ~Fft2D();
  Fft2D(const Fft2D&) = delete;
  Fft2D& operator=(const Fft2D&) = delete;

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  cplx* data() { return buf_; }
  const cplx* data() const { return buf_; }
  std::size_t size() const { return static_cast<std::size_t>(rows_) * cols_; }

  void zero();
  void execute_forward();
  void execute_backward();

private:
  int rows_;
  int cols_;
  cplx* buf_;
  void* plan_fwd_;
  void* plan_bwd_;
};

}  // namespace ktraj
