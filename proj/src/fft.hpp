#pragma once

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <mutex>
#include <span>

namespace snfseg::detail {

/// FFTW's planner is not thread-safe; executing an existing plan is.
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

/// Real-to-complex forward transform of a fixed size. Owns its plan and buffers.
/// Plans use FFTW_ESTIMATE so results are bit-reproducible between runs.
class RealFft {
 public:
  explicit RealFft(std::size_t size) : size_(size) {
    in_ = fftw_alloc_real(size_);
    out_ = fftw_alloc_complex(size_ / 2 + 1);
    std::lock_guard lock(fftw_planner_mutex());
    plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(size_), in_, out_, FFTW_ESTIMATE);
  }
  ~RealFft() {
    {
      std::lock_guard lock(fftw_planner_mutex());
      fftw_destroy_plan(plan_);
    }
    fftw_free(in_);
    fftw_free(out_);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  std::size_t size() const { return size_; }
  std::span<double> input() { return {in_, size_}; }

  /// Bins 0..size/2 of the DFT of input().
  std::span<const std::complex<double>> execute() {
    fftw_execute(plan_);
    return {reinterpret_cast<const std::complex<double>*>(out_), size_ / 2 + 1};
  }

 private:
  std::size_t size_;
  double* in_ = nullptr;
  fftw_complex* out_ = nullptr;
  fftw_plan plan_ = nullptr;
};

/// In-place complex forward transform of a fixed size.
class ComplexFft {
 public:
  explicit ComplexFft(std::size_t size) : size_(size) {
    buf_ = fftw_alloc_complex(size_);
    std::lock_guard lock(fftw_planner_mutex());
    plan_ = fftw_plan_dft_1d(static_cast<int>(size_), buf_, buf_, FFTW_FORWARD, FFTW_ESTIMATE);
  }
  ~ComplexFft() {
    {
      std::lock_guard lock(fftw_planner_mutex());
      fftw_destroy_plan(plan_);
    }
    fftw_free(buf_);
  }
  ComplexFft(const ComplexFft&) = delete;
  ComplexFft& operator=(const ComplexFft&) = delete;

  std::span<std::complex<double>> data() { return {reinterpret_cast<std::complex<double>*>(buf_), size_}; }
  void execute() { fftw_execute(plan_); }

 private:
  std::size_t size_;
  fftw_complex* buf_ = nullptr;
  fftw_plan plan_ = nullptr;
};

}  // namespace snfseg::detail
