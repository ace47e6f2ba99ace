#pragma once

#include <fftw3.h>

#include <algorithm>
#include <complex>
#include <cstddef>
#include <mutex>
#include <span>

#include "holoevs/field.hpp"

namespace holoevs {

namespace detail {
// FFTW's planner is not re-entrant.
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace detail

/// In-place 2D DFT over a row-major height x width buffer.
///
/// Forward uses the e^{-j2pi f x} kernel and no scaling; inverse uses e^{+j2pi f x}
/// and divides by width*height, so inverse(forward(x)) == x.
class Fft2d {
 public:
  Fft2d(std::size_t width, std::size_t height) : width_(width), height_(height) {
    require(width >= 1 && height >= 1, "fft: empty transform");
    buffer_ = fftw_alloc_complex(width * height);
    require(buffer_ != nullptr, "fft: allocation failed");
    std::lock_guard lock(detail::fftw_planner_mutex());
    const int h = static_cast<int>(height);
    const int w = static_cast<int>(width);
    forward_ = fftw_plan_dft_2d(h, w, buffer_, buffer_, FFTW_FORWARD, FFTW_ESTIMATE);
    inverse_ = fftw_plan_dft_2d(h, w, buffer_, buffer_, FFTW_BACKWARD, FFTW_ESTIMATE);
  }

  Fft2d(const Fft2d&) = delete;
  Fft2d& operator=(const Fft2d&) = delete;

  ~Fft2d() {
    std::lock_guard lock(detail::fftw_planner_mutex());
    if (forward_) fftw_destroy_plan(forward_);
    if (inverse_) fftw_destroy_plan(inverse_);
    fftw_free(buffer_);
  }

  std::size_t width() const { return width_; }
  std::size_t height() const { return height_; }

  void forward(std::span<Complex> data) { run(forward_, data, 1.0); }

  void inverse(std::span<Complex> data) {
    run(inverse_, data, 1.0 / static_cast<double>(width_ * height_));
  }

 private:
  void run(fftw_plan plan, std::span<Complex> data, double scale) {
    require(data.size() == width_ * height_, "fft: buffer size mismatch");
    auto* raw = reinterpret_cast<Complex*>(buffer_);
    std::copy(data.begin(), data.end(), raw);
    fftw_execute(plan);
    for (std::size_t i = 0; i < data.size(); ++i) data[i] = raw[i] * scale;
  }

  std::size_t width_;
  std::size_t height_;
  fftw_complex* buffer_ = nullptr;
  fftw_plan forward_ = nullptr;
  fftw_plan inverse_ = nullptr;
};

/// Signed DFT frequency index for bin k of an n-point transform: 0..n/2-1, then -n/2..-1.
inline long signed_frequency_index(std::size_t k, std::size_t n) {
  const auto sk = static_cast<long>(k);
  const auto sn = static_cast<long>(n);
  return sk < (sn + 1) / 2 ? sk : sk - sn;
}

}  // namespace holoevs
