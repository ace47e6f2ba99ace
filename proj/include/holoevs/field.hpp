#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace holoevs {

/// Raised on every violated precondition or malformed input.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw Error(message);
}

using Complex = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;

/// Sampling geometry shared by every grid on the sensor or object plane.
struct Geometry {
  std::size_t width = 0;
  std::size_t height = 0;
  double pitch = 18.5e-6;       // meters per pixel, square pixels
  double wavelength = 635e-9;   // meters

  std::size_t size() const { return width * height; }

  void validate() const {
    require(width >= 1 && height >= 1, "geometry: width and height must be >= 1");
    require(std::isfinite(pitch) && pitch > 0.0, "geometry: pitch must be positive");
    require(std::isfinite(wavelength) && wavelength > 0.0,
            "geometry: wavelength must be positive");
  }

  double wavenumber() const { return 2.0 * kPi / wavelength; }

  bool operator==(const Geometry&) const = default;
};

/// Row-major 2D grid tagged with its sampling geometry.
template <typename T>
class Grid {
 public:
  using value_type = T;

  Grid() = default;

  explicit Grid(const Geometry& geometry, T fill = T{})
      : geometry_(geometry), data_(geometry.size(), fill) {
    geometry_.validate();
  }

  Grid(const Geometry& geometry, std::vector<T> data)
      : geometry_(geometry), data_(std::move(data)) {
    geometry_.validate();
    require(data_.size() == geometry_.size(), "grid: data length does not match geometry");
  }

  const Geometry& geometry() const { return geometry_; }
  std::size_t width() const { return geometry_.width; }
  std::size_t height() const { return geometry_.height; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }
  T& at(std::size_t x, std::size_t y) { return data_[y * geometry_.width + x]; }
  const T& at(std::size_t x, std::size_t y) const { return data_[y * geometry_.width + x]; }

  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }
  std::vector<T>& storage() { return data_; }
  const std::vector<T>& storage() const { return data_; }

  auto begin() { return data_.begin(); }
  auto end() { return data_.end(); }
  auto begin() const { return data_.begin(); }
  auto end() const { return data_.end(); }

  template <typename U>
  bool same_shape(const Grid<U>& other) const {
    return geometry_.width == other.geometry().width &&
           geometry_.height == other.geometry().height;
  }

  bool operator==(const Grid&) const = default;

 private:
  Geometry geometry_{};
  std::vector<T> data_;
};

/// Complex amplitude on a plane (object wavefront f, sensor-plane object beam g, reference r).
using ComplexField = Grid<Complex>;
/// Non-negative intensity on the sensor plane (holograms, blurred frames).
using IntensityFrame = Grid<double>;
/// General real-valued per-pixel quantity (exposure factor, gradients, thresholds).
using RealGrid = Grid<double>;
/// Signed per-pixel event counts.
using CountGrid = Grid<std::int64_t>;

template <typename A, typename B>
void require_same_shape(const Grid<A>& a, const Grid<B>& b, const char* what) {
  require(a.width() == b.width() && a.height() == b.height(),
          std::string(what) + ": grid dimensions differ");
}

inline bool all_finite(const ComplexField& field) {
  return std::all_of(field.begin(), field.end(), [](const Complex& c) {
    return std::isfinite(c.real()) && std::isfinite(c.imag());
  });
}

inline bool all_finite(const RealGrid& grid) {
  return std::all_of(grid.begin(), grid.end(), [](double v) { return std::isfinite(v); });
}

/// Constant, zero-phase reference wave with |r|^2 = amplitude^2.
inline ComplexField make_reference(const Geometry& geometry, double amplitude) {
  require(std::isfinite(amplitude) && amplitude > 0.0,
          "make_reference: amplitude must be positive");
  return ComplexField(geometry, Complex(amplitude, 0.0));
}

inline RealGrid intensity(const ComplexField& field) {
  RealGrid out(field.geometry());
  for (std::size_t i = 0; i < field.size(); ++i) out[i] = std::norm(field[i]);
  return out;
}

inline RealGrid phase(const ComplexField& field) {
  RealGrid out(field.geometry());
  for (std::size_t i = 0; i < field.size(); ++i) out[i] = std::arg(field[i]);
  return out;
}

/// Euclidean norm over all pixels.
template <typename T>
double l2_norm(const Grid<T>& grid) {
  double sum = 0.0;
  for (const auto& v : grid) sum += std::norm(v);
  return std::sqrt(sum);
}

/// ||a - b|| / ||b||.
template <typename T>
double relative_l2(const Grid<T>& a, const Grid<T>& b) {
  require_same_shape(a, b, "relative_l2");
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += std::norm(a[i] - b[i]);
    den += std::norm(b[i]);
  }
  return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

template <typename T>
double max_abs_diff(const Grid<T>& a, const Grid<T>& b) {
  require_same_shape(a, b, "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace holoevs
