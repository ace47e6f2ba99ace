#pragma once

#include <cmath>
#include <cstddef>
#include <utility>

#include "holoevs/fft.hpp"
#include "holoevs/field.hpp"

namespace holoevs {

struct PropagationSpec {
  double distance_z = 0.0;   // meters; negative propagates backwards
  bool band_limited = true;
  /// Zero-padding factor applied on each axis before the transform (1 = none).
  std::size_t padding = 1;
};

/// Frequency cut-offs (cycles/m) of the band-limited angular spectrum method.
///
/// The transfer function's local frequency in x is z*fx / (lambda * sqrt(1/lambda^2 - fx^2));
/// sampling it on a grid of spacing du = 1/(W*pitch) without aliasing requires its
/// derivative to stay below 1/(2 du), which for |fy| << 1/lambda rearranges to
///   |fx| < 1 / (lambda * sqrt((2 du z)^2 + 1)).
/// W is the transformed (padded) grid width; y is handled the same way.
struct BandLimit {
  double fx_max;
  double fy_max;
};

inline BandLimit band_limit(std::size_t grid_width, std::size_t grid_height, double pitch,
                            double wavelength, double z) {
  const double du = 1.0 / (static_cast<double>(grid_width) * pitch);
  const double dv = 1.0 / (static_cast<double>(grid_height) * pitch);
  const double zz = std::abs(z);
  return {1.0 / (wavelength * std::sqrt((2.0 * du * zz) * (2.0 * du * zz) + 1.0)),
          1.0 / (wavelength * std::sqrt((2.0 * dv * zz) * (2.0 * dv * zz) + 1.0))};
}

namespace detail {

inline void apply_transfer_function(std::span<Complex> spectrum, std::size_t w, std::size_t h,
                                    double pitch, double wavelength, const PropagationSpec& spec) {
  const double inv_lambda_sq = 1.0 / (wavelength * wavelength);
  const double dfx = 1.0 / (static_cast<double>(w) * pitch);
  const double dfy = 1.0 / (static_cast<double>(h) * pitch);
  const BandLimit limit = band_limit(w, h, pitch, wavelength, spec.distance_z);
  const double z = spec.distance_z;

  for (std::size_t ky = 0; ky < h; ++ky) {
    const double fy = static_cast<double>(signed_frequency_index(ky, h)) * dfy;
    for (std::size_t kx = 0; kx < w; ++kx) {
      const double fx = static_cast<double>(signed_frequency_index(kx, w)) * dfx;
      Complex& bin = spectrum[ky * w + kx];
      const double arg = inv_lambda_sq - fx * fx - fy * fy;
      const bool in_band =
          !spec.band_limited || (std::abs(fx) < limit.fx_max && std::abs(fy) < limit.fy_max);
      if (arg <= 0.0 || !in_band) {
        bin = 0.0;
        continue;
      }
      const double ph = 2.0 * kPi * z * std::sqrt(arg);
      bin *= Complex(std::cos(ph), std::sin(ph));
    }
  }
}

}  // namespace detail

/// Angular-spectrum propagation over distance spec.distance_z.
///
/// Evanescent components are dropped; with band_limited the band-limit mask above is
/// applied too. With padding p > 1 the field is centred in a p-times larger zero grid and
/// the central window is returned.
inline ComplexField propagate(const ComplexField& field, const PropagationSpec& spec) {
  const Geometry& geo = field.geometry();
  geo.validate();
  require(std::isfinite(spec.distance_z) && spec.distance_z != 0.0,
          "propagate: distance must be finite and nonzero");
  require(spec.padding >= 1, "propagate: padding factor must be >= 1");
  require(all_finite(field), "propagate: field contains non-finite values");

  const std::size_t w = geo.width * spec.padding;
  const std::size_t h = geo.height * spec.padding;
  const std::size_t ox = (w - geo.width) / 2;
  const std::size_t oy = (h - geo.height) / 2;

  std::vector<Complex> work(w * h, Complex{});
  for (std::size_t y = 0; y < geo.height; ++y)
    for (std::size_t x = 0; x < geo.width; ++x) work[(y + oy) * w + (x + ox)] = field.at(x, y);

  Fft2d fft(w, h);
  fft.forward(work);
  detail::apply_transfer_function(work, w, h, geo.pitch, geo.wavelength, spec);
  fft.inverse(work);

  ComplexField out(geo);
  for (std::size_t y = 0; y < geo.height; ++y)
    for (std::size_t x = 0; x < geo.width; ++x) out.at(x, y) = work[(y + oy) * w + (x + ox)];
  return out;
}

}  // namespace holoevs
