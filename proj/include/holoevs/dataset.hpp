#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <string>

#include "holoevs/fft.hpp"
#include "holoevs/field.hpp"
#include "holoevs/io.hpp"

namespace holoevs {

/// SplitMix64 finaliser.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Independent stream seed for a (base, key...) tuple.
inline std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> keys) {
  std::uint64_t s = splitmix64(base);
  for (std::uint64_t k : keys) s = splitmix64(s ^ splitmix64(k + 0x632BE59BD9B4E019ULL));
  return s;
}

enum class PatternKind { checkerboard, gradient, blobs, texture };

inline std::string to_string(PatternKind k) {
  switch (k) {
    case PatternKind::checkerboard: return "checkerboard";
    case PatternKind::gradient: return "gradient";
    case PatternKind::blobs: return "blobs";
    case PatternKind::texture: return "texture";
  }
  return "?";
}

/// Luminance in [0, 1] quantised to 8 bits, like an imported grayscale image.
inline RealGrid synthetic_pattern(const Geometry& geometry, PatternKind kind, std::uint64_t seed) {
  geometry.validate();
  std::mt19937_64 rng(seed);
  const std::size_t w = geometry.width;
  const std::size_t h = geometry.height;
  const double scale = static_cast<double>(std::max(w, h));
  RealGrid v(geometry, 0.0);

  switch (kind) {
    case PatternKind::checkerboard: {
      const auto period = std::uniform_int_distribution<std::size_t>(8, 23)(rng);
      for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x)
          v.at(x, y) = ((x / period + y / period) % 2) ? 0.9 : 0.1;
      break;
    }
    case PatternKind::gradient: {
      const double angle = std::uniform_real_distribution<double>(0.0, 2.0 * kPi)(rng);
      const double c = std::cos(angle), s = std::sin(angle);
      for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) v.at(x, y) = (c * x + s * y) / scale;
      break;
    }
    case PatternKind::blobs: {
      std::uniform_real_distribution<double> u01(0.0, 1.0);
      for (int k = 0; k < 6; ++k) {
        const double cx = u01(rng) * w / scale;
        const double cy = u01(rng) * h / scale;
        const double sigma = 0.03 + 0.12 * u01(rng);
        const double amp = 0.3 + 0.7 * u01(rng);
        for (std::size_t y = 0; y < h; ++y)
          for (std::size_t x = 0; x < w; ++x) {
            const double dx = x / scale - cx, dy = y / scale - cy;
            v.at(x, y) += amp * std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
          }
      }
      for (double& p : v) p = std::min(p, 1.0);
      break;
    }
    case PatternKind::texture: {
      // Random-phase spectrum with 1/f amplitude.
      std::normal_distribution<double> n01(0.0, 1.0);
      std::vector<Complex> spec(w * h);
      for (std::size_t ky = 0; ky < h; ++ky) {
        const double fy = static_cast<double>(signed_frequency_index(ky, h)) / h;
        for (std::size_t kx = 0; kx < w; ++kx) {
          const double fx = static_cast<double>(signed_frequency_index(kx, w)) / w;
          const double k = std::sqrt(fx * fx + fy * fy);
          const double re = n01(rng), im = n01(rng);
          spec[ky * w + kx] = k > 0.0 ? Complex(re, im) / k : Complex{};
        }
      }
      Fft2d fft(w, h);
      fft.inverse(spec);
      for (std::size_t i = 0; i < v.size(); ++i) v[i] = spec[i].real();
      break;
    }
  }

  if (kind == PatternKind::gradient || kind == PatternKind::texture) {
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    const double l = *lo, span = *hi - *lo;
    for (double& p : v) p = span > 0.0 ? (p - l) / span : 0.0;
  }
  for (double& p : v) p = std::round(std::clamp(p, 0.0, 1.0) * 255.0) / 255.0;
  return v;
}

struct CorpusItem {
  PatternKind intensity_kind;
  PatternKind phase_kind;
  RealGrid intensity;   // [0, 1]
  RealGrid phase_map;   // [0, 1], scaled by phase_scale to radians
};

/// Item k of the built-in corpus. Intensity kinds cycle through all four patterns; phase
/// maps alternate between texture and checkerboard so that 8 consecutive items cover every pair.
inline CorpusItem synthetic_item(const Geometry& geometry, std::size_t index, std::uint64_t seed) {
  static constexpr PatternKind intensity_kinds[] = {PatternKind::checkerboard,
                                                    PatternKind::gradient, PatternKind::blobs,
                                                    PatternKind::texture};
  static constexpr PatternKind phase_kinds[] = {PatternKind::texture, PatternKind::checkerboard};
  CorpusItem item{intensity_kinds[index % 4], phase_kinds[(index + index / 4) % 2], {}, {}};
  item.intensity = synthetic_pattern(geometry, item.intensity_kind, derive_seed(seed, {index, 0}));
  item.phase_map = synthetic_pattern(geometry, item.phase_kind, derive_seed(seed, {index, 1}));
  return item;
}

/// f = sqrt(I) exp(j phase_scale P).
inline ComplexField object_wavefront(const RealGrid& intensity_map, const RealGrid& phase_map,
                                     double phase_scale) {
  require_same_shape(intensity_map, phase_map, "object_wavefront");
  ComplexField f(intensity_map.geometry());
  for (std::size_t i = 0; i < f.size(); ++i) {
    require(intensity_map[i] >= 0.0, "object_wavefront: negative intensity");
    f[i] = std::polar(std::sqrt(intensity_map[i]), phase_scale * phase_map[i]);
  }
  return f;
}

/// Object wavefront from a pair of 8-bit grayscale images.
inline ComplexField import_wavefront(const Geometry& geometry, const std::filesystem::path& intensity_pgm,
                                     const std::filesystem::path& phase_pgm, double phase_scale) {
  const RealGrid i = io::read_pgm(intensity_pgm).luminance(geometry);
  const RealGrid p = io::read_pgm(phase_pgm).luminance(geometry);
  return object_wavefront(i, p, phase_scale);
}

}  // namespace holoevs
