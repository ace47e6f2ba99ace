#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>

#include "holoevs/field.hpp"

namespace holoevs {

/// Saturating phase-shifter response phi(t) = target * (1 - exp(-t / t_speed)).
struct PhaseShifterProfile {
  double t_speed = 7e-3;
  double t_sens = 1.0 / 25.0;
  double t_shift = 1.0 / 60.0;   // only used for acquisition-time accounting
  double target_phase = kPi;

  void validate() const {
    require(std::isfinite(t_speed) && t_speed > 0.0, "profile: t_speed must be positive");
    require(std::isfinite(t_sens) && t_sens > 0.0, "profile: t_sens must be positive");
    require(std::isfinite(t_shift) && t_shift > 0.0 && t_shift <= t_sens,
            "profile: requires 0 < t_shift <= t_sens");
    require(std::isfinite(target_phase) && target_phase >= 0.0,
            "profile: target_phase must be non-negative");
  }
};

inline double phase_at(const PhaseShifterProfile& profile, double t) {
  require(t >= 0.0, "phase_at: time must be non-negative");
  return profile.target_phase * (1.0 - std::exp(-t / profile.t_speed));
}

inline double time_of_phase(const PhaseShifterProfile& profile, double phi) {
  require(phi >= 0.0, "time_of_phase: phase must be non-negative");
  require(phi < profile.target_phase, "time_of_phase: phase is never reached in finite time");
  return -profile.t_speed * std::log1p(-phi / profile.target_phase);
}

/// Sample instant t_m = t_sens * m / count used by every time-discretised sum.
inline double sample_time(double t_sens, std::size_t m, std::size_t count) {
  return t_sens * static_cast<double>(m) / static_cast<double>(count);
}

/// h_phi = |g + r e^{j phi}|^2 per pixel.
inline IntensityFrame hologram(const ComplexField& g, const ComplexField& r, double phi) {
  require(g.geometry() == r.geometry(), "hologram: object and reference geometry differ");
  const Complex shift(std::cos(phi), std::sin(phi));
  IntensityFrame h(g.geometry());
  for (std::size_t i = 0; i < g.size(); ++i) h[i] = std::norm(g[i] + r[i] * shift);
  return h;
}

/// Exposure-averaged hologram: mean of h_{phi(t_m)} over t_m = t_sens m / M, m = 1..M.
///
/// Per-pixel Neumaier summation keeps the mean independent of summation order to ~1 ulp.
inline IntensityFrame blurred_hologram(const ComplexField& g, const ComplexField& r,
                                       const PhaseShifterProfile& profile, std::size_t samples) {
  require(samples >= 1, "blurred_hologram: need at least one sample");
  require(g.geometry() == r.geometry(), "blurred_hologram: geometry differs");
  profile.validate();

  const std::size_t n = g.size();
  std::vector<double> sum(n, 0.0);
  std::vector<double> comp(n, 0.0);
  for (std::size_t m = 1; m <= samples; ++m) {
    const double phi = phase_at(profile, sample_time(profile.t_sens, m, samples));
    const Complex shift(std::cos(phi), std::sin(phi));
    for (std::size_t i = 0; i < n; ++i) {
      const double v = std::norm(g[i] + r[i] * shift);
      const double t = sum[i] + v;
      comp[i] += std::abs(sum[i]) >= std::abs(v) ? (sum[i] - t) + v : (v - t) + sum[i];
      sum[i] = t;
    }
  }
  IntensityFrame out(g.geometry());
  const double inv = 1.0 / static_cast<double>(samples);
  for (std::size_t i = 0; i < n; ++i) out[i] = (sum[i] + comp[i]) * inv;
  return out;
}

struct FrameNoiseModel {
  double sigma_frame = 0.0;
  int quantization_bits = 8;
  std::uint64_t seed = 0;
  /// Sensor full-scale h_max. Unset means the maximum of the frame being degraded.
  std::optional<double> full_scale;

  void validate() const {
    require(std::isfinite(sigma_frame) && sigma_frame >= 0.0,
            "noise: sigma_frame must be non-negative");
    require(quantization_bits >= 1 && quantization_bits <= 16,
            "noise: quantization_bits must be in [1, 16]");
    if (full_scale) require(*full_scale > 0.0, "noise: full_scale must be positive");
  }
};

/// Additive Gaussian noise, clamp to [0, h_max], then uniform quantisation to 2^bits levels.
inline IntensityFrame apply_frame_noise(const IntensityFrame& h, const FrameNoiseModel& model) {
  model.validate();
  double h_max = model.full_scale.value_or(0.0);
  if (!model.full_scale) {
    for (double v : h) h_max = std::max(h_max, v);
    if (h_max <= 0.0) h_max = 1.0;
  }
  const double levels = std::ldexp(1.0, model.quantization_bits) - 1.0;

  std::mt19937_64 rng(model.seed);
  std::normal_distribution<double> noise(0.0, model.sigma_frame > 0.0 ? model.sigma_frame : 1.0);

  IntensityFrame out(h.geometry());
  for (std::size_t i = 0; i < h.size(); ++i) {
    double v = h[i];
    if (model.sigma_frame > 0.0) v += noise(rng);
    v = std::clamp(v, 0.0, h_max);
    out[i] = std::round(v / h_max * levels) / levels * h_max;
  }
  return out;
}

/// Total acquisition time of both capture schemes for one reconstruction.
struct AcquisitionTiming {
  double conventional;   // three exposures and two shifter transitions
  double proposed;       // a single exposure
  double speedup() const { return conventional / proposed; }
};

inline AcquisitionTiming acquisition_timing(const PhaseShifterProfile& profile) {
  profile.validate();
  return {3.0 * profile.t_sens + 2.0 * profile.t_shift, profile.t_sens};
}

}  // namespace holoevs
