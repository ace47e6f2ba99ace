#pragma once

#include <cmath>
#include <cstddef>
#include <limits>

#include "holoevs/field.hpp"

namespace holoevs {

/// 10 log10(peak^2 / MSE); +inf when the grids are identical.
inline double psnr(const RealGrid& reference, const RealGrid& test, double peak = 1.0) {
  require_same_shape(reference, test, "psnr");
  require(peak > 0.0, "psnr: peak must be positive");
  double sum = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    const double d = test[i] - reference[i];
    sum += d * d;
  }
  const double mse = sum / static_cast<double>(reference.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / mse);
}

/// Residual arg(test * conj(reference)), wrapped to (-pi, pi].
inline double wrapped_phase_residual(const Complex& reference, const Complex& test) {
  double d = std::arg(test * std::conj(reference));
  if (d <= -kPi) d += 2.0 * kPi;
  return d;
}

struct PhaseRmseOptions {
  double intensity_floor = 0.0;
  /// Remove the global piston (circular mean of the residuals) before the RMSE.
  bool align_piston = false;
};

struct PhaseRmse {
  double rmse_rad;
  std::size_t valid_pixel_count;
};

inline PhaseRmse rmse_phase_detail(const ComplexField& reference, const ComplexField& test,
                                   const PhaseRmseOptions& options = {}) {
  require_same_shape(reference, test, "rmse_phase");
  Complex piston(1.0, 0.0);
  if (options.align_piston) {
    Complex acc(0.0, 0.0);
    for (std::size_t i = 0; i < reference.size(); ++i) {
      if (std::norm(reference[i]) <= options.intensity_floor) continue;
      const Complex z = test[i] * std::conj(reference[i]);
      if (std::abs(z) > 0.0) acc += z / std::abs(z);
    }
    if (std::abs(acc) > 0.0) piston = std::conj(acc / std::abs(acc));
  }
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    if (std::norm(reference[i]) <= options.intensity_floor) continue;
    const double d = wrapped_phase_residual(reference[i], test[i] * piston);
    sum += d * d;
    ++count;
  }
  require(count > 0, "rmse_phase: no pixel passes the intensity mask");
  return {std::sqrt(sum / static_cast<double>(count)), count};
}

inline double rmse_phase(const ComplexField& reference, const ComplexField& test,
                         double intensity_floor = 0.0) {
  return rmse_phase_detail(reference, test, {intensity_floor, false}).rmse_rad;
}

struct MetricReport {
  double psnr_db = 0.0;
  double rmse_rad = 0.0;
  std::size_t valid_pixel_count = 0;
};

/// Intensity PSNR and phase RMSE of a reconstructed object wavefront against the truth.
inline MetricReport evaluate(const ComplexField& truth, const ComplexField& estimate,
                             double peak = 1.0, const PhaseRmseOptions& options = {}) {
  const PhaseRmse ph = rmse_phase_detail(truth, estimate, options);
  return {psnr(intensity(truth), intensity(estimate), peak), ph.rmse_rad, ph.valid_pixel_count};
}

}  // namespace holoevs
