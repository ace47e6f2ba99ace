#pragma once

#include <cmath>

#include "holoevs/dataset.hpp"
#include "holoevs/optics.hpp"
#include "holoevs/pipeline.hpp"

namespace scenes {

using namespace holoevs;

/// Profile with phi(t_sens) = pi and phi(t_sens / 4) = pi / 2, so both phase steps fall on
/// sample instants of any M divisible by 4.
///
/// With x = exp(-t_sens / (4 t_speed)) the two conditions reduce to (1 + x)(1 + x^2) = 2.
inline PhaseShifterProfile exact_profile() {
  double lo = 0.0, hi = 1.0;
  for (int k = 0; k < 200; ++k) {
    const double x = 0.5 * (lo + hi);
    ((1.0 + x) * (1.0 + x * x) < 2.0 ? lo : hi) = x;
  }
  const double x = 0.5 * (lo + hi);
  PhaseShifterProfile p;
  p.t_speed = -p.t_sens / (4.0 * std::log(x));
  p.target_phase = kPi / (1.0 - std::pow(x, 4));
  return p;
}

/// Desk-scale config with a synthetic object, no noise, uniform thresholds.
inline ExperimentConfig clean_desk(std::size_t width = 128, std::size_t height = 96) {
  ExperimentConfig c = ExperimentConfig::desk();
  c.geometry.width = width;
  c.geometry.height = height;
  c.noise.sigma_frame = 0.0;
  c.thresholds.sigma = 0.0;
  c.sync();
  return c;
}

}  // namespace scenes
