#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "holoevs/events.hpp"
#include "holoevs/field.hpp"
#include "holoevs/optics.hpp"
#include "holoevs/propagation.hpp"

namespace holoevs {

enum class OptimizerKind {
  proximal,  // per-pixel damped Gauss-Newton step with backtracking (default)
  gd,        // plain fixed-rate gradient descent
};

enum class TimeInit {
  scan,     // after the warm-up, re-seat t to the best of {t} and the N sample instants
  uniform,  // keep the U(0, t_sens) draw
};

struct ReconConfig {
  double threshold = 0.15;          // C
  std::size_t exposure_samples = 64;  // N
  double lambda_reg = 500.0;
  double alpha_h = 0.005;
  double alpha_t = 0.0005;
  std::size_t max_iters = 2500;
  std::uint64_t seed = 0;
  double t_pi2_anal = 7e-3 * std::log(2.0);
  double z = 0.12;
  double t_sens = 1.0 / 25.0;
  double grad_check_tol = 1e-4;

  OptimizerKind optimizer = OptimizerKind::proximal;
  TimeInit t_init = TimeInit::scan;
  std::size_t warmup_iters = 100;
  std::size_t backtracking_steps = 8;
  bool nonnegative = false;   // project h0_opt onto h >= 0 after each update
  bool band_limited = true;
  std::size_t padding = 1;

  void validate() const {
    require(threshold > 0.0, "recon: threshold must be positive");
    require(exposure_samples >= 1, "recon: N must be >= 1");
    require(std::isfinite(lambda_reg) && lambda_reg >= 0.0, "recon: lambda must be >= 0");
    require(alpha_h > 0.0 && alpha_t > 0.0, "recon: learning rates must be positive");
    require(max_iters >= 1, "recon: max_iters must be >= 1");
    require(t_sens > 0.0, "recon: t_sens must be positive");
    require(t_pi2_anal >= 0.0 && t_pi2_anal <= t_sens, "recon: t_pi2_anal outside [0, t_sens]");
    require(std::isfinite(z) && z > 0.0, "recon: z must be positive");
    require(padding >= 1, "recon: padding must be >= 1");
  }

  PropagationSpec backward() const { return {-z, band_limited, padding}; }
};

struct OptState {
  RealGrid h0_opt;
  double t_pi2_opt = 0.0;
  std::size_t iter = 0;
  std::vector<double> loss_history;
  bool diverged = false;
  std::string diagnostic;
};

inline void require_nonzero_reference(const ComplexField& r) {
  for (const auto& v : r) require(std::norm(v) > 0.0, "reference amplitude is zero at a pixel");
}

/// Three-step reconstruction g = (1-j)/(4 conj(r)) * (h0 - h_pi2 + j (h_pi2 - h_pi)).
inline ComplexField fpsdh(const IntensityFrame& h0, const IntensityFrame& h_pi2,
                          const IntensityFrame& h_pi, const ComplexField& r) {
  require_same_shape(h0, h_pi2, "fpsdh");
  require_same_shape(h0, h_pi, "fpsdh");
  require_same_shape(h0, r, "fpsdh");
  require_nonzero_reference(r);
  const Complex w(1.0, -1.0);
  ComplexField g(r.geometry());
  for (std::size_t i = 0; i < g.size(); ++i)
    g[i] = w / (4.0 * std::conj(r[i])) * Complex(h0[i] - h_pi2[i], h_pi2[i] - h_pi[i]);
  return g;
}

/// Multiplier K with g = K * h0, from a = exp(C E_half) and b = exp(C E_full).
inline Complex event_multiplier(double a, double b, const Complex& r) {
  return Complex(1.0, -1.0) / (4.0 * std::conj(r)) * Complex(1.0 - a, a - b);
}

/// g = (1-j)/(4 conj(r)) * h0 * {1 - a + j (a - b)}.
template <typename T>
ComplexField wavefront_from_events(const IntensityFrame& h0, const Grid<T>& e_half,
                                   const Grid<T>& e_full, double c, const ComplexField& r) {
  require_same_shape(h0, e_half, "wavefront_from_events");
  require_same_shape(h0, e_full, "wavefront_from_events");
  require_same_shape(h0, r, "wavefront_from_events");
  require_nonzero_reference(r);
  ComplexField g(r.geometry());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double a = std::exp(c * static_cast<double>(e_half[i]));
    const double b = std::exp(c * static_cast<double>(e_full[i]));
    g[i] = event_multiplier(a, b, r[i]) * h0[i];
  }
  return g;
}

/// Reverse propagation from the sensor plane to an object plane at distance z > 0.
inline ComplexField to_object_plane(const ComplexField& g, double z, bool band_limited = true,
                                    std::size_t padding = 1) {
  require(std::isfinite(z) && z > 0.0, "to_object_plane: z must be positive");
  return propagate(g, {-z, band_limited, padding});
}

struct AnalyticalResult {
  ComplexField f;
  ComplexField g;
  IntensityFrame h0;
};

/// Closed-form reconstruction from one blurred frame and its event track.
inline AnalyticalResult reconstruct_analytical(const IntensityFrame& h_blur,
                                               const EventTrack& track, const ComplexField& r,
                                               const ReconConfig& config) {
  config.validate();
  require_same_shape(h_blur, r, "reconstruct_analytical");
  require(track.width() == r.width() && track.height() == r.height(),
          "reconstruct_analytical: event geometry differs");
  const RealGrid e_half = track.accumulate(config.t_pi2_anal);
  const RealGrid e_full = track.accumulate(track.t_sens());
  const RealGrid factor = track.exposure_factor(config.threshold, config.exposure_samples);
  AnalyticalResult out;
  out.h0 = deblur(h_blur, factor);
  out.g = wavefront_from_events(out.h0, e_half, e_full, config.threshold, r);
  out.f = to_object_plane(out.g, config.z, config.band_limited, config.padding);
  return out;
}

inline AnalyticalResult reconstruct_analytical(const IntensityFrame& h_blur,
                                               const EventStream& events, const ComplexField& r,
                                               const ReconConfig& config) {
  return reconstruct_analytical(h_blur, EventTrack::from_stream(events), r, config);
}

/// L = L1 + lambda * L2 for the parameterised wavefront g~ = K(t) h.
///
/// With K = (1-j)/(4 conj r) {1 - a + j(a - b)}:
///   |g~ + r|^2 = |K|^2 h^2 + (1 - b)/2 h + |r|^2,  |K|^2 = ((1-a)^2 + (a-b)^2) / (8|r|^2),
/// so the L1 residual is rho = h - |K|^2 h^2 - (1-b)/2 h - |r|^2.
class LossModel {
 public:
  LossModel(const IntensityFrame& h_blur, const EventTrack& track, const ComplexField& r,
            double threshold, std::size_t exposure_samples, double lambda_reg)
      : h_blur_(h_blur), track_(&track), r_(r), c_(threshold), lambda_(lambda_reg) {
    require_same_shape(h_blur, r, "loss");
    require(track.width() == r.width() && track.height() == r.height(),
            "loss: event geometry differs");
    require_nonzero_reference(r);
    factor_ = track.exposure_factor(threshold, exposure_samples);
    knots_ = track.distinct_times();
    r2_.resize(r.size());
    b_.resize(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) {
      r2_[i] = std::norm(r[i]);
      b_[i] = std::exp(c_ * track.value(i, track.t_sens()));
    }
  }

  std::size_t size() const { return r2_.size(); }
  double t_sens() const { return track_->t_sens(); }
  double lambda() const { return lambda_; }
  const RealGrid& exposure_factor() const { return factor_; }

  using Column = std::shared_ptr<const std::vector<double>>;

  /// a(t) = exp(C E(t)) per pixel.
  Column a_column(double t) const {
    return cached(a_cache_, t, [&](std::size_t i) { return std::exp(c_ * track_->value(i, t)); });
  }

  /// dE/dt of the piecewise-linear relaxation per pixel.
  Column slope_column(double t) const {
    return cached(slope_cache_, t, [&](std::size_t i) { return track_->slope(i, t); });
  }

  std::vector<double> a_at(double t) const { return *a_column(t); }

  double k2(std::size_t i, double a) const {
    const double u = 1.0 - a;
    const double v = a - b_[i];
    return (u * u + v * v) / (8.0 * r2_[i]);
  }

  double residual1(std::size_t i, double h, double a) const {
    return h - k2(i, a) * h * h - 0.5 * (1.0 - b_[i]) * h - r2_[i];
  }

  double residual2(std::size_t i, double h) const { return factor_[i] * h - h_blur_[i]; }

  double pixel_loss(std::size_t i, double h, double a) const {
    const double p = residual1(i, h, a);
    const double q = residual2(i, h);
    return p * p + lambda_ * q * q;
  }

  double loss_L1(const RealGrid& h, double t) const {
    const auto a = a_at(t);
    double s = 0.0;
    for (std::size_t i = 0; i < size(); ++i) {
      const double p = residual1(i, h[i], a[i]);
      s += p * p;
    }
    return s;
  }

  double loss_L2(const RealGrid& h) const {
    double s = 0.0;
    for (std::size_t i = 0; i < size(); ++i) {
      const double q = residual2(i, h[i]);
      s += q * q;
    }
    return s;
  }

  double total(const RealGrid& h, double t) const { return total(h.storage(), a_at(t)); }

  double total(const std::vector<double>& h, const std::vector<double>& a) const {
    double s = 0.0;
    for (std::size_t i = 0; i < size(); ++i) s += pixel_loss(i, h[i], a[i]);
    return s;
  }

  /// Exact gradient in h with a, b and the exposure factor held fixed.
  RealGrid gradient_h(const RealGrid& h, double t) const {
    const auto a = a_at(t);
    RealGrid out(h.geometry());
    for (std::size_t i = 0; i < size(); ++i) out[i] = grad_h_pixel(i, h[i], a[i]);
    return out;
  }

  double jacobian1(std::size_t i, double h, double a) const {
    return 1.0 - 2.0 * k2(i, a) * h - 0.5 * (1.0 - b_[i]);
  }

  double grad_h_pixel(std::size_t i, double h, double a) const {
    return 2.0 * residual1(i, h, a) * jacobian1(i, h, a) +
           2.0 * lambda_ * factor_[i] * residual2(i, h);
  }

  /// Gauss-Newton curvature 2 (J1^2 + lambda factor^2) used to damp the h step.
  double curvature_h(std::size_t i, double h, double a) const {
    const double j = jacobian1(i, h, a);
    return 2.0 * (j * j + lambda_ * factor_[i] * factor_[i]);
  }

  /// d rho_i / dt given a_i and the relaxed slope dE_i/dt.
  double drho_dt(std::size_t i, double h, double a, double slope) const {
    const double dk2_da = (4.0 * a - 2.0 - 2.0 * b_[i]) / (8.0 * r2_[i]);
    return -h * h * dk2_da * c_ * a * slope;
  }

  double gradient_t(const RealGrid& h, double t) const {
    const auto a = a_column(t);
    const auto slope = slope_column(t);
    double s = 0.0;
    for (std::size_t i = 0; i < size(); ++i)
      s += 2.0 * residual1(i, h[i], (*a)[i]) * drho_dt(i, h[i], (*a)[i], (*slope)[i]);
    return s;
  }

  /// g~ built directly from complex arithmetic.
  ComplexField wavefront(const RealGrid& h, double t) const {
    const auto a = a_at(t);
    ComplexField g(r_.geometry());
    for (std::size_t i = 0; i < size(); ++i) g[i] = event_multiplier(a[i], b_[i], r_[i]) * h[i];
    return g;
  }

 private:
  // E(t) is constant between consecutive knot times of the whole track, so per-pixel
  // columns are memoised by interval index. Not safe to share across threads.
  template <typename Fn>
  Column cached(std::map<std::size_t, Column>& cache, double t, Fn&& fn) const {
    const double limit = t + 1e-12 * track_->t_sens();
    const auto key = static_cast<std::size_t>(
        std::upper_bound(knots_.begin(), knots_.end(), limit) - knots_.begin());
    if (auto it = cache.find(key); it != cache.end()) return it->second;
    auto column = std::make_shared<std::vector<double>>(size());
    for (std::size_t i = 0; i < column->size(); ++i) (*column)[i] = fn(i);
    if (cache.size() >= kMaxCachedColumns) cache.clear();
    cache.emplace(key, column);
    return column;
  }

  static constexpr std::size_t kMaxCachedColumns = 64;

  IntensityFrame h_blur_;
  const EventTrack* track_;
  std::vector<double> knots_;
  mutable std::map<std::size_t, Column> a_cache_;
  mutable std::map<std::size_t, Column> slope_cache_;
  ComplexField r_;
  double c_;
  double lambda_;
  RealGrid factor_;
  std::vector<double> r2_;
  std::vector<double> b_;
};

/// ||h - |g~ + r|^2||^2 with g~ formed explicitly.
inline double loss_L1(const RealGrid& h0_opt, double t, const EventTrack& track, double c,
                      const ComplexField& r) {
  require_same_shape(h0_opt, r, "loss_L1");
  require_nonzero_reference(r);
  const double b_time = track.t_sens();
  double s = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    const double a = std::exp(c * track.value(i, t));
    const double b = std::exp(c * track.value(i, b_time));
    const double d = h0_opt[i] - std::norm(event_multiplier(a, b, r[i]) * h0_opt[i] + r[i]);
    s += d * d;
  }
  return s;
}

/// ||factor * h0_opt - h_blur||^2.
inline double loss_L2(const RealGrid& h0_opt, const RealGrid& factor, const IntensityFrame& h_blur) {
  require_same_shape(h0_opt, factor, "loss_L2");
  require_same_shape(h0_opt, h_blur, "loss_L2");
  double s = 0.0;
  for (std::size_t i = 0; i < h0_opt.size(); ++i) {
    const double d = factor[i] * h0_opt[i] - h_blur[i];
    s += d * d;
  }
  return s;
}

struct OptimizedResult {
  ComplexField f;
  ComplexField g;
  OptState state;
};

namespace detail {

inline void record_divergence(OptState& state, std::size_t iter, const char* what) {
  state.diverged = true;
  state.diagnostic = std::string("non-finite ") + what + " at iteration " + std::to_string(iter);
}

}  // namespace detail

/// Joint minimisation of L1 + lambda L2 over h0_opt and t_pi2_opt.
inline OptimizedResult reconstruct_optimized(const IntensityFrame& h_blur, const EventTrack& track,
                                             const ComplexField& r, const ReconConfig& config) {
  config.validate();
  const LossModel model(h_blur, track, r, config.threshold, config.exposure_samples,
                        config.lambda_reg);
  const std::size_t n = model.size();
  const double t_sens = track.t_sens();

  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, t_sens);
  OptState state;
  state.h0_opt = RealGrid(h_blur.geometry());
  for (double& v : state.h0_opt) v = normal(rng);
  state.t_pi2_opt = uniform(rng);
  state.loss_history.reserve(config.max_iters);

  std::vector<double>& h = state.h0_opt.storage();
  double& t = state.t_pi2_opt;
  LossModel::Column a_col = model.a_column(t);
  const bool proximal = config.optimizer == OptimizerKind::proximal;
  const bool scan = config.t_init == TimeInit::scan;
  const std::size_t warmup = std::min(config.warmup_iters, config.max_iters - 1);
  auto project = [&](double v) { return config.nonnegative ? std::max(v, 0.0) : v; };

  for (std::size_t iter = 0; iter < config.max_iters; ++iter) {
    state.iter = iter + 1;

    if (scan && iter == warmup) {
      double best = model.total(h, *a_col);
      for (std::size_t k = 1; k <= config.exposure_samples; ++k) {
        const double cand = sample_time(t_sens, k, config.exposure_samples);
        auto col = model.a_column(cand);
        const double l = model.total(h, *col);
        if (l < best) {
          best = l;
          t = cand;
          a_col = std::move(col);
        }
      }
    }
    const std::vector<double>& a = *a_col;

    // h update, pixelwise independent for fixed t.
    for (std::size_t i = 0; i < n; ++i) {
      const double g = model.grad_h_pixel(i, h[i], a[i]);
      if (!proximal) {
        h[i] = project(h[i] - config.alpha_h * g);
        continue;
      }
      const double l0 = model.pixel_loss(i, h[i], a[i]);
      const double curv = model.curvature_h(i, h[i], a[i]);
      double step = config.alpha_h * g / (1.0 + config.alpha_h * curv);
      for (std::size_t k = 0; k <= config.backtracking_steps; ++k) {
        const double cand = project(h[i] - step);
        if (model.pixel_loss(i, cand, a[i]) <= l0) {
          h[i] = cand;
          break;
        }
        step *= 0.5;
      }
    }

    const bool update_t = !scan || iter >= warmup;
    if (update_t) {
      const auto slope = model.slope_column(t);
      double gt = 0.0;
      double dt_curv = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double d = model.drho_dt(i, h[i], a[i], (*slope)[i]);
        gt += 2.0 * model.residual1(i, h[i], a[i]) * d;
        dt_curv += 2.0 * d * d;
      }
      if (!proximal) {
        t = std::clamp(t - config.alpha_t * gt, 0.0, t_sens);
        a_col = model.a_column(t);
      } else if (gt != 0.0) {
        const double current = model.total(h, a);
        double dt = config.alpha_t * gt / (1.0 + config.alpha_t * dt_curv);
        for (std::size_t k = 0; k <= config.backtracking_steps; ++k) {
          const double cand = std::clamp(t - dt, 0.0, t_sens);
          auto col = model.a_column(cand);
          if (model.total(h, *col) <= current) {
            t = cand;
            a_col = std::move(col);
            break;
          }
          dt *= 0.5;
        }
      }
    }

    const double loss = model.total(h, *a_col);
    state.loss_history.push_back(loss);
    if (!std::isfinite(loss)) {
      detail::record_divergence(state, iter + 1, "loss");
      break;
    }
  }

  OptimizedResult out;
  out.g = model.wavefront(state.h0_opt, t);
  if (all_finite(out.g)) {
    out.f = to_object_plane(out.g, config.z, config.band_limited, config.padding);
  } else {
    if (!state.diverged) detail::record_divergence(state, state.iter, "wavefront");
    out.f = ComplexField(r.geometry(), Complex(std::numeric_limits<double>::quiet_NaN(), 0.0));
  }
  out.state = std::move(state);
  return out;
}

inline OptimizedResult reconstruct_optimized(const IntensityFrame& h_blur,
                                             const EventStream& events, const ComplexField& r,
                                             const ReconConfig& config) {
  return reconstruct_optimized(h_blur, EventTrack::from_stream(events), r, config);
}

}  // namespace holoevs
