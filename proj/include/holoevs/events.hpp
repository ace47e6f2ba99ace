#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <tuple>
#include <vector>

#include "holoevs/field.hpp"
#include "holoevs/optics.hpp"

namespace holoevs {

struct EventRecord {
  double t = 0.0;            // seconds from the start of the exposure
  std::uint32_t x = 0;
  std::uint32_t y = 0;
  std::int8_t polarity = 1;  // +1 brighter, -1 darker

  bool operator==(const EventRecord&) const = default;
};

/// Strict ordering of the stream: time, then row, column, polarity.
inline bool event_order(const EventRecord& a, const EventRecord& b) {
  return std::tie(a.t, a.y, a.x, a.polarity) < std::tie(b.t, b.y, b.x, b.polarity);
}

/// Inclusive time comparison tau <= t, tolerant to round-off in the sample-time formula.
inline bool at_or_before(double tau, double t, double t_sens) {
  return tau <= t + 1e-12 * t_sens;
}

struct EventStream {
  std::size_t width = 0;
  std::size_t height = 0;
  double threshold = 0.15;   // nominal contrast threshold C
  double t_sens = 1.0 / 25.0;
  std::vector<EventRecord> records;

  void sort() { std::sort(records.begin(), records.end(), event_order); }

  void validate() const {
    require(width >= 1 && height >= 1, "events: empty sensor geometry");
    require(threshold > 0.0, "events: threshold must be positive");
    require(t_sens > 0.0, "events: t_sens must be positive");
    for (std::size_t i = 0; i < records.size(); ++i) {
      const auto& e = records[i];
      require(e.x < width && e.y < height, "events: record outside sensor");
      require(e.t >= 0.0 && at_or_before(e.t, t_sens, t_sens), "events: record outside exposure");
      require(e.polarity == 1 || e.polarity == -1, "events: polarity must be +1 or -1");
      if (i > 0) require(!event_order(e, records[i - 1]), "events: records not sorted");
    }
  }
};

struct ThresholdMap {
  RealGrid values;
  double mean = 0.15;
  double sigma = 0.015;
  std::uint64_t seed = 0;

  double min() const { return *std::min_element(values.begin(), values.end()); }
};

/// i.i.d. N(mean, sigma^2) per pixel; non-positive draws are redrawn.
inline ThresholdMap sample_thresholds(const Geometry& geometry, double mean, double sigma,
                                      std::uint64_t seed) {
  require(std::isfinite(mean) && mean > 0.0, "sample_thresholds: mean must be positive");
  require(std::isfinite(sigma) && sigma >= 0.0, "sample_thresholds: sigma must be >= 0");
  ThresholdMap map{RealGrid(geometry, mean), mean, sigma, seed};
  if (sigma == 0.0) return map;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(mean, sigma);
  for (double& v : map.values) {
    do {
      v = dist(rng);
    } while (v <= 0.0);
  }
  return map;
}

inline ThresholdMap uniform_thresholds(const Geometry& geometry, double c) {
  return sample_thresholds(geometry, c, 0.0, 0);
}

struct EventGeneration {
  EventStream stream;
  /// 1 where every sampled intensity exceeded the floor, 0 where the pixel was excluded.
  std::vector<std::uint8_t> valid;
};

struct EventSimOptions {
  double intensity_floor = 1e-12;
  /// Added before flooring so that log-ratios which are zero up to round-off stay at level 0.
  double floor_guard = 1e-9;
};

/// Floor-model event generation.
///
/// For each pixel u and t_m = t_sens m / M: n_m = floor((log h_{phi(t_m)} - log h_0) / C_u),
/// n_0 = 0, and |n_m - n_{m-1}| unit events with the sign of the difference are stamped at t_m.
inline EventGeneration generate_events(const ComplexField& g, const ComplexField& r,
                                       const PhaseShifterProfile& profile,
                                       const ThresholdMap& thresholds, std::size_t samples,
                                       const EventSimOptions& options = {}) {
  require(samples >= 2, "generate_events: need at least two samples");
  require(g.geometry() == r.geometry(), "generate_events: geometry differs");
  require_same_shape(g, thresholds.values, "generate_events");
  profile.validate();

  const std::size_t n = g.size();
  const std::size_t w = g.width();
  EventGeneration out;
  out.stream.width = w;
  out.stream.height = g.height();
  out.stream.threshold = thresholds.mean;
  out.stream.t_sens = profile.t_sens;
  out.valid.assign(n, 1);

  std::vector<double> log_h0(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double h0 = std::norm(g[i] + r[i]);
    if (h0 <= options.intensity_floor) out.valid[i] = 0;
    log_h0[i] = std::log(std::max(h0, options.intensity_floor));
  }

  // Log-intensity traces are held per sample so invalid pixels can be dropped before emission.
  std::vector<double> times(samples);
  std::vector<Complex> shifts(samples);
  for (std::size_t m = 1; m <= samples; ++m) {
    times[m - 1] = sample_time(profile.t_sens, m, samples);
    const double phi = phase_at(profile, times[m - 1]);
    shifts[m - 1] = Complex(std::cos(phi), std::sin(phi));
  }

  std::vector<std::int64_t> levels(samples);
  for (std::size_t i = 0; i < n; ++i) {
    if (!out.valid[i]) continue;
    const double c = thresholds.values[i];
    bool ok = true;
    for (std::size_t m = 0; m < samples; ++m) {
      const double h = std::norm(g[i] + r[i] * shifts[m]);
      if (h <= options.intensity_floor) {
        ok = false;
        break;
      }
      levels[m] = static_cast<std::int64_t>(
          std::floor((std::log(h) - log_h0[i]) / c + options.floor_guard));
    }
    if (!ok) {
      out.valid[i] = 0;
      continue;
    }
    std::int64_t prev = 0;
    const auto x = static_cast<std::uint32_t>(i % w);
    const auto y = static_cast<std::uint32_t>(i / w);
    for (std::size_t m = 0; m < samples; ++m) {
      const std::int64_t d = levels[m] - prev;
      const std::int8_t pol = d > 0 ? 1 : -1;
      for (std::int64_t k = 0; k < std::abs(d); ++k)
        out.stream.records.push_back({times[m], x, y, pol});
      prev = levels[m];
    }
  }
  out.stream.sort();
  return out;
}

/// E_{0->phi(t)}: per-pixel sum of polarities with timestamp <= t.
inline CountGrid accumulate(const EventStream& stream, double t) {
  require(t >= 0.0 && at_or_before(t, stream.t_sens, stream.t_sens),
          "accumulate: time outside [0, t_sens]");
  Geometry geo{stream.width, stream.height};
  CountGrid out(geo, 0);
  for (const auto& e : stream.records) {
    if (!at_or_before(e.t, t, stream.t_sens)) break;
    out.at(e.x, e.y) += e.polarity;
  }
  return out;
}

/// Exposure factor: mean over n = 1..N of exp(C * E_{0->phi(t_sens n / N)}).
inline RealGrid exposure_factor(const EventStream& stream, double c, std::size_t n_samples) {
  require(n_samples >= 1, "exposure_factor: need at least one sample");
  require(c > 0.0, "exposure_factor: threshold must be positive");
  Geometry geo{stream.width, stream.height};
  RealGrid sum(geo, 0.0);
  for (std::size_t n = 1; n <= n_samples; ++n) {
    const CountGrid e = accumulate(stream, sample_time(stream.t_sens, n, n_samples));
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += std::exp(c * static_cast<double>(e[i]));
  }
  for (double& v : sum) v /= static_cast<double>(n_samples);
  return sum;
}

/// h_0 estimate h_blur / exposure factor.
inline IntensityFrame deblur(const IntensityFrame& h_blur, const RealGrid& factor) {
  require_same_shape(h_blur, factor, "deblur");
  IntensityFrame out(h_blur.geometry());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = h_blur[i] / factor[i];
  return out;
}

/// Per-pixel piecewise-constant accumulation E(t), stored as knots (time, value after time).
///
/// Built either from a discrete event stream (integer values) or from the noiseless
/// log-intensity ratio without flooring (the continuous variant). Also provides the
/// piecewise-linear relaxation used for time derivatives.
class EventTrack {
 public:
  EventTrack() = default;

  static EventTrack from_stream(const EventStream& stream) {
    EventTrack track;
    track.width_ = stream.width;
    track.height_ = stream.height;
    track.t_sens_ = stream.t_sens;
    const std::size_t n = stream.width * stream.height;
    std::vector<std::vector<std::pair<double, double>>> per_pixel(n);
    for (const auto& e : stream.records) {
      auto& knots = per_pixel[e.y * stream.width + e.x];
      const double prev = knots.empty() ? 0.0 : knots.back().second;
      if (!knots.empty() && knots.back().first == e.t)
        knots.back().second += e.polarity;
      else
        knots.emplace_back(e.t, prev + e.polarity);
    }
    track.pack(per_pixel);
    return track;
  }

  /// Unfloored E(t_m) = (log h_{phi(t_m)} - log h_0) / c at every sample time.
  static EventTrack continuous(const ComplexField& g, const ComplexField& r,
                               const PhaseShifterProfile& profile, double c, std::size_t samples,
                               double intensity_floor = 1e-12) {
    require(samples >= 1, "continuous track: need at least one sample");
    require(c > 0.0, "continuous track: threshold must be positive");
    require(g.geometry() == r.geometry(), "continuous track: geometry differs");
    profile.validate();
    EventTrack track;
    track.width_ = g.width();
    track.height_ = g.height();
    track.t_sens_ = profile.t_sens;
    const std::size_t n = g.size();
    std::vector<std::vector<std::pair<double, double>>> per_pixel(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double h0 = std::norm(g[i] + r[i]);
      if (h0 <= intensity_floor) continue;
      auto& knots = per_pixel[i];
      bool ok = true;
      for (std::size_t m = 1; m <= samples; ++m) {
        const double t = sample_time(profile.t_sens, m, samples);
        const double phi = phase_at(profile, t);
        const double h = std::norm(g[i] + r[i] * Complex(std::cos(phi), std::sin(phi)));
        if (h <= intensity_floor) {
          ok = false;
          break;
        }
        knots.emplace_back(t, (std::log(h) - std::log(h0)) / c);
      }
      if (!ok) knots.clear();
    }
    track.pack(per_pixel);
    return track;
  }

  std::size_t width() const { return width_; }
  std::size_t height() const { return height_; }
  std::size_t size() const { return width_ * height_; }
  double t_sens() const { return t_sens_; }
  std::size_t knot_count(std::size_t pixel) const { return offsets_[pixel + 1] - offsets_[pixel]; }

  /// Index one past the last knot of `pixel` with time <= t.
  std::size_t locate(std::size_t pixel, double t) const {
    const auto first = times_.begin() + static_cast<std::ptrdiff_t>(offsets_[pixel]);
    const auto last = times_.begin() + static_cast<std::ptrdiff_t>(offsets_[pixel + 1]);
    const double limit = t + 1e-12 * t_sens_;
    return static_cast<std::size_t>(std::upper_bound(first, last, limit) - times_.begin());
  }

  double value(std::size_t pixel, double t) const {
    const std::size_t k = locate(pixel, t);
    return k == offsets_[pixel] ? 0.0 : values_[k - 1];
  }

  /// dE/dt of the linear interpolation through (0, 0) and every knot; right derivative at
  /// knots, zero after the last knot.
  double slope(std::size_t pixel, double t) const {
    const std::size_t begin = offsets_[pixel];
    const std::size_t end = offsets_[pixel + 1];
    const std::size_t k = locate(pixel, t);
    if (k == end) return 0.0;
    const double t0 = k == begin ? 0.0 : times_[k - 1];
    const double v0 = k == begin ? 0.0 : values_[k - 1];
    const double dt = times_[k] - t0;
    return dt > 0.0 ? (values_[k] - v0) / dt : 0.0;
  }

  RealGrid accumulate(double t) const {
    check_time(t);
    RealGrid out(geometry(), 0.0);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = value(i, t);
    return out;
  }

  RealGrid slopes(double t) const {
    check_time(t);
    RealGrid out(geometry(), 0.0);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = slope(i, t);
    return out;
  }

  RealGrid exposure_factor(double c, std::size_t n_samples) const {
    require(n_samples >= 1, "exposure_factor: need at least one sample");
    RealGrid sum(geometry(), 0.0);
    for (std::size_t n = 1; n <= n_samples; ++n) {
      const double t = sample_time(t_sens_, n, n_samples);
      for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += std::exp(c * value(i, t));
    }
    for (double& v : sum) v /= static_cast<double>(n_samples);
    return sum;
  }

  Geometry geometry() const { return Geometry{width_, height_}; }

  /// Sorted distinct knot times over all pixels; E(t) and its slope are constant between them.
  std::vector<double> distinct_times() const {
    std::vector<double> t = times_;
    std::sort(t.begin(), t.end());
    t.erase(std::unique(t.begin(), t.end()), t.end());
    return t;
  }

 private:
  void check_time(double t) const {
    require(t >= 0.0 && at_or_before(t, t_sens_, t_sens_), "event track: time outside exposure");
  }

  void pack(const std::vector<std::vector<std::pair<double, double>>>& per_pixel) {
    offsets_.assign(per_pixel.size() + 1, 0);
    for (std::size_t i = 0; i < per_pixel.size(); ++i)
      offsets_[i + 1] = offsets_[i] + per_pixel[i].size();
    times_.resize(offsets_.back());
    values_.resize(offsets_.back());
    for (std::size_t i = 0; i < per_pixel.size(); ++i) {
      std::size_t k = offsets_[i];
      for (const auto& [t, v] : per_pixel[i]) {
        times_[k] = t;
        values_[k] = v;
        ++k;
      }
    }
  }

  std::size_t width_ = 0;
  std::size_t height_ = 0;
  double t_sens_ = 1.0 / 25.0;
  std::vector<std::size_t> offsets_{0};
  std::vector<double> times_;
  std::vector<double> values_;
};

}  // namespace holoevs
