#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "holoevs/config.hpp"
#include "holoevs/dataset.hpp"
#include "holoevs/events.hpp"
#include "holoevs/metrics.hpp"
#include "holoevs/optics.hpp"
#include "holoevs/propagation.hpp"
#include "holoevs/recon.hpp"

namespace holoevs {

struct Scene {
  ComplexField f;   // object plane
  ComplexField g;   // sensor plane
  ComplexField r;   // reference
};

inline Scene make_scene(const ComplexField& f, const ExperimentConfig& config) {
  require(f.geometry() == config.geometry, "scene: wavefront geometry differs from config");
  return {f, propagate(f, {config.z, config.recon.band_limited, config.recon.padding}),
          make_reference(config.geometry, config.reference_amplitude)};
}

/// Synthetic item `index` or, when the config names images, the imported wavefront.
inline Scene load_scene(const ExperimentConfig& config, std::size_t index) {
  if (!config.dataset.intensity_image.empty())
    return make_scene(import_wavefront(config.geometry, config.dataset.intensity_image,
                                       config.dataset.phase_image, config.dataset.phase_scale),
                      config);
  const CorpusItem item = synthetic_item(config.geometry, index, derive_seed(config.seed, {0xC0}));
  return make_scene(object_wavefront(item.intensity, item.phase_map, config.dataset.phase_scale),
                    config);
}

struct Observables {
  // Noiseless
  IntensityFrame h0, h_pi2, h_pi, h_blur;
  // Frame noise and quantisation applied
  IntensityFrame h0_noisy, h_pi2_noisy, h_pi_noisy, h_blur_noisy;
  ThresholdMap thresholds;
  EventGeneration events;
  double full_scale = 1.0;
};

/// Largest instantaneous hologram value over the exposure and the three phase steps.
inline double noiseless_peak(const Scene& s, const ExperimentConfig& config) {
  double peak = 0.0;
  for (double phi : {0.0, kPi / 2.0, kPi})
    for (double v : hologram(s.g, s.r, phi)) peak = std::max(peak, v);
  for (std::size_t m = 1; m <= config.blur_samples; ++m) {
    const double phi = phase_at(config.profile, sample_time(config.profile.t_sens, m, config.blur_samples));
    for (double v : hologram(s.g, s.r, phi)) peak = std::max(peak, v);
  }
  return peak;
}

/// All observables of one capture; `seed` drives the frame noise and the threshold map.
inline Observables simulate(const Scene& s, const ExperimentConfig& config, std::uint64_t seed) {
  config.validate();
  Observables o;
  o.h0 = hologram(s.g, s.r, 0.0);
  o.h_pi2 = hologram(s.g, s.r, kPi / 2.0);
  o.h_pi = hologram(s.g, s.r, kPi);
  o.h_blur = blurred_hologram(s.g, s.r, config.profile, config.blur_samples);

  o.full_scale = config.noise.full_scale.value_or(noiseless_peak(s, config));
  if (o.full_scale <= 0.0) o.full_scale = 1.0;
  FrameNoiseModel noise = config.noise;
  noise.full_scale = o.full_scale;
  auto noisy = [&](const IntensityFrame& h, std::uint64_t key) {
    noise.seed = derive_seed(seed, {0xF0, key});
    return apply_frame_noise(h, noise);
  };
  o.h0_noisy = noisy(o.h0, 0);
  o.h_pi2_noisy = noisy(o.h_pi2, 1);
  o.h_pi_noisy = noisy(o.h_pi, 2);
  o.h_blur_noisy = noisy(o.h_blur, 3);

  o.thresholds = sample_thresholds(config.geometry, config.thresholds.mean,
                                   config.thresholds.sigma, derive_seed(seed, {0xE0}));
  o.events = generate_events(s.g, s.r, config.profile, o.thresholds, config.event_samples,
                             {config.intensity_floor});
  o.events.stream.threshold = config.recon.threshold;
  return o;
}

enum class SolverKind { fpsdh, analytical, optimized };

inline std::string to_string(SolverKind k) {
  switch (k) {
    case SolverKind::fpsdh: return "fpsdh";
    case SolverKind::analytical: return "analytical";
    case SolverKind::optimized: return "optimized";
  }
  return "?";
}

inline SolverKind parse_solver(const std::string& s) {
  if (s == "fpsdh") return SolverKind::fpsdh;
  if (s == "analytical") return SolverKind::analytical;
  if (s == "optimized") return SolverKind::optimized;
  throw Error("unknown solver '" + s + "' (expected fpsdh, analytical or optimized)");
}

struct SolverOutput {
  ComplexField f;
  std::optional<OptState> state;
};

/// Runs a solver on the noisy observables.
inline SolverOutput run_solver(SolverKind kind, const Observables& o, const ComplexField& r,
                               const ReconConfig& recon) {
  switch (kind) {
    case SolverKind::fpsdh: {
      recon.validate();
      const ComplexField g = fpsdh(o.h0_noisy, o.h_pi2_noisy, o.h_pi_noisy, r);
      return {to_object_plane(g, recon.z, recon.band_limited, recon.padding), std::nullopt};
    }
    case SolverKind::analytical:
      return {reconstruct_analytical(o.h_blur_noisy, o.events.stream, r, recon).f, std::nullopt};
    case SolverKind::optimized: {
      OptimizedResult res = reconstruct_optimized(o.h_blur_noisy, o.events.stream, r, recon);
      return {std::move(res.f), std::move(res.state)};
    }
  }
  throw Error("unreachable solver kind");
}

enum class SweepVariable { t_pi2_anal, lambda_reg, sigma_frame };

inline SweepVariable parse_sweep_variable(const std::string& s) {
  if (s == "t_pi2_anal") return SweepVariable::t_pi2_anal;
  if (s == "lambda_reg") return SweepVariable::lambda_reg;
  if (s == "sigma_frame") return SweepVariable::sigma_frame;
  throw Error("unknown sweep variable '" + s + "'");
}

inline std::string to_string(SweepVariable v) {
  switch (v) {
    case SweepVariable::t_pi2_anal: return "t_pi2_anal";
    case SweepVariable::lambda_reg: return "lambda_reg";
    case SweepVariable::sigma_frame: return "sigma_frame";
  }
  return "?";
}

struct SweepSpec {
  SweepVariable variable = SweepVariable::t_pi2_anal;
  std::vector<double> values;
  std::size_t repetitions = 1;
  std::size_t items = 1;
  SolverKind solver = SolverKind::analytical;
  std::string output_csv;

  void validate() const {
    require(!values.empty(), "sweep: values list is empty");
    require(repetitions >= 1, "sweep: repetitions must be >= 1");
    require(items >= 1, "sweep: items must be >= 1");
  }
};

struct SweepRow {
  std::string run_id;
  std::string solver;
  double sigma_frame = 0.0;
  double sigma_event = 0.0;
  double hyper = 0.0;
  double psnr_db = std::nan("");
  double rmse_rad = std::nan("");
  std::string status = "ok";
  std::size_t value_index = 0;
};

struct SweepSummaryRow {
  double hyper;
  double mean_psnr_db;
  double mean_rmse_rad;
  std::size_t ok_count;
  std::size_t total;
};

inline ExperimentConfig apply_sweep_value(ExperimentConfig c, SweepVariable v, double value) {
  switch (v) {
    case SweepVariable::t_pi2_anal: c.recon.t_pi2_anal = value; break;
    case SweepVariable::lambda_reg: c.recon.lambda_reg = value; break;
    case SweepVariable::sigma_frame: c.noise.sigma_frame = value; break;
  }
  return c;
}

/// Calls fn(i) for i in [0, count) on up to `threads` workers.
template <typename Fn>
void parallel_for(std::size_t count, std::size_t threads, Fn&& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, count));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (std::size_t w = 0; w < threads; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) fn(i);
    });
  for (auto& t : pool) t.join();
}

/// One row per (value, repetition, item); rows come back in that nested order whatever the
/// thread count. Failures are recorded in the status column.
inline std::vector<SweepRow> run_sweep(const SweepSpec& spec, const ExperimentConfig& base,
                                       std::size_t threads = 1) {
  spec.validate();
  base.validate();
  const std::size_t per_value = spec.repetitions * spec.items;
  std::vector<SweepRow> rows(spec.values.size() * per_value);

  parallel_for(rows.size(), threads, [&](std::size_t k) {
    const std::size_t vi = k / per_value;
    const std::size_t rep = (k % per_value) / spec.items;
    const std::size_t item = k % spec.items;
    const double value = spec.values[vi];
    SweepRow& row = rows[k];
    row.run_id = "v" + std::to_string(vi) + "_r" + std::to_string(rep) + "_i" + std::to_string(item);
    row.solver = to_string(spec.solver);
    row.hyper = value;
    row.value_index = vi;
    try {
      ExperimentConfig c = apply_sweep_value(base, spec.variable, value);
      c.recon.seed = derive_seed(base.seed, {0x5EED, item, rep});
      c.validate();
      row.sigma_frame = c.noise.sigma_frame;
      row.sigma_event = c.thresholds.sigma;
      const Scene scene = load_scene(c, item);
      const Observables obs = simulate(scene, c, derive_seed(base.seed, {0x0B5, item, rep}));
      const SolverOutput out = run_solver(spec.solver, obs, scene.r, c.recon);
      if (out.state && out.state->diverged) {
        row.status = "error:diverged";
        return;
      }
      const MetricReport m = evaluate(scene.f, out.f);
      row.psnr_db = m.psnr_db;
      row.rmse_rad = m.rmse_rad;
    } catch (const std::exception& e) {
      row.status = std::string("error:") + e.what();
    }
  });
  return rows;
}

inline std::vector<SweepSummaryRow> summarize(const SweepSpec& spec, const std::vector<SweepRow>& rows) {
  std::vector<SweepSummaryRow> out;
  for (std::size_t vi = 0; vi < spec.values.size(); ++vi) {
    SweepSummaryRow s{spec.values[vi], 0.0, 0.0, 0, 0};
    for (const auto& r : rows) {
      if (r.value_index != vi) continue;
      ++s.total;
      if (r.status != "ok") continue;
      ++s.ok_count;
      s.mean_psnr_db += r.psnr_db;
      s.mean_rmse_rad += r.rmse_rad;
    }
    if (s.ok_count > 0) {
      s.mean_psnr_db /= static_cast<double>(s.ok_count);
      s.mean_rmse_rad /= static_cast<double>(s.ok_count);
    } else {
      s.mean_psnr_db = s.mean_rmse_rad = std::nan("");
    }
    out.push_back(s);
  }
  return out;
}

inline constexpr const char* kSweepCsvHeader =
    "run_id,solver,sigma_frame,sigma_event,hyper,psnr_db,rmse_rad,status";

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c == '\n' ? ' ' : c;
  }
  return out + "\"";
}

inline void write_sweep_csv(const std::filesystem::path& path, const std::vector<SweepRow>& rows) {
  std::ofstream out(path, std::ios::trunc);
  require(static_cast<bool>(out), "cannot open for writing: " + path.string());
  out << kSweepCsvHeader << '\n';
  out.precision(10);
  for (const auto& r : rows)
    out << r.run_id << ',' << r.solver << ',' << r.sigma_frame << ',' << r.sigma_event << ','
        << r.hyper << ',' << r.psnr_db << ',' << r.rmse_rad << ',' << csv_escape(r.status) << '\n';
}

inline void write_summary_csv(const std::filesystem::path& path,
                              const std::vector<SweepSummaryRow>& rows) {
  std::ofstream out(path, std::ios::trunc);
  require(static_cast<bool>(out), "cannot open for writing: " + path.string());
  out << "hyper,mean_psnr_db,mean_rmse_rad,ok,total\n";
  out.precision(10);
  for (const auto& r : rows)
    out << r.hyper << ',' << r.mean_psnr_db << ',' << r.mean_rmse_rad << ',' << r.ok_count << ','
        << r.total << '\n';
}

}  // namespace holoevs
