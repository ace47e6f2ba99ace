#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>

#include <json.hpp>

#include "holoevs/field.hpp"
#include "holoevs/optics.hpp"
#include "holoevs/recon.hpp"

namespace holoevs {

struct ThresholdSettings {
  double mean = 0.15;
  double sigma = 0.015;
};

struct DatasetSettings {
  /// Empty paths select the built-in synthetic corpus.
  std::string intensity_image;
  std::string phase_image;
  double phase_scale = 2.0 * kPi;
  std::size_t item = 0;   // synthetic corpus index used by `simulate`
};

struct ExperimentConfig {
  Geometry geometry{346, 260};
  double z = 0.12;
  double reference_amplitude = std::sqrt(0.5);
  PhaseShifterProfile profile{};
  std::size_t blur_samples = 500;    // M for the blur integral
  std::size_t event_samples = 500;   // M for event generation
  double intensity_floor = 1e-12;
  FrameNoiseModel noise{};
  ThresholdSettings thresholds{};
  ReconConfig recon{};
  DatasetSettings dataset{};
  std::uint64_t seed = 0;

  /// 128 x 96 grid used by tests and quick runs.
  static ExperimentConfig desk() {
    ExperimentConfig c;
    c.geometry.width = 128;
    c.geometry.height = 96;
    return c;
  }

  /// Copies the shared physical values into the solver settings.
  void sync() {
    recon.z = z;
    recon.t_sens = profile.t_sens;
  }

  void validate() const {
    geometry.validate();
    profile.validate();
    noise.validate();
    require(std::isfinite(z) && z > 0.0, "config: z must be positive");
    require(reference_amplitude > 0.0, "config: reference_amplitude must be positive");
    require(blur_samples >= 1, "config: blur_samples must be >= 1");
    require(event_samples >= 2, "config: event_samples must be >= 2");
    require(thresholds.mean > 0.0 && thresholds.sigma >= 0.0, "config: invalid thresholds");
    require(intensity_floor >= 0.0, "config: intensity_floor must be >= 0");
    require(dataset.phase_scale >= 0.0, "config: phase_scale must be >= 0");
    require(dataset.intensity_image.empty() == dataset.phase_image.empty(),
            "config: intensity_image and phase_image must be given together");
    recon.validate();
    require(recon.t_sens == profile.t_sens && recon.z == z, "config: recon settings out of sync");
  }
};

inline std::string to_string(OptimizerKind k) { return k == OptimizerKind::gd ? "gd" : "proximal"; }
inline std::string to_string(TimeInit k) { return k == TimeInit::uniform ? "uniform" : "scan"; }

inline OptimizerKind parse_optimizer(const std::string& s) {
  if (s == "proximal") return OptimizerKind::proximal;
  if (s == "gd") return OptimizerKind::gd;
  throw Error("config: unknown optimizer '" + s + "'");
}

inline TimeInit parse_time_init(const std::string& s) {
  if (s == "scan") return TimeInit::scan;
  if (s == "uniform") return TimeInit::uniform;
  throw Error("config: unknown t_init '" + s + "'");
}

inline nlohmann::ordered_json to_json(const ExperimentConfig& c) {
  nlohmann::ordered_json j;
  j["width"] = c.geometry.width;
  j["height"] = c.geometry.height;
  j["pitch"] = c.geometry.pitch;
  j["wavelength"] = c.geometry.wavelength;
  j["z"] = c.z;
  j["reference_amplitude"] = c.reference_amplitude;
  j["t_speed"] = c.profile.t_speed;
  j["t_sens"] = c.profile.t_sens;
  j["t_shift"] = c.profile.t_shift;
  j["target_phase"] = c.profile.target_phase;
  j["blur_samples"] = c.blur_samples;
  j["event_samples"] = c.event_samples;
  j["intensity_floor"] = c.intensity_floor;
  j["sigma_frame"] = c.noise.sigma_frame;
  j["quantization_bits"] = c.noise.quantization_bits;
  j["full_scale"] = c.noise.full_scale ? nlohmann::ordered_json(*c.noise.full_scale) : nullptr;
  j["threshold_mean"] = c.thresholds.mean;
  j["sigma_event"] = c.thresholds.sigma;
  j["C"] = c.recon.threshold;
  j["N"] = c.recon.exposure_samples;
  j["lambda_reg"] = c.recon.lambda_reg;
  j["alpha_h"] = c.recon.alpha_h;
  j["alpha_t"] = c.recon.alpha_t;
  j["max_iters"] = c.recon.max_iters;
  j["t_pi2_anal"] = c.recon.t_pi2_anal;
  j["optimizer"] = to_string(c.recon.optimizer);
  j["t_init"] = to_string(c.recon.t_init);
  j["warmup_iters"] = c.recon.warmup_iters;
  j["backtracking_steps"] = c.recon.backtracking_steps;
  j["nonnegative"] = c.recon.nonnegative;
  j["band_limited"] = c.recon.band_limited;
  j["padding"] = c.recon.padding;
  j["grad_check_tol"] = c.recon.grad_check_tol;
  j["intensity_image"] = c.dataset.intensity_image;
  j["phase_image"] = c.dataset.phase_image;
  j["phase_scale"] = c.dataset.phase_scale;
  j["dataset_item"] = c.dataset.item;
  j["seed"] = c.seed;
  return j;
}

/// Keys absent from `j` keep the values already in `base`; unknown keys are rejected.
inline ExperimentConfig from_json(const nlohmann::json& j, ExperimentConfig base = {}) {
  require(j.is_object(), "config: top level must be a JSON object");
  const auto known = to_json(base);
  for (const auto& [key, value] : j.items())
    require(known.contains(key), "config: unknown key '" + key + "'");

  ExperimentConfig c = base;
  auto get = [&](const char* key, auto& field) {
    if (!j.contains(key)) return;
    try {
      j.at(key).get_to(field);
    } catch (const nlohmann::json::exception&) {
      throw Error(std::string("config: bad value for '") + key + "'");
    }
  };
  get("width", c.geometry.width);
  get("height", c.geometry.height);
  get("pitch", c.geometry.pitch);
  get("wavelength", c.geometry.wavelength);
  get("z", c.z);
  get("reference_amplitude", c.reference_amplitude);
  get("t_speed", c.profile.t_speed);
  get("t_sens", c.profile.t_sens);
  get("t_shift", c.profile.t_shift);
  get("target_phase", c.profile.target_phase);
  get("blur_samples", c.blur_samples);
  get("event_samples", c.event_samples);
  get("intensity_floor", c.intensity_floor);
  get("sigma_frame", c.noise.sigma_frame);
  get("quantization_bits", c.noise.quantization_bits);
  if (j.contains("full_scale")) {
    if (j.at("full_scale").is_null()) {
      c.noise.full_scale.reset();
    } else {
      double v = 0.0;
      get("full_scale", v);
      c.noise.full_scale = v;
    }
  }
  get("threshold_mean", c.thresholds.mean);
  get("sigma_event", c.thresholds.sigma);
  get("C", c.recon.threshold);
  get("N", c.recon.exposure_samples);
  get("lambda_reg", c.recon.lambda_reg);
  get("alpha_h", c.recon.alpha_h);
  get("alpha_t", c.recon.alpha_t);
  get("max_iters", c.recon.max_iters);
  get("t_pi2_anal", c.recon.t_pi2_anal);
  std::string s;
  if (j.contains("optimizer")) {
    get("optimizer", s);
    c.recon.optimizer = parse_optimizer(s);
  }
  if (j.contains("t_init")) {
    get("t_init", s);
    c.recon.t_init = parse_time_init(s);
  }
  get("warmup_iters", c.recon.warmup_iters);
  get("backtracking_steps", c.recon.backtracking_steps);
  get("nonnegative", c.recon.nonnegative);
  get("band_limited", c.recon.band_limited);
  get("padding", c.recon.padding);
  get("grad_check_tol", c.recon.grad_check_tol);
  get("intensity_image", c.dataset.intensity_image);
  get("phase_image", c.dataset.phase_image);
  get("phase_scale", c.dataset.phase_scale);
  get("dataset_item", c.dataset.item);
  get("seed", c.seed);
  c.sync();
  c.validate();
  return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), "cannot open config: " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error("config: " + path.string() + ": " + e.what());
  }
  ExperimentConfig c = from_json(j);
  // Relative image paths resolve against the config file's directory.
  auto resolve = [&](std::string& p) {
    if (!p.empty() && std::filesystem::path(p).is_relative())
      p = (path.parent_path() / p).string();
  };
  resolve(c.dataset.intensity_image);
  resolve(c.dataset.phase_image);
  return c;
}

}  // namespace holoevs
