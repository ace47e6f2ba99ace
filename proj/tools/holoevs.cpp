// holoevs command-line driver: simulate, reconstruct, sweep, timing, metrics.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "holoevs/config.hpp"
#include "holoevs/io.hpp"
#include "holoevs/metrics.hpp"
#include "holoevs/pipeline.hpp"

namespace fs = std::filesystem;
using namespace holoevs;
using nlohmann::ordered_json;

namespace {

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out = ".";
  std::optional<std::size_t> threads;
};

ExperimentConfig load(const Common& c) {
  ExperimentConfig cfg = c.config_path.empty() ? ExperimentConfig::desk() : load_config(c.config_path);
  if (c.seed) cfg.seed = *c.seed;
  cfg.recon.seed = cfg.seed;
  cfg.sync();
  cfg.validate();
  return cfg;
}

std::size_t thread_count(const Common& c) {
  if (c.threads) return std::max<std::size_t>(1, *c.threads);
  if (const char* env = std::getenv("HOLOEVS_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v >= 1) return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
    }
    std::cerr << "warning: ignoring invalid HOLOEVS_THREADS='" << env << "'\n";
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void write_json(const fs::path& path, const ordered_json& j) {
  std::ofstream out(path, std::ios::trunc);
  require(static_cast<bool>(out), "cannot open for writing: " + path.string());
  out << j.dump(2) << '\n';
}

int cmd_simulate(const Common& common) {
  const ExperimentConfig cfg = load(common);
  const fs::path out = common.out;
  fs::create_directories(out);

  const Scene scene = load_scene(cfg, cfg.dataset.item);
  const Observables o = simulate(scene, cfg, cfg.seed);

  io::write_cfield(out / "f.cfield", scene.f);
  io::write_cfield(out / "g.cfield", scene.g);
  io::write_cfield(out / "r.cfield", scene.r);
  io::write_frame(out / "h0.frame", o.h0_noisy);
  io::write_frame(out / "hpi2.frame", o.h_pi2_noisy);
  io::write_frame(out / "hpi.frame", o.h_pi_noisy);
  io::write_frame(out / "h_blur.frame", o.h_blur_noisy);
  io::write_frame(out / "h0_clean.frame", o.h0);
  io::write_frame(out / "hpi2_clean.frame", o.h_pi2);
  io::write_frame(out / "hpi_clean.frame", o.h_pi);
  io::write_frame(out / "h_blur_clean.frame", o.h_blur);
  io::write_events(out / "events.evt", o.events.stream);
  io::write_events_csv(out / "events.csv", o.events.stream);
  io::write_pgm(out / "h_blur.pgm", o.h_blur_noisy, 0.0, o.full_scale);
  io::write_intensity_preview(out / "f_intensity.pgm", scene.f);
  io::write_phase_preview(out / "f_phase.pgm", scene.f);

  std::size_t invalid = 0;
  for (auto v : o.events.valid) invalid += v == 0;
  ordered_json manifest;
  manifest["command"] = "simulate";
  manifest["seed"] = cfg.seed;
  manifest["config"] = to_json(cfg);
  manifest["full_scale"] = o.full_scale;
  manifest["event_count"] = o.events.stream.records.size();
  manifest["invalid_pixels"] = invalid;
  manifest["outputs"] = {"f.cfield", "g.cfield", "r.cfield", "h0.frame", "hpi2.frame", "hpi.frame",
                         "h_blur.frame", "h0_clean.frame", "hpi2_clean.frame", "hpi_clean.frame",
                         "h_blur_clean.frame", "events.evt", "events.csv", "h_blur.pgm",
                         "f_intensity.pgm", "f_phase.pgm"};
  write_json(out / "manifest.json", manifest);
  std::cout << "simulated " << cfg.geometry.width << "x" << cfg.geometry.height << ", "
            << o.events.stream.records.size() << " events -> " << out.string() << '\n';
  return 0;
}

int cmd_reconstruct(const Common& common, const std::string& solver_name, const std::string& input) {
  const ExperimentConfig cfg = load(common);
  const SolverKind solver = parse_solver(solver_name);
  const fs::path in = input;
  const fs::path out = common.out;
  fs::create_directories(out);

  auto need = [&](const char* name) {
    const fs::path p = in / name;
    require(fs::exists(p), "missing input " + p.string());
    return p;
  };

  const ComplexField r = fs::exists(in / "r.cfield")
                             ? io::read_cfield(in / "r.cfield")
                             : make_reference(cfg.geometry, cfg.reference_amplitude);
  Observables o;
  if (solver == SolverKind::fpsdh) {
    o.h0_noisy = io::read_frame(need("h0.frame"));
    o.h_pi2_noisy = io::read_frame(need("hpi2.frame"));
    o.h_pi_noisy = io::read_frame(need("hpi.frame"));
  } else {
    o.h_blur_noisy = io::read_frame(need("h_blur.frame"));
    o.events.stream = io::read_events(need("events.evt"));
  }

  ReconConfig recon = cfg.recon;
  const SolverOutput res = run_solver(solver, o, r, recon);

  ordered_json manifest;
  manifest["command"] = "reconstruct";
  manifest["solver"] = to_string(solver);
  manifest["input"] = fs::absolute(in).string();
  manifest["seed"] = cfg.seed;
  manifest["config"] = to_json(cfg);
  bool diverged = false;
  if (res.state) {
    manifest["t_pi2_opt"] = res.state->t_pi2_opt;
    manifest["iterations"] = res.state->iter;
    manifest["diverged"] = res.state->diverged;
    manifest["diagnostic"] = res.state->diagnostic;
    manifest["loss_history"] = res.state->loss_history;
    diverged = res.state->diverged;
  }
  if (!diverged) {
    io::write_cfield(out / "f_hat.cfield", res.f);
    io::write_intensity_preview(out / "f_hat_intensity.pgm", res.f);
    io::write_phase_preview(out / "f_hat_phase.pgm", res.f);
    manifest["outputs"] = {"f_hat.cfield", "f_hat_intensity.pgm", "f_hat_phase.pgm"};
    if (fs::exists(in / "f.cfield")) {
      const MetricReport m = evaluate(io::read_cfield(in / "f.cfield"), res.f);
      manifest["metrics"] = {{"psnr_db", m.psnr_db},
                             {"rmse_rad", m.rmse_rad},
                             {"valid_pixel_count", m.valid_pixel_count}};
      std::cout << std::fixed << std::setprecision(3) << to_string(solver) << ": PSNR "
                << m.psnr_db << " dB, phase RMSE " << m.rmse_rad << " rad\n";
    }
  }
  write_json(out / "manifest.json", manifest);
  if (diverged) {
    std::cerr << "error: optimizer diverged: " << res.state->diagnostic << '\n';
    return 3;
  }
  return 0;
}

int cmd_sweep(const Common& common, const std::string& variable, const std::vector<double>& values,
              std::size_t repetitions, std::size_t items, const std::string& solver_name) {
  const ExperimentConfig cfg = load(common);
  SweepSpec spec;
  spec.variable = parse_sweep_variable(variable);
  spec.values = values;
  spec.repetitions = repetitions;
  spec.items = items;
  spec.solver = parse_solver(solver_name);
  fs::path csv = common.out;
  if (csv.extension() != ".csv") {
    fs::create_directories(csv);
    csv /= "sweep.csv";
  } else if (csv.has_parent_path()) {
    fs::create_directories(csv.parent_path());
  }
  spec.output_csv = csv.string();

  const auto rows = run_sweep(spec, cfg, thread_count(common));
  write_sweep_csv(csv, rows);
  const auto summary = summarize(spec, rows);
  fs::path summary_path = csv;
  summary_path.replace_extension(".summary.csv");
  write_summary_csv(summary_path, summary);

  std::cout << to_string(spec.variable) << "  mean_psnr_db  mean_rmse_rad  ok/total\n";
  for (const auto& s : summary)
    std::cout << std::setw(12) << s.hyper << "  " << std::setw(12) << s.mean_psnr_db << "  "
              << std::setw(13) << s.mean_rmse_rad << "  " << s.ok_count << "/" << s.total << '\n';
  std::size_t failed = 0;
  for (const auto& r : rows) failed += r.status != "ok";
  if (failed) std::cerr << failed << " of " << rows.size() << " runs failed; see " << csv << '\n';
  return 0;
}

int cmd_timing(const Common& common) {
  const ExperimentConfig cfg = load(common);
  const AcquisitionTiming t = acquisition_timing(cfg.profile);
  std::cout << std::setprecision(10) << "conventional_s " << t.conventional << '\n'
            << "proposed_s " << t.proposed << '\n'
            << "speedup " << t.speedup() << '\n';
  return 0;
}

int cmd_metrics(const std::string& reference, const std::string& test, double floor, bool piston) {
  const ComplexField ref = io::read_cfield(reference);
  const ComplexField est = io::read_cfield(test);
  const MetricReport m = evaluate(ref, est, 1.0, {floor, piston});
  std::cout << std::setprecision(10) << "psnr_db " << m.psnr_db << '\n'
            << "rmse_rad " << m.rmse_rad << '\n'
            << "valid_pixel_count " << m.valid_pixel_count << '\n';
  return 0;
}

void add_common(CLI::App* sub, Common& c, bool with_out = true) {
  sub->add_option("--config", c.config_path, "JSON experiment config")->check(CLI::ExistingFile);
  sub->add_option("--seed", c.seed, "Override the config seed");
  if (with_out) sub->add_option("--out", c.out, "Output directory (sweep: directory or .csv path)");
  sub->add_option("--threads", c.threads, "Worker threads (fallback: HOLOEVS_THREADS)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Event-assisted phase-shifting holography simulator and reconstructor"};
  app.require_subcommand(1);
  Common common;

  auto* sim = app.add_subcommand("simulate", "Synthesize holograms, blurred frame and events");
  add_common(sim, common);

  std::string solver = "optimized";
  std::string input = ".";
  auto* rec = app.add_subcommand("reconstruct", "Reconstruct the object wavefront");
  add_common(rec, common);
  rec->add_option("--solver", solver, "fpsdh | analytical | optimized")
      ->check(CLI::IsMember({"fpsdh", "analytical", "optimized"}));
  rec->add_option("--in", input, "Directory written by `simulate`");

  std::string variable = "t_pi2_anal";
  std::vector<double> values;
  std::size_t repetitions = 1;
  std::size_t items = 1;
  std::string sweep_solver = "analytical";
  auto* sw = app.add_subcommand("sweep", "Sweep one hyperparameter over the synthetic corpus");
  add_common(sw, common);
  sw->add_option("--variable", variable, "t_pi2_anal | lambda_reg | sigma_frame")
      ->check(CLI::IsMember({"t_pi2_anal", "lambda_reg", "sigma_frame"}));
  sw->add_option("--values", values, "Values to sweep")->delimiter(',')->required();
  sw->add_option("--repetitions", repetitions, "Noise repetitions per value");
  sw->add_option("--items", items, "Corpus items per repetition");
  sw->add_option("--solver", sweep_solver, "fpsdh | analytical | optimized")
      ->check(CLI::IsMember({"fpsdh", "analytical", "optimized"}));

  auto* tim = app.add_subcommand("timing", "Acquisition time of both capture schemes");
  add_common(tim, common, false);

  std::string ref_path, test_path;
  double floor = 0.0;
  bool piston = false;
  auto* met = app.add_subcommand("metrics", "PSNR and phase RMSE between two .cfield files");
  met->add_option("--reference", ref_path)->required()->check(CLI::ExistingFile);
  met->add_option("--test", test_path)->required()->check(CLI::ExistingFile);
  met->add_option("--intensity-floor", floor);
  met->add_flag("--align-piston", piston);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sim) return cmd_simulate(common);
    if (*rec) return cmd_reconstruct(common, solver, input);
    if (*sw) return cmd_sweep(common, variable, values, repetitions, items, sweep_solver);
    if (*tim) return cmd_timing(common);
    if (*met) return cmd_metrics(ref_path, test_path, floor, piston);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
