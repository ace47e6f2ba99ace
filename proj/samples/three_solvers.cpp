// Simulates one desk-scale capture and compares the three solvers.

#include <cstdio>

#include "holoevs/pipeline.hpp"

int main() {
  using namespace holoevs;
  ExperimentConfig cfg = ExperimentConfig::desk();
  cfg.noise.sigma_frame = 0.01;
  cfg.seed = 7;
  cfg.recon.seed = 7;

  const Scene scene = load_scene(cfg, 0);
  const Observables obs = simulate(scene, cfg, cfg.seed);
  std::printf("events: %zu\n", obs.events.stream.records.size());

  for (SolverKind kind : {SolverKind::fpsdh, SolverKind::analytical, SolverKind::optimized}) {
    const SolverOutput out = run_solver(kind, obs, scene.r, cfg.recon);
    const MetricReport m = evaluate(scene.f, out.f);
    std::printf("%-10s  PSNR %6.2f dB  phase RMSE %.3f rad", to_string(kind).c_str(), m.psnr_db,
                m.rmse_rad);
    if (out.state) std::printf("  t_pi2_opt %.3f ms", out.state->t_pi2_opt * 1e3);
    std::printf("\n");
  }
}
