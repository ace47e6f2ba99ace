#include <gtest/gtest.h>

#include "holoevs/pipeline.hpp"
#include "support/scenes.hpp"

using namespace holoevs;

namespace {

ExperimentConfig small(std::size_t w = 32, std::size_t h = 24) {
  ExperimentConfig c = ExperimentConfig::desk();
  c.geometry.width = w;
  c.geometry.height = h;
  c.blur_samples = 100;
  c.event_samples = 100;
  c.recon.max_iters = 150;
  c.sync();
  return c;
}

}  // namespace

TEST(Pipeline, DarkObjectGivesReferenceOnlyAndNoEvents) {
  ExperimentConfig c = small();
  c.noise.sigma_frame = 0.0;
  const RealGrid zero(c.geometry, 0.0);
  const Scene s = make_scene(object_wavefront(zero, zero, c.dataset.phase_scale), c);
  const Observables o = simulate(s, c, 5);
  const double ref = c.reference_amplitude * c.reference_amplitude;
  for (const IntensityFrame* h : {&o.h0, &o.h_pi2, &o.h_pi, &o.h_blur})
    for (double v : *h) EXPECT_NEAR(v, ref, 1e-15);
  EXPECT_TRUE(o.events.stream.records.empty());
}

TEST(Pipeline, SameSeedIsBitIdentical) {
  ExperimentConfig c = small();
  c.noise.sigma_frame = 0.01;
  const Scene s = load_scene(c, 1);
  const Observables a = simulate(s, c, 11), b = simulate(s, c, 11);
  EXPECT_EQ(a.h_blur_noisy, b.h_blur_noisy);
  EXPECT_EQ(a.h0_noisy, b.h0_noisy);
  EXPECT_EQ(a.thresholds.values, b.thresholds.values);
  EXPECT_EQ(a.events.stream.records, b.events.stream.records);
  const Observables other = simulate(s, c, 12);
  EXPECT_NE(other.h0_noisy, a.h0_noisy);
}

TEST(Pipeline, FpsdhOnCleanFramesRecoversSensorField) {
  ExperimentConfig c = small();
  c.noise.sigma_frame = 0.0;
  for (std::size_t item = 0; item < 4; ++item) {
    const Scene s = load_scene(c, item);
    const Observables o = simulate(s, c, item);
    const ComplexField g = fpsdh(o.h0, o.h_pi2, o.h_pi, s.r);
    EXPECT_LE(relative_l2(g, s.g), 1e-12) << item;
  }
}

TEST(Pipeline, SolversProduceFiniteFields) {
  const ExperimentConfig c = small();
  const Scene s = load_scene(c, 0);
  const Observables o = simulate(s, c, 3);
  for (SolverKind k : {SolverKind::fpsdh, SolverKind::analytical, SolverKind::optimized}) {
    const SolverOutput out = run_solver(k, o, s.r, c.recon);
    for (const Complex& v : out.f) ASSERT_TRUE(std::isfinite(v.real()) && std::isfinite(v.imag()));
    EXPECT_EQ(out.state.has_value(), k == SolverKind::optimized);
  }
}

TEST(Pipeline, SolverNamesRoundTrip) {
  for (SolverKind k : {SolverKind::fpsdh, SolverKind::analytical, SolverKind::optimized})
    EXPECT_EQ(parse_solver(to_string(k)), k);
  EXPECT_THROW(parse_solver("magic"), Error);
  EXPECT_THROW(parse_sweep_variable("nothing"), Error);
}

TEST(Sweep, RejectsEmptyValues) {
  SweepSpec spec;
  EXPECT_THROW(run_sweep(spec, small()), Error);
}

TEST(Sweep, RowsIndependentOfThreadCount) {
  SweepSpec spec;
  spec.variable = SweepVariable::lambda_reg;
  spec.values = {100.0, 1000.0};
  spec.items = 2;
  spec.repetitions = 2;
  spec.solver = SolverKind::analytical;
  const ExperimentConfig c = small();
  const auto one = run_sweep(spec, c, 1);
  const auto four = run_sweep(spec, c, 4);
  ASSERT_EQ(one.size(), 8u);
  ASSERT_EQ(four.size(), one.size());
  for (std::size_t i = 0; i < one.size(); ++i) {
    EXPECT_EQ(one[i].run_id, four[i].run_id);
    EXPECT_EQ(one[i].status, "ok");
    EXPECT_EQ(one[i].psnr_db, four[i].psnr_db);
    EXPECT_EQ(one[i].rmse_rad, four[i].rmse_rad);
  }
  EXPECT_EQ(one[0].run_id, "v0_r0_i0");
  EXPECT_EQ(one[1].run_id, "v0_r0_i1");
  EXPECT_EQ(one[2].run_id, "v0_r1_i0");
  const auto summary = summarize(spec, one);
  ASSERT_EQ(summary.size(), 2u);
  EXPECT_EQ(summary[0].total, 4u);
  EXPECT_EQ(summary[0].ok_count, 4u);
}

TEST(Sweep, BadValueIsRecordedNotThrown) {
  SweepSpec spec;
  spec.variable = SweepVariable::sigma_frame;
  spec.values = {-1.0};
  const auto rows = run_sweep(spec, small());
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].status.rfind("error:", 0), 0u);
  EXPECT_TRUE(std::isnan(rows[0].psnr_db));
}

TEST(Timing, Examples) {
  const AcquisitionTiming t = acquisition_timing(PhaseShifterProfile{});
  EXPECT_NEAR(t.conventional, 3.0 / 25.0 + 2.0 / 60.0, 1e-12);
  EXPECT_NEAR(t.proposed, 0.04, 1e-12);
  EXPECT_NEAR(t.speedup(), 23.0 / 6.0, 1e-12);
  PhaseShifterProfile p;
  p.t_sens = 0.01;
  p.t_shift = 0.01;
  EXPECT_NEAR(acquisition_timing(p).speedup(), 5.0, 1e-12);
  p.t_shift = 0.0;
  EXPECT_THROW(acquisition_timing(p), Error);
}
