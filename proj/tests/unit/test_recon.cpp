#include <gtest/gtest.h>

#include <cmath>

#include "holoevs/metrics.hpp"
#include "holoevs/recon.hpp"
#include "support/oracles.hpp"
#include "support/scenes.hpp"

using namespace holoevs;

namespace {

const Geometry kPixel{1, 1};
const Geometry kTiny{16, 16};
constexpr double kC = 0.15;

struct CleanInstance {
  ComplexField g, r;
  PhaseShifterProfile profile;
  EventTrack track;
  IntensityFrame h0, h_blur;
  double t_half;
};

CleanInstance clean_instance(const Geometry& geo, unsigned seed, std::size_t samples = 500) {
  CleanInstance c;
  c.g = oracle::random_field(geo, seed, 0.4);
  c.r = make_reference(geo, std::sqrt(0.5));
  c.profile = scenes::exact_profile();
  c.track = EventTrack::continuous(c.g, c.r, c.profile, kC, samples);
  c.h0 = hologram(c.g, c.r, 0.0);
  c.h_blur = blurred_hologram(c.g, c.r, c.profile, samples);
  c.t_half = c.profile.t_sens / 4.0;
  return c;
}

ReconConfig config_for(const CleanInstance& c) {
  ReconConfig rc;
  rc.t_sens = c.profile.t_sens;
  rc.t_pi2_anal = c.t_half;
  return rc;
}

}  // namespace

TEST(ExactProfile, HitsBothPhaseSteps) {
  const PhaseShifterProfile p = scenes::exact_profile();
  EXPECT_NEAR(phase_at(p, p.t_sens), kPi, 1e-12);
  EXPECT_NEAR(phase_at(p, p.t_sens / 4.0), kPi / 2.0, 1e-12);
}

TEST(Fpsdh, HandAlgebra) {
  const ComplexField r(kPixel, Complex(1.0, 0.0));
  const ComplexField g = fpsdh(IntensityFrame(kPixel, 4.0), IntensityFrame(kPixel, 2.0),
                               IntensityFrame(kPixel, 0.0), r);
  EXPECT_NEAR(std::abs(g[0] - Complex(1.0, 0.0)), 0.0, 1e-15);
}

TEST(Fpsdh, ZeroObject) {
  const ComplexField r = make_reference(kTiny, std::sqrt(0.5));
  const IntensityFrame h(kTiny, 0.5);
  for (const auto& v : fpsdh(h, h, h, r)) EXPECT_EQ(v, Complex(0.0, 0.0));
}

TEST(Fpsdh, ExactInverseOfHologramModel) {
  for (unsigned seed = 0; seed < 10; ++seed) {
    const ComplexField g = oracle::random_field(kTiny, seed);
    ComplexField r = oracle::random_field(kTiny, 500 + seed, 0.8);
    for (auto& v : r)
      if (std::abs(v) < 0.05) v = 0.05;
    const ComplexField est = fpsdh(hologram(g, r, 0.0), hologram(g, r, kPi / 2), hologram(g, r, kPi), r);
    for (std::size_t i = 0; i < g.size(); ++i) EXPECT_LE(std::abs(est[i] - g[i]), 1e-12);
  }
}

TEST(Fpsdh, RejectsZeroReference) {
  ComplexField r = make_reference(kTiny, 1.0);
  r[3] = 0.0;
  const IntensityFrame h(kTiny, 1.0);
  EXPECT_THROW(fpsdh(h, h, h, r), Error);
  EXPECT_THROW(wavefront_from_events(h, RealGrid(kTiny), RealGrid(kTiny), kC, r), Error);
}

TEST(WavefrontFromEvents, NoEventsGiveZero) {
  const ComplexField r = make_reference(kTiny, 1.0);
  const CountGrid zero(kTiny, 0);
  for (const auto& v : wavefront_from_events(IntensityFrame(kTiny, 0.7), zero, zero, kC, r))
    EXPECT_EQ(v, Complex(0.0, 0.0));
}

TEST(WavefrontFromEvents, SinglePixel) {
  const ComplexField r(kPixel, Complex(1.0, 0.0));
  const ComplexField g = wavefront_from_events(IntensityFrame(kPixel, 1.0), CountGrid(kPixel, 1),
                                               CountGrid(kPixel, 2), kC, r);
  EXPECT_NEAR(g[0].real(), -0.0874647018940008, 1e-15);
  EXPECT_NEAR(g[0].imag(), -0.006547580529859265, 1e-15);
}

TEST(WavefrontFromEvents, ContinuousEventsEqualThreeStep) {
  const ComplexField g = oracle::random_field(kTiny, 71, 0.4);
  const ComplexField r = make_reference(kTiny, std::sqrt(0.5));
  const IntensityFrame h0 = hologram(g, r, 0.0);
  const IntensityFrame h_half = hologram(g, r, kPi / 2);
  const IntensityFrame h_pi = hologram(g, r, kPi);
  RealGrid e_half(kTiny), e_full(kTiny);
  for (std::size_t i = 0; i < h0.size(); ++i) {
    e_half[i] = std::log(h_half[i] / h0[i]) / kC;
    e_full[i] = std::log(h_pi[i] / h0[i]) / kC;
  }
  const ComplexField a = wavefront_from_events(h0, e_half, e_full, kC, r);
  const ComplexField b = fpsdh(h0, h_half, h_pi, r);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_LE(std::abs(a[i] - b[i]), 1e-9);
}

TEST(Analytical, ZeroObjectGivesZero) {
  const Geometry geo{32, 24};
  const ComplexField g(geo);
  const ComplexField r = make_reference(geo, std::sqrt(0.5));
  const PhaseShifterProfile p;
  const auto ev = generate_events(g, r, p, uniform_thresholds(geo, kC), 500);
  const auto res = reconstruct_analytical(blurred_hologram(g, r, p, 500), ev.stream, r, ReconConfig{});
  for (const auto& v : res.f) EXPECT_LE(std::abs(v), 1e-15);
}

TEST(Analytical, ContinuumLimitMatchesThreeStep) {
  const Geometry geo{64, 48};
  const CleanInstance c = clean_instance(geo, 81);
  ReconConfig rc = config_for(c);
  rc.exposure_samples = 500;
  const auto res = reconstruct_analytical(c.h_blur, c.track, c.r, rc);
  const ComplexField g3 = fpsdh(c.h0, hologram(c.g, c.r, kPi / 2), hologram(c.g, c.r, kPi), c.r);
  EXPECT_LE(relative_l2(res.g, g3), 1e-2);
  EXPECT_LE(relative_l2(res.f, to_object_plane(g3, rc.z)), 1e-2);
}

TEST(LossModel, ClosedFormMatchesExplicitWavefront) {
  const CleanInstance c = clean_instance(kTiny, 91);
  const LossModel model(c.h_blur, c.track, c.r, kC, 64, 500.0);
  RealGrid h = c.h0;
  for (std::size_t i = 0; i < h.size(); ++i) h[i] *= 1.0 + 0.1 * std::sin(double(i));
  for (double t : {0.001, c.t_half, 0.03}) {
    const double explicit_l1 = loss_L1(h, t, c.track, kC, c.r);
    EXPECT_NEAR(model.loss_L1(h, t), explicit_l1, 1e-10 * explicit_l1);
  }
  EXPECT_NEAR(model.loss_L2(h), loss_L2(h, model.exposure_factor(), c.h_blur), 1e-15);
}

TEST(LossL1, VanishesAtTheTrueStaticHologram) {
  const CleanInstance c = clean_instance(kTiny, 101);
  double norm2 = 0.0;
  for (double v : c.h0) norm2 += v * v;
  EXPECT_LE(loss_L1(c.h0, c.t_half, c.track, kC, c.r), 1e-12 * norm2);
}

TEST(LossL1, ZeroEstimate) {
  const CleanInstance c = clean_instance(kTiny, 102);
  const RealGrid zero(kTiny, 0.0);
  EXPECT_NEAR(loss_L1(zero, c.t_half, c.track, kC, c.r), kTiny.size() * 0.25, 1e-12);
}

TEST(LossL1, QuadraticHomogeneity) {
  // With a = b = 1 the model is |g~ + r|^2 = |r|^2, so the residual is h - |r|^2.
  const ComplexField r = make_reference(kTiny, 1.0);
  const EventTrack empty = EventTrack::from_stream(EventStream{16, 16, kC, 1.0 / 25.0, {}});
  RealGrid h(kTiny, 1.3), h2(kTiny, 1.6);
  EXPECT_NEAR(loss_L1(h2, 0.01, empty, kC, r), 4.0 * loss_L1(h, 0.01, empty, kC, r), 1e-12);
}

TEST(LossL2, Values) {
  const IntensityFrame hb(kTiny, 0.6);
  RealGrid factor(kTiny, 1.0);
  for (std::size_t i = 0; i < factor.size(); ++i) factor[i] = 1.0 + 0.01 * i;
  RealGrid fit(kTiny);
  for (std::size_t i = 0; i < fit.size(); ++i) fit[i] = hb[i] / factor[i];
  EXPECT_NEAR(loss_L2(fit, factor, hb), 0.0, 1e-28);
  EXPECT_NEAR(loss_L2(RealGrid(kTiny, 0.0), factor, hb), kTiny.size() * 0.36, 1e-12);
}

TEST(LossL2, SinglePixelPerturbation) {
  RealGrid factor(kTiny, 1.0), h(kTiny, 0.3);
  for (std::size_t i = 0; i < factor.size(); ++i) factor[i] = 1.0 + 0.02 * i;
  const IntensityFrame hb(kTiny, 0.5);
  const std::size_t k = 37;
  const double delta = 1e-3;
  RealGrid hp = h;
  hp[k] += delta;
  const double res = factor[k] * h[k] - hb[k];
  const double expected = std::pow(factor[k] * delta, 2) + 2.0 * factor[k] * delta * res;
  const double actual = loss_L2(hp, factor, hb) - loss_L2(h, factor, hb);
  EXPECT_NEAR(actual, expected, 1e-6 * std::abs(expected));
}

TEST(Gradient, MatchesCentralDifferences) {
  for (unsigned seed : {111u, 112u, 113u}) {
    const CleanInstance c = clean_instance(kTiny, seed);
    const LossModel model(c.h_blur, c.track, c.r, kC, 64, 500.0);
    RealGrid h = c.h0;
    for (std::size_t i = 0; i < h.size(); ++i) h[i] *= 1.0 + 0.2 * std::cos(1.7 * i);
    const double t = 0.8 * c.t_half;
    const RealGrid grad = model.gradient_h(h, t);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < h.size(); ++i) {
      const double step = 1e-5 * std::max(1.0, std::abs(h[i]));
      RealGrid hp = h, hm = h;
      hp[i] += step;
      hm[i] -= step;
      const double fd = (model.total(hp, t) - model.total(hm, t)) / (2.0 * step);
      num += std::pow(grad[i] - fd, 2);
      den += fd * fd;
    }
    EXPECT_LE(std::sqrt(num / den), 1e-4) << seed;
  }
}

TEST(Gradient, TimeDerivativeZeroWithoutEvents) {
  const ComplexField r = make_reference(kTiny, std::sqrt(0.5));
  const EventTrack empty = EventTrack::from_stream(EventStream{16, 16, kC, 1.0 / 25.0, {}});
  const LossModel model(IntensityFrame(kTiny, 0.5), empty, r, kC, 64, 500.0);
  const RealGrid h(kTiny, 0.9);
  for (double t : {0.0, 0.004, 0.02, 0.04}) EXPECT_EQ(model.gradient_t(h, t), 0.0);
}

TEST(Gradient, TimeDerivativePointsTowardHalfPhase) {
  // Clean single pixel: descending along -dL/dt moves t toward t_{pi/2} from both sides.
  const ComplexField g(kPixel, std::polar(0.45, 2.2));
  const ComplexField r = make_reference(kPixel, std::sqrt(0.5));
  const PhaseShifterProfile p = scenes::exact_profile();
  const EventTrack track = EventTrack::continuous(g, r, p, kC, 2000);
  const IntensityFrame h0 = hologram(g, r, 0.0);
  const LossModel model(blurred_hologram(g, r, p, 2000), track, r, kC, 64, 0.0);
  const double th = p.t_sens / 4.0;
  const double dt = p.t_sens / 2000.0;
  int checked = 0;
  for (double off = 0.3e-3; off <= 1.5e-3; off += 0.1e-3) {
    const double below = th - off + 0.5 * dt;
    const double above = th + off + 0.5 * dt;
    EXPECT_LT(model.gradient_t(h0, below), 0.0) << "t = " << below;
    EXPECT_GT(model.gradient_t(h0, above), 0.0) << "t = " << above;
    checked += 2;
  }
  EXPECT_GE(checked, 20);
}

TEST(Optimized, DeterministicGivenSeed) {
  const CleanInstance c = clean_instance(Geometry{32, 24}, 121);
  ReconConfig rc = config_for(c);
  rc.max_iters = 200;
  rc.seed = 5;
  const auto a = reconstruct_optimized(c.h_blur, c.track, c.r, rc);
  const auto b = reconstruct_optimized(c.h_blur, c.track, c.r, rc);
  EXPECT_EQ(a.state.h0_opt, b.state.h0_opt);
  EXPECT_EQ(a.state.t_pi2_opt, b.state.t_pi2_opt);
  EXPECT_EQ(a.state.loss_history, b.state.loss_history);
  EXPECT_EQ(a.f, b.f);
  rc.seed = 6;
  EXPECT_NE(reconstruct_optimized(c.h_blur, c.track, c.r, rc).state.loss_history, a.state.loss_history);
}

TEST(Optimized, LossNonIncreasingAndTimeClamped) {
  const CleanInstance c = clean_instance(Geometry{32, 24}, 131);
  ReconConfig rc = config_for(c);
  rc.max_iters = 600;
  const auto res = reconstruct_optimized(c.h_blur, c.track, c.r, rc);
  const auto& L = res.state.loss_history;
  ASSERT_EQ(L.size(), 600u);
  std::size_t ok = 0;
  for (std::size_t i = 1; i < L.size(); ++i) ok += L[i] <= L[i - 1];
  EXPECT_GE(double(ok) / double(L.size() - 1), 0.95);
  EXPECT_GE(res.state.t_pi2_opt, 0.0);
  EXPECT_LE(res.state.t_pi2_opt, c.profile.t_sens);
  EXPECT_FALSE(res.state.diverged);
}

TEST(Optimized, PlainGradientDescentDivergenceIsReported) {
  const CleanInstance c = clean_instance(Geometry{32, 24}, 141);
  ReconConfig rc = config_for(c);
  rc.optimizer = OptimizerKind::gd;
  rc.max_iters = 300;
  OptimizedResult res;
  EXPECT_NO_THROW(res = reconstruct_optimized(c.h_blur, c.track, c.r, rc));
  EXPECT_TRUE(res.state.diverged);
  EXPECT_FALSE(res.state.diagnostic.empty());
  EXPECT_LT(res.state.iter, 300u);
}

TEST(Optimized, NoiselessMatchesAnalyticalAtOracleTime) {
  ExperimentConfig cfg = scenes::clean_desk();
  const Scene scene = load_scene(cfg, 0);
  const EventTrack track =
      EventTrack::continuous(scene.g, scene.r, cfg.profile, kC, cfg.event_samples);
  const IntensityFrame blur = blurred_hologram(scene.g, scene.r, cfg.profile, cfg.blur_samples);
  const auto anal = reconstruct_analytical(blur, track, scene.r, cfg.recon);
  const auto opt = reconstruct_optimized(blur, track, scene.r, cfg.recon);
  const double pa = psnr(intensity(scene.f), intensity(anal.f));
  const double po = psnr(intensity(scene.f), intensity(opt.f));
  EXPECT_GE(po, pa - 0.5) << "analytical " << pa << " optimized " << po;
}

TEST(Optimized, NonNegativeOption) {
  const CleanInstance c = clean_instance(Geometry{32, 24}, 151);
  ReconConfig rc = config_for(c);
  rc.max_iters = 100;
  rc.nonnegative = true;
  const auto res = reconstruct_optimized(c.h_blur, c.track, c.r, rc);
  for (double v : res.state.h0_opt) EXPECT_GE(v, 0.0);
}

TEST(ToObjectPlane, InvertsForwardPropagation) {
  const Geometry geo{64, 48};
  const ComplexField f = oracle::periodic_random_field(geo, 3, 10, 2);  // inside the band limit at both distances
  for (double z : {0.12, 0.27}) {
    const ComplexField g = propagate(f, {z, true});
    EXPECT_LE(relative_l2(to_object_plane(g, z), f), 1e-9);
  }
  EXPECT_THROW(to_object_plane(f, 0.0), Error);
  EXPECT_THROW(to_object_plane(f, -0.1), Error);
}

TEST(ToObjectPlane, RefocusingSharpensTheInFocusPlane) {
  // Two point-like objects at 120 mm and 270 mm: each is sharpest when refocused to its own plane.
  const Geometry geo{128, 96};
  ComplexField near(geo), far(geo);
  near.at(40, 48) = 1.0;
  far.at(88, 48) = 1.0;
  ComplexField sensor = propagate(near, {0.12, true});
  const ComplexField far_sensor = propagate(far, {0.27, true});
  for (std::size_t i = 0; i < sensor.size(); ++i) sensor[i] += far_sensor[i];
  auto peak = [](const ComplexField& f, std::size_t x, std::size_t y) { return std::norm(f.at(x, y)); };
  const ComplexField at_near = to_object_plane(sensor, 0.12);
  const ComplexField at_far = to_object_plane(sensor, 0.27);
  EXPECT_GT(peak(at_near, 40, 48), 4.0 * peak(at_far, 40, 48));
  EXPECT_GT(peak(at_far, 88, 48), 4.0 * peak(at_near, 88, 48));
}

TEST(ReconConfig, Validation) {
  ReconConfig rc;
  EXPECT_NO_THROW(rc.validate());
  rc.lambda_reg = -1.0;
  EXPECT_THROW(rc.validate(), Error);
  rc = {};
  rc.alpha_h = 0.0;
  EXPECT_THROW(rc.validate(), Error);
  rc = {};
  rc.max_iters = 0;
  EXPECT_THROW(rc.validate(), Error);
  rc = {};
  rc.t_pi2_anal = 0.05;
  EXPECT_THROW(rc.validate(), Error);
}
