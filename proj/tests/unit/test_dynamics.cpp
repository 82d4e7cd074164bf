#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "snlb/dynamics.hpp"
#include "snlb/norms.hpp"
#include "snlb/stats.hpp"
#include "test_util.hpp"

using namespace snlb;
using snlb::testing::max_abs_diff;
using snlb::testing::random_field;

namespace {

PairState random_state(const Grid& g, int band, std::uint64_t seed, double scale = 1.0, double decay = 2.0) {
  PairState st(g);
  st.position = random_field(g, band, seed, decay);
  st.velocity = random_field(g, band, seed + 1000, decay - 2.0);
  st.position *= scale;
  st.velocity *= scale;
  return st;
}

double state_diff(const PairState& a, const PairState& b, double s) {
  PairState d = a;
  d.position -= b.position;
  d.velocity -= b.velocity;
  return pair_norm(d, s);
}

}  // namespace

TEST(LinearStep, GroupProperty) {
  const Grid g(4, 8);
  const auto st = random_state(g, 3, 1);
  auto a = st, b = st;
  linear_step_undamped(a, 0.3);
  linear_step_undamped(a, 0.45);
  linear_step_undamped(b, 0.75);
  EXPECT_LT(max_abs_diff(a.position, b.position), 1e-13);
  EXPECT_LT(max_abs_diff(a.velocity, b.velocity), 1e-13 * 27);  // velocities scale with omega <= 27
  EXPECT_DOUBLE_EQ(a.time, 0.75);
}

TEST(LinearStep, HalfTurnAndZeroMode) {
  const Grid g(4, 4);
  PairState st(g);
  st.position.set_mode({1, 0, 0, 0}, 0.8);
  st.velocity[0] = 1.5;
  linear_step_undamped(st, std::numbers::pi);
  EXPECT_NEAR(std::abs(st.position.mode({1, 0, 0, 0}) + 0.8), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(st.velocity.mode({1, 0, 0, 0})), 0.0, 1e-15);
  EXPECT_NEAR(st.position[0].real(), 1.5 * std::numbers::pi, 1e-15);
  EXPECT_DOUBLE_EQ(st.velocity[0].real(), 1.5);
}

TEST(LinearStep, QuadraticEnergyConserved) {
  const Grid g(4, 8);
  auto st = random_state(g, 3, 2);
  st.velocity[0] = 0.0;  // the zero mode drifts linearly and carries no |n|^4 weight
  const double e0 = beam_linear_energy(st);
  for (int j = 0; j < 1000; ++j) linear_step_undamped(st, 0.0137);
  EXPECT_NEAR(beam_linear_energy(st), e0, 1e-12 * e0);
}

TEST(Remainder, ZeroNonlinearityIsLinearFlow) {
  const Grid g(2, 8);
  IntegratorConfig cfg;
  cfg.dt = 0.05;
  ZeroWickSource src(wick_work_grid(g, 3, g.max_mode()), 3);
  PairState st(g);
  for (int j = 0; j < 10; ++j) ASSERT_TRUE(step_remainder(st, src, 3, 1, cfg));
  EXPECT_EQ(sobolev_norm(st.position, 0.0), 0.0);
  EXPECT_EQ(sobolev_norm(st.velocity, 0.0), 0.0);
  // linear case (k = 1 with Xi_1 = 0 reduces to the linear force v)
}

TEST(Remainder, TimeReversible) {
  const Grid g(2, 16);
  IntegratorConfig cfg;
  cfg.dt = 0.01;
  ZeroWickSource src(wick_work_grid(g, 3, g.max_mode()), 3);
  RemainderStepper stepper(3, 1, -1.0, cfg);
  const auto st0 = random_state(g, 3, 3, 0.5);
  auto st = st0;
  for (int j = 0; j < 20; ++j) ASSERT_TRUE(stepper.step(st, src));
  st.velocity *= -1.0;
  RemainderStepper back(3, 1, -1.0, cfg);
  for (int j = 0; j < 20; ++j) ASSERT_TRUE(back.step(st, src));
  st.velocity *= -1.0;
  EXPECT_LT(max_abs_diff(st.position, st0.position), 1e-10);
  EXPECT_LT(max_abs_diff(st.velocity, st0.velocity), 1e-10);
}

TEST(Remainder, EnergyDriftIsSecondOrder) {
  const Grid g(2, 16);
  const auto st0 = random_state(g, 3, 4, 1.0);
  std::vector<double> C;
  for (double dt : {0.02, 0.01, 0.005}) {
    IntegratorConfig cfg;
    cfg.dt = dt;
    ZeroWickSource src(wick_work_grid(g, 3, g.max_mode()), 3);
    RemainderStepper stepper(3, 1, -1.0, cfg);
    auto st = st0;
    const double e0 = beam_energy(st, 3);
    double drift = 0.0;
    for (long j = 0; j < std::lround(1.0 / dt); ++j) {
      ASSERT_TRUE(stepper.step(st, src));
      drift = std::max(drift, std::abs(beam_energy(st, 3) - e0));
    }
    C.push_back(drift / (dt * dt));
  }
  for (std::size_t i = 1; i < C.size(); ++i) {
    EXPECT_GT(C[i] / C[i - 1], 0.5);
    EXPECT_LT(C[i] / C[i - 1], 2.0);
  }
}

TEST(Remainder, SelfConvergenceRateTwoWithNoise) {
  const Grid g(2, 16);
  const auto st0 = random_state(g, 3, 5, 0.5);
  // dt * max |n|^2 <= 2.5: past the pre-asymptotic range of the stiffest modes
  const double T = 0.5, finest = 0.025 / 16;
  std::vector<PairState> finals;
  std::vector<double> dts{0.025, 0.0125, 0.00625, 0.003125, finest};
  for (double dt : dts) {
    IntegratorConfig cfg;
    cfg.dt = dt;
    NoiseStream s{21, 0, finest};
    ConvolutionWickSource src(ConvolutionKind::undamped, g, -1.0, 3, s);
    RemainderStepper stepper(3, 1, -1.0, cfg);
    auto st = st0;
    for (long j = 0; j < std::lround(T / dt); ++j) ASSERT_TRUE(stepper.step(st, src));
    finals.push_back(st);
  }
  // successive differences |v_dt - v_dt/2| ~ C dt^2
  std::vector<double> x, y;
  for (std::size_t i = 0; i + 1 < finals.size(); ++i) {
    x.push_back(dts[i]);
    y.push_back(state_diff(finals[i], finals[i + 1], 1.5));
  }
  const auto fit = log_log_fit(x, y);
  EXPECT_NEAR(fit.slope, 2.0, 0.2) << y[0] << ' ' << y[1] << ' ' << y[2] << ' ' << y[3];
}

TEST(Remainder, FocusingFlipsKickSign) {
  const Grid g(2, 8);
  IntegratorConfig cfg;
  cfg.dt = 0.01;
  cfg.scheme = Scheme::lie;
  ZeroWickSource src(wick_work_grid(g, 3, g.max_mode()), 3);
  const auto st0 = random_state(g, 3, 6);
  auto lin = st0, def = st0, foc = st0;
  linear_step_undamped(lin, cfg.dt);
  step_remainder(def, src, 3, 1, cfg);
  step_remainder(foc, src, 3, -1, cfg);
  // Lie step: v_t <- v_t - dt * sign * F, then the exact linear flow
  auto kd = def, kf = foc;
  kd.velocity -= lin.velocity;
  kf.velocity -= lin.velocity;
  kd.velocity += kf.velocity;
  EXPECT_LT(sobolev_norm(kd.velocity, 0.0), 1e-12);
  EXPECT_GT(sobolev_norm(kf.velocity, 0.0), 1e-6);
}

TEST(Trajectory, ZeroDataStaysZero) {
  const Grid g(2, 8);
  ModelSpec m;
  m.noise = false;
  IntegratorConfig cfg;
  const auto rec = run_trajectory(PairState(g), m, cfg, 0.2, NoiseStream{}, {"h_sprime", "energy"});
  for (const auto& row : rec.rows) {
    EXPECT_EQ(row[1], 0.0);
    EXPECT_EQ(row[2], 0.0);
  }
  EXPECT_EQ(rec.rows.size(), 21u);
}

TEST(Trajectory, LinearEnergyConstant) {
  const Grid g(3, 8);
  ModelSpec m;
  m.nonlinear = false;
  m.noise = false;
  IntegratorConfig cfg;
  cfg.dt = 0.01;
  auto st = random_state(g, 3, 7);
  st.velocity[0] = 0.0;
  const auto rec = run_trajectory(st, m, cfg, 1.0, NoiseStream{}, {"linear_energy"}, 10);
  for (const auto& row : rec.rows) EXPECT_NEAR(row[1], rec.rows[0][1], 1e-12 * rec.rows[0][1]);
  EXPECT_FALSE(rec.blown_up);
}

TEST(Trajectory, EmptyTimeLoop) {
  const Grid g(2, 8);
  const auto rec = run_trajectory(random_state(g, 3, 8), ModelSpec{}, IntegratorConfig{}, 0.0, NoiseStream{1, 0, 0.01},
                                  {"h_sprime"});
  EXPECT_EQ(rec.rows.size(), 1u);
}

TEST(Trajectory, FocusingBlowUpIsFlagged) {
  const Grid g(2, 8);
  PairState st(g);
  st.position[0] = 20.0;
  ModelSpec m;
  m.sign = -1;
  m.noise = false;
  IntegratorConfig cfg;
  cfg.dt = 1e-3;
  const auto rec = run_trajectory(st, m, cfg, 2.0, NoiseStream{}, {"h_sprime"});
  EXPECT_TRUE(rec.blown_up);
  EXPECT_LT(rec.stop_time, 2.0);
  EXPECT_GT(rec.stop_time, 0.0);
}

TEST(Damped, OuHalfStepPreservesStandardNormal) {
  const Grid g(4, 4);
  RunningStats before, after;
  for (std::uint32_t p = 0; p < 20000; ++p) {
    IntegratorConfig cfg;
    cfg.dt = 0.37;
    DampedStepper stepper(g, 3, 1.0, cfg, NoiseStream{31, p, 0.0}, false);
    auto st = sample_initial_mu2(NoiseStream{32, p, 0.0}, g);
    before.add(std::norm(st.velocity.mode({0, 1, 0, 0})));
    stepper.ou_flow(st, 0.0, 0.185);
    after.add(std::norm(st.velocity.mode({0, 1, 0, 0})));
  }
  EXPECT_NEAR(after.mean, 1.0, 3 * after.se());
  EXPECT_NEAR(before.mean, 1.0, 3 * before.se());
}

TEST(Damped, LinearCompositionKeepsGaussianStationary) {
  const Grid g(4, 4);
  RunningStats a0, a1, b1;
  for (std::uint32_t p = 0; p < 20000; ++p) {
    IntegratorConfig cfg;
    cfg.dt = 0.25;
    DampedStepper stepper(g, 3, 1.0, cfg, NoiseStream{41, p, 0.0}, false);
    auto st = sample_initial_mu2(NoiseStream{42, p, 0.0}, g);
    for (int j = 0; j < 4; ++j) stepper.step(st);
    a0.add(std::norm(st.position[0]));
    a1.add(std::norm(st.position.mode({1, 0, 0, 0})));
    b1.add(std::norm(st.velocity.mode({0, 0, 0, 1})));
  }
  EXPECT_NEAR(a0.mean, 1.0, 3 * a0.se());
  EXPECT_NEAR(a1.mean, 0.25, 3 * a1.se());
  EXPECT_NEAR(b1.mean, 1.0, 3 * b1.se());
}

TEST(Damped, HighModesFollowExactLinearFlow) {
  const Grid g(4, 6);
  IntegratorConfig cfg;
  cfg.dt = 0.1;
  const NoiseStream s{51, 0, 0.05};
  DampedStepper stepper(g, 3, 1.0, cfg, s, true);
  auto st = sample_initial_mu2(NoiseStream{52, 0, 0.0}, g);
  ConvolutionState ref;
  ref.kind = ConvolutionKind::damped;
  ref.inner = 1.0;
  ref.pair = st;
  for (int j = 0; j < 5; ++j) {
    stepper.step(st);
    evolve_convolution(ref, 0.1, s);
  }
  double worst = 0.0;
  for_each_mode(g, [&](const ModeRef& m) {
    if (m.norm2 <= 1) return;
    worst = std::max(worst, std::abs(st.position[m.index] - ref.pair.position[m.index]));
    worst = std::max(worst, std::abs(st.velocity[m.index] - ref.pair.velocity[m.index]));
  });
  EXPECT_EQ(worst, 0.0);
  EXPECT_THROW(DampedStepper(g, 2, 1.0, cfg, s), std::invalid_argument);
}

TEST(Damped, FrozenHighBandLeavesLowModesUnchanged) {
  const Grid g(4, 4);
  IntegratorConfig cfg;
  cfg.dt = 0.05;
  const NoiseStream s{53, 2, 0.025};
  DampedStepper live(g, 3, 1.0, cfg, s), frozen(g, 3, 1.0, cfg, s);
  frozen.freeze_high_band(true);
  const auto st0 = sample_initial_mu2(NoiseStream{54, 0, 0.0}, g);
  auto a = st0, b = st0;
  for (int j = 0; j < 8; ++j) {
    ASSERT_TRUE(live.step(a));
    ASSERT_TRUE(frozen.step(b));
  }
  EXPECT_EQ(a.time, b.time);
  for_each_mode(g, [&](const ModeRef& m) {
    const PairState& want = m.norm2 <= 1 ? a : st0;
    EXPECT_EQ(b.position[m.index], want.position[m.index]);
    EXPECT_EQ(b.velocity[m.index], want.velocity[m.index]);
  });
}

TEST(CutoffGap, RemainderGapShrinksWithN) {
  const Grid g(2, 36);
  CutoffGapProbe p;
  p.Ns = {2, 4, 8};
  p.samples = 6;
  p.T = 0.2;
  IntegratorConfig cfg;
  cfg.dt = 0.005;
  const auto rows = cutoff_gap_probe(g, p, cfg);
  ASSERT_EQ(rows.size(), 3u);
  for (std::size_t j = 0; j < rows.size(); ++j) {
    EXPECT_EQ(rows[j].blown_up, 0u);
    EXPECT_GT(rows[j].mean_gap, 0.0);
    if (j > 0) EXPECT_LT(rows[j].mean_gap, rows[j - 1].mean_gap);
  }
}

TEST(CutoffGap, ZeroTimeGivesZeroGap) {
  const Grid g(2, 20);
  CutoffGapProbe p;
  p.Ns = {2, 4};
  p.samples = 3;
  p.T = 0.0;
  const auto rows = cutoff_gap_probe(g, p, IntegratorConfig{});
  for (const auto& r : rows) EXPECT_EQ(r.max_gap, 0.0);
}

TEST(CutoffGap, RejectsCutoffOffGrid) {
  CutoffGapProbe p;
  p.Ns = {4, 8};
  EXPECT_THROW(cutoff_gap_probe(Grid(2, 24), p, IntegratorConfig{}), std::invalid_argument);
}
