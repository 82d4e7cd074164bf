#include <gtest/gtest.h>

#include <cmath>

#include "snlb/fft.hpp"
#include "snlb/noise.hpp"
#include "snlb/norms.hpp"
#include "snlb/stats.hpp"
#include "test_util.hpp"

using namespace snlb;

namespace {

template <class F>
double simpson(F&& f, double t, int panels) {
  const double h = t / panels;
  double acc = f(0.0) + f(t);
  for (int i = 1; i < panels; ++i) acc += (i % 2 ? 4.0 : 2.0) * f(i * h);
  return acc * h / 3.0;
}

}  // namespace

TEST(Rng, PhiloxKnownAnswers) {
  using C = Philox4x32::Counter;
  using K = Philox4x32::Key;
  EXPECT_EQ(Philox4x32::generate(C{0, 0, 0, 0}, K{0, 0}), (C{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u}));
  EXPECT_EQ(Philox4x32::generate(C{~0u, ~0u, ~0u, ~0u}, K{~0u, ~0u}),
            (C{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu}));
  EXPECT_EQ(Philox4x32::generate(C{0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, K{0xa4093822u, 0x299f31d0u}),
            (C{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u}));
}

TEST(Rng, KeyedDrawsAreReproducibleAndConjugate) {
  const KeyedNormal a(42), b(42), c(43);
  const Wavevector n{1, -2, 0, 3};
  EXPECT_EQ(a.complex_normal(n, 4, 7, 1, Purpose::convolution, 0), b.complex_normal(n, 4, 7, 1, Purpose::convolution, 0));
  EXPECT_NE(a.complex_normal(n, 4, 7, 1, Purpose::convolution, 0), c.complex_normal(n, 4, 7, 1, Purpose::convolution, 0));
  EXPECT_NE(a.complex_normal(n, 4, 7, 1, Purpose::convolution, 0), a.complex_normal(n, 4, 8, 1, Purpose::convolution, 0));
  EXPECT_EQ(a.complex_normal(negate(n), 4, 7, 1, Purpose::convolution, 0),
            std::conj(a.complex_normal(n, 4, 7, 1, Purpose::convolution, 0)));
  EXPECT_EQ(a.complex_normal({0, 0, 0, 0}, 4, 7, 1, Purpose::convolution, 0).imag(), 0.0);
  RunningStats re, im, sq;
  for (std::uint64_t j = 0; j < 100000; ++j) {
    const auto z = a.complex_normal(n, 4, j, 0, Purpose::generic, 0);
    re.add(z.real());
    im.add(z.imag());
    sq.add(std::norm(z));
  }
  EXPECT_NEAR(re.mean, 0.0, 4 * re.se());
  EXPECT_NEAR(sq.mean, 1.0, 4 * sq.se());
  EXPECT_NEAR(re.variance(), 0.5, 0.01);
  EXPECT_NEAR(im.variance(), 0.5, 0.01);
}

TEST(ModeStep, UndampedCovarianceMatchesQuadrature) {
  for (int n2 : {0, 1, 3, 10})
    for (double h : {0.01, 0.3, 1.7}) {
      const auto m = undamped_mode_step(n2, h);
      const double w = n2;
      auto k1 = [w](double t) { return w == 0 ? t : std::sin(w * t) / w; };
      auto k2 = [w](double t) { return w == 0 ? 1.0 : std::cos(w * t); };
      EXPECT_NEAR(m.c11, simpson([&](double t) { return k1(t) * k1(t); }, h, 100000), 1e-12);
      EXPECT_NEAR(m.c12, simpson([&](double t) { return k1(t) * k2(t); }, h, 100000), 1e-12);
      EXPECT_NEAR(m.c22, simpson([&](double t) { return k2(t) * k2(t); }, h, 100000), 1e-12);
      EXPECT_NEAR(m.l11 * m.l11, m.c11, 1e-14);
      EXPECT_NEAR(m.l21 * m.l21 + m.l22 * m.l22, m.c22, 1e-13);
    }
}

TEST(ModeStep, DampedCovarianceMatchesQuadrature) {
  for (int n2 : {0, 1, 4, 9})
    for (double h : {0.05, 0.5, 2.0}) {
      const auto m = damped_mode_step(n2, h);
      const double w2 = (1.0 + n2) * (1.0 + n2), nu = std::sqrt(w2 - 0.25);
      auto D = [nu](double t) { return std::exp(-t / 2) * std::sin(nu * t) / nu; };
      auto Dp = [nu](double t) { return std::exp(-t / 2) * (std::cos(nu * t) - std::sin(nu * t) / (2 * nu)); };
      EXPECT_NEAR(m.c11, simpson([&](double t) { return 2 * D(t) * D(t); }, h, 1000000), 1e-11);
      EXPECT_NEAR(m.c12, simpson([&](double t) { return 2 * D(t) * Dp(t); }, h, 1000000), 1e-11);
      EXPECT_NEAR(m.c22, simpson([&](double t) { return 2 * Dp(t) * Dp(t); }, h, 1000000), 1e-11);
      // stationarity: Sigma = P Sigma P^T + C with Sigma = diag(<n>^-4, 1)
      const double s1 = 1.0 / w2;
      EXPECT_NEAR(m.p11 * m.p11 * s1 + m.p12 * m.p12 + m.c11, s1, 1e-13);
      EXPECT_NEAR(m.p11 * m.p21 * s1 + m.p12 * m.p22 + m.c12, 0.0, 1e-13);
      EXPECT_NEAR(m.p21 * m.p21 * s1 + m.p22 * m.p22 + m.c22, 1.0, 1e-13);
    }
}

TEST(Convolution, TinyStepLeavesStateUnchanged) {
  const Grid g(4, 4);
  NoiseStream s{5, 0, 0.0};
  auto st = make_convolution(ConvolutionKind::damped, g, -1.0, s);
  const auto before = st.pair;
  evolve_convolution(st, 1e-12, s);
  EXPECT_LT(snlb::testing::max_abs_diff(st.pair.position, before.position), 1e-8);
  // the velocity picks up a Brownian increment of size sqrt(dt) = 1e-6
  EXPECT_LT(snlb::testing::max_abs_diff(st.pair.velocity, before.velocity), 1e-5);
  for (auto step : {undamped_mode_step(3, 1e-12), damped_mode_step(3, 1e-12)}) {
    EXPECT_NEAR(step.p11, 1.0, 1e-8);
    EXPECT_NEAR(step.p12, 0.0, 1e-8);
    EXPECT_NEAR(step.p21, 0.0, 1e-8);
    EXPECT_NEAR(step.p22, 1.0, 1e-8);
    EXPECT_LT(step.c11 + std::abs(step.c12) + step.c22, 1e-8);
  }
  EXPECT_THROW(evolve_convolution(st, 0.0, s), std::invalid_argument);
  EXPECT_THROW(evolve_convolution(st, -0.1, s), std::invalid_argument);
}

TEST(Convolution, UndampedVarianceFromRest) {
  const Grid g(4, 4);
  RunningStats v;
  for (std::uint32_t p = 0; p < 100000; ++p) {
    NoiseStream s{17, p, 0.0};
    auto st = make_convolution(ConvolutionKind::undamped, g, 1.0, s);
    evolve_convolution(st, 1.0, s);
    v.add(std::norm(st.pair.position.mode({0, 1, 0, 0})));
  }
  const double expect = 0.5 - std::sin(2.0) / 4.0;
  EXPECT_NEAR(expect, 0.272676, 1e-6);
  EXPECT_NEAR(v.mean, expect, 3 * v.se());
}

TEST(Convolution, ManySmallStepsMatchOneLargeStep) {
  const Grid g(4, 4);
  RunningStats one_re, many_re, one_v, many_v;
  for (std::uint32_t p = 0; p < 10000; ++p) {
    auto a = make_convolution(ConvolutionKind::undamped, g, 1.0, NoiseStream{1, p, 0.0});
    evolve_convolution(a, 1.0, NoiseStream{1, p, 0.0});
    auto b = make_convolution(ConvolutionKind::undamped, g, 1.0, NoiseStream{2, p, 0.0});
    for (int j = 0; j < 20; ++j) evolve_convolution(b, 0.05, NoiseStream{2, p, 0.0});
    one_re.add(a.pair.position.mode({1, 0, 0, 0}).real());
    many_re.add(b.pair.position.mode({1, 0, 0, 0}).real());
    one_v.add(a.pair.velocity[0].real());
    many_v.add(b.pair.velocity[0].real());
  }
  EXPECT_GT(welch_p_value(one_re, many_re), 0.05);
  EXPECT_GT(variance_ratio_p_value(one_re, many_re), 0.05);
  EXPECT_GT(variance_ratio_p_value(one_v, many_v), 0.05);
}

TEST(Convolution, BaseStepCouplingIsExactComposition) {
  // dt = 4 h and four steps of h on the same path give the same state
  const Grid g(4, 4);
  NoiseStream s{9, 3, 0.025};
  auto a = make_convolution(ConvolutionKind::undamped, g, -1.0, s);
  auto b = a;
  evolve_convolution(a, 0.1, s);
  for (int j = 0; j < 4; ++j) evolve_convolution(b, 0.025, s);
  EXPECT_LT(snlb::testing::max_abs_diff(a.pair.position, b.pair.position), 1e-15);
  EXPECT_DOUBLE_EQ(a.time(), b.time());
  EXPECT_THROW(evolve_convolution(a, 0.03, s), std::invalid_argument);
}

TEST(Convolution, HermitianSymmetryAndReproducibility) {
  const Grid g(3, 6);
  NoiseStream s{77, 2, 0.0};
  auto a = make_convolution(ConvolutionKind::damped, g, -1.0, s);
  auto b = make_convolution(ConvolutionKind::damped, g, -1.0, s);
  for (int j = 0; j < 3; ++j) {
    evolve_convolution(a, 0.2, s);
    evolve_convolution(b, 0.2, s);
  }
  EXPECT_EQ(a.pair.position.coeffs().size(), b.pair.position.coeffs().size());
  EXPECT_TRUE(std::equal(a.pair.position.coeffs().begin(), a.pair.position.coeffs().end(),
                         b.pair.position.coeffs().begin()));
  EXPECT_LT(snlb::testing::hermitian_defect(a.pair.position), 1e-15);
  EXPECT_LT(snlb::testing::hermitian_defect(a.pair.velocity), 1e-15);
}

TEST(InitialMu2, MomentsAndRealZeroMode) {
  const Grid g(4, 6);
  RunningStats m0, m1, m4, v1;
  for (std::uint32_t p = 0; p < 100000; ++p) {
    const auto st = sample_initial_mu2(NoiseStream{8, p, 0.0}, g);
    ASSERT_EQ(st.position[0].imag(), 0.0);
    ASSERT_EQ(st.velocity[0].imag(), 0.0);
    m0.add(std::norm(st.position[0]));
    m1.add(std::norm(st.position.mode({0, 0, 1, 0})));
    m4.add(std::norm(st.position.mode({0, 2, 0, 0})));
    v1.add(std::norm(st.velocity.mode({1, 0, 0, 0})));
  }
  EXPECT_NEAR(m0.mean, 1.0, 3 * m0.se());
  EXPECT_NEAR(m1.mean, 0.25, 3 * m1.se());
  EXPECT_NEAR(m4.mean, 1.0 / 25.0, 3 * m4.se());
  EXPECT_NEAR(v1.mean, 1.0, 3 * v1.se());
}

TEST(InitialMu2, RoughSupport) {
  RunningStats h0_small, h0_big, hm_small, hm_big;
  for (std::uint32_t p = 0; p < 100; ++p) {
    const auto a = sample_initial_mu2(NoiseStream{4, p, 0.0}, Grid(4, 8)).position;
    const auto b = sample_initial_mu2(NoiseStream{4, p, 0.0}, Grid(4, 16)).position;
    h0_small.add(sobolev_norm(a, 0.0));
    h0_big.add(sobolev_norm(b, 0.0));
    hm_small.add(sobolev_norm(a, -0.25));
    hm_big.add(sobolev_norm(b, -0.25));
  }
  EXPECT_GT(h0_big.mean, h0_small.mean);
  EXPECT_TRUE(std::isfinite(hm_big.mean));
  EXPECT_LT(hm_big.mean / hm_small.mean, h0_big.mean / h0_small.mean);
}

TEST(WickTrajectory, FirstPowerAndTimeZero) {
  const Grid g(4, 6);
  const auto data = sample_wick_trajectory(ConvolutionKind::undamped, 3, {0.0, 0.5}, NoiseStream{3, 0, 0.0}, g);
  ASSERT_EQ(data.xi.size(), 2u);
  for (int l = 1; l <= 3; ++l)
    for (double v : data.xi[0].powers[l].values) EXPECT_EQ(v, 0.0);
  const auto raw = inverse_transform(resample(data.psi[1], data.xi[1].work));
  for (std::size_t i = 0; i < raw.size(); ++i) EXPECT_NEAR(data.xi[1].powers[1].values[i], raw.values[i], 1e-14);
  EXPECT_THROW(sample_wick_trajectory(ConvolutionKind::undamped, 3, {0.5, 0.5}, NoiseStream{}, g),
               std::invalid_argument);
}

TEST(WickTrajectory, SquareIsMeanZero) {
  // spatial mean of :Psi_N^2:(1, .) for N = 8
  const Grid g(4, 18);
  RunningStats mean_sq;
  for (std::uint32_t p = 0; p < 1000; ++p) {
    const auto data = sample_wick_trajectory(ConvolutionKind::undamped, 2, {1.0}, NoiseStream{12, p, 0.0}, g, 8.0);
    double acc = 0.0;
    for (double v : data.xi[0].powers[2].values) acc += v;
    mean_sq.add(acc * data.xi[0].work.cell_volume());
  }
  EXPECT_NEAR(mean_sq.mean, 0.0, 3 * mean_sq.se());
}

TEST(WickTrajectory, PointValueOfSquareIsMeanZero) {
  const Grid g(4, 6);
  RunningStats at_point;
  for (std::uint32_t p = 0; p < 10000; ++p) {
    const auto data = sample_wick_trajectory(ConvolutionKind::undamped, 2, {1.0}, NoiseStream{13, p, 0.0}, g, 2.0);
    at_point.add(data.xi[0].powers[2].values[17]);
  }
  EXPECT_NEAR(at_point.mean, 0.0, 3 * at_point.se());
}

TEST(WickCauchy, ExactOracleMatchesDirectPairSum) {
  // 2D, t = 1, N = 1 and 2: sum over all mode pairs inside the ball of radius 2N
  const double t = 1.0;
  for (double N : {1.0, 2.0}) {
    const Grid g(2, 12);
    WickCauchyProbe p;
    p.Ns = {N};
    p.t = t;
    p.samples = 2;
    const auto rows = wick_cauchy_probe(g, p);
    const int R = static_cast<int>(2 * N);
    std::vector<std::pair<Wavevector, double>> big, small;
    for (int a = -R; a <= R; ++a)
      for (int b = -R; b <= R; ++b) {
        const int n2 = a * a + b * b;
        const double c = undamped_mode_variance(n2, t);
        if (n2 <= 4 * N * N + 1e-9) big.push_back({{a, b, 0, 0}, c});
        if (n2 <= N * N + 1e-9) small.push_back({{a, b, 0, 0}, c});
      }
    auto pair_sum = [](const auto& set) {
      double acc = 0.0;
      for (const auto& [n1, c1] : set)
        for (const auto& [n2, c2] : set) {
          const int m0 = n1[0] + n2[0], m1 = n1[1] + n2[1];
          acc += std::pow(1.0 + m0 * m0 + m1 * m1, -0.25) * c1 * c2;
        }
      return acc;
    };
    const double oracle = 2.0 * (pair_sum(big) - pair_sum(small));
    EXPECT_NEAR(rows[0].exact_mean_sq, oracle, 1e-12 * oracle) << N;
  }
}

TEST(WickCauchy, MonteCarloMatchesExactAndDecreases) {
  const Grid g(2, 36);
  WickCauchyProbe p;
  p.Ns = {2, 4, 8};
  p.samples = 2000;
  const auto rows = wick_cauchy_probe(g, p);
  for (std::size_t j = 0; j < rows.size(); ++j) {
    EXPECT_NEAR(rows[j].mean_sq, rows[j].exact_mean_sq, 0.05 * rows[j].exact_mean_sq) << rows[j].N;
    if (j > 0) EXPECT_LT(rows[j].mean_norm, rows[j - 1].mean_norm);
  }
}

TEST(WickCauchy, RejectsCutoffOffGrid) {
  WickCauchyProbe p;
  p.Ns = {4, 8};
  EXPECT_THROW(wick_cauchy_probe(Grid(2, 24), p), std::invalid_argument);
}
