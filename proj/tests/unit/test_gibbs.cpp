#include <gtest/gtest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <numbers>

#include "snlb/gibbs.hpp"
#include "snlb/hermite.hpp"
#include "snlb/noise.hpp"
#include "snlb/norms.hpp"
#include "snlb/stats.hpp"
#include "test_util.hpp"

using namespace snlb;

namespace {

SpectralField project(const SpectralField& u, double N) {
  SpectralField out(u.grid());
  for_each_mode(u.grid(), [&](const ModeRef& m) {
    if (m.norm2 <= N * N + 1e-9) out[m.index] = u[m.index];
  });
  return out;
}

// u(x) by direct summation over the full coefficient map
double point_value(const std::map<Wavevector, cplx>& c, const std::array<double, 4>& x, int d) {
  cplx acc{0.0, 0.0};
  for (const auto& [n, v] : c) {
    double ph = 0.0;
    for (int i = 0; i < d; ++i) ph += n[i] * x[i];
    acc += v * std::polar(1.0, 2.0 * std::numbers::pi * ph);
  }
  return acc.real();
}

// Jarque-Bera normality p-value
double normality_p_value(const std::vector<double>& xs) {
  const double n = static_cast<double>(xs.size());
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= n;
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double x : xs) {
    const double d = x - mean;
    m2 += d * d;
    m3 += d * d * d;
    m4 += d * d * d * d;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;
  const double skew = m3 / std::pow(m2, 1.5), kurt = m4 / (m2 * m2);
  const double jb = n / 6.0 * (skew * skew + 0.25 * (kurt - 3.0) * (kurt - 3.0));
  return boost::math::cdf(boost::math::complement(boost::math::chi_squared(2.0), jb));
}

// mean and batch-means standard error for a correlated chain
std::pair<double, double> batch_mean(const std::vector<double>& xs, int batches = 20) {
  const std::size_t per = xs.size() / batches;
  RunningStats b;
  for (int i = 0; i < batches; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < per; ++j) acc += xs[i * per + j];
    b.add(acc / per);
  }
  return {b.mean, b.se()};
}

}  // namespace

TEST(Potential, ZeroFieldGivesConstantTerm) {
  const Grid g(4, 6);
  const SpectralField u(g);
  for (double N : {0.0, 1.0, 2.0}) {
    const double a = grid_alpha(g, N);
    EXPECT_NEAR(compute_RN(u, N, 3), 0.75 * a * a, 1e-12);
  }
  EXPECT_DOUBLE_EQ(grid_alpha(g, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(grid_alpha(g, 1.0), 1.0 + 8.0 / 4.0);
}

TEST(Potential, ConstantField) {
  const Grid g(4, 6);
  SpectralField u(g);
  const double c = 0.7;
  u.set_mode({0, 0, 0, 0}, c);
  for (double N : {0.0, 1.0, 2.0}) {
    const double a = grid_alpha(g, N);
    EXPECT_NEAR(compute_RN(u, N, 3), 0.25 * (std::pow(c, 4) - 6 * a * c * c + 3 * a * a), 1e-12);
  }
}

TEST(Potential, MatchesPointwiseQuadratureOn8Grid) {
  const Grid g(4, 8);
  const double N = std::sqrt(2.0);  // band 1 per axis, quartic band 4 < 8
  const SpectralField u = snlb::testing::random_field(g, 3, 77, 1.0);
  const auto c = snlb::testing::full_map(project(u, N));
  const double a = grid_alpha(g, N);
  double acc = 0.0;
  std::array<double, 4> x{};
  for (int i0 = 0; i0 < 8; ++i0)
    for (int i1 = 0; i1 < 8; ++i1)
      for (int i2 = 0; i2 < 8; ++i2)
        for (int i3 = 0; i3 < 8; ++i3) {
          x = {i0 / 8.0, i1 / 8.0, i2 / 8.0, i3 / 8.0};
          const double v = point_value(c, x, 4);
          acc += v * v * v * v - 6 * a * v * v + 3 * a * a;
        }
  const double oracle = acc / 4096.0 / 4.0;
  EXPECT_NEAR(compute_RN(u, N, 3), oracle, 1e-9 * std::max(1.0, std::abs(oracle)));
}

TEST(GibbsSpecTest, Validation) {
  GibbsSpec s;
  s.k = 4;
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s.k = 3;
  s.N = -1;
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s.N = 1;
  s.thinning = 0;
  EXPECT_THROW(s.validate(), std::invalid_argument);
}

TEST(Sampler, UnweightedGivesMu2Moments) {
  const Grid g(4, 6);
  GibbsSpec spec;
  spec.weighted = false;
  const auto ens = sample_rhoN(spec, NoiseStream{5, 0, 0.0}, g, 2000);
  for (int n2 : {0, 1, 2}) {
    RunningStats u, v;
    for (const auto& st : ens.states) {
      u.add(shell_power(st.position, n2));
      v.add(shell_power(st.velocity, n2));
    }
    const double want = 1.0 / ((1.0 + n2) * (1.0 + n2));
    EXPECT_LT(std::abs(u.mean - want), 3 * u.se()) << n2;
    EXPECT_LT(std::abs(v.mean - 1.0), 3 * v.se()) << n2;
  }
}

class ZeroModeChain : public ::testing::TestWithParam<Sampler> {};

TEST_P(ZeroModeChain, MatchesOneDimensionalQuadrature) {
  // density exp(-x^2/2 - H_4(x; 1)/4) on the zero mode
  auto dens = [](double x) { return std::exp(-0.5 * x * x - 0.25 * hermite(4, x, 1.0)); };
  double z = 0, m2 = 0, m4 = 0;
  const double h = 1e-3;
  for (double x = -8; x <= 8; x += h) {
    const double w = dens(x) * h;
    z += w;
    m2 += w * x * x;
    m4 += w * x * x * x * x;
  }
  m2 /= z;
  m4 /= z;

  const Grid g(4, 4);
  GibbsSpec spec;
  spec.N = 0.0;
  spec.sampler = GetParam();
  spec.burn_in = 500;
  spec.thinning = 5;
  spec.pcn_beta = 0.5;
  const auto ens = sample_rhoN(spec, NoiseStream{11, 0, 0.0}, g, 8000);
  EXPECT_GT(ens.acceptance, 0.3);
  EXPECT_TRUE(ens.warning.empty());
  std::vector<double> x2, x4;
  for (const auto& st : ens.states) {
    const double x = st.position[0].real();
    x2.push_back(x * x);
    x4.push_back(x * x * x * x);
  }
  const auto [a2, s2] = batch_mean(x2);
  const auto [a4, s4] = batch_mean(x4);
  EXPECT_LT(std::abs(a2 - m2), 3 * s2) << a2 << " vs " << m2;
  EXPECT_LT(std::abs(a4 - m4), 3 * s4) << a4 << " vs " << m4;
}

INSTANTIATE_TEST_SUITE_P(Samplers, ZeroModeChain, ::testing::Values(Sampler::independence_mh, Sampler::pcn));

TEST(Sampler, VelocityIsWhiteNoiseAndHighModesIndependent) {
  const Grid g(4, 6);
  GibbsSpec spec;
  spec.N = 1.0;
  spec.burn_in = 200;
  spec.thinning = 3;
  const auto ens = sample_rhoN(spec, NoiseStream{13, 0, 0.0}, g, 2000);
  const Wavevector low{0, 0, 0, 1}, high{1, 1, 0, 0};
  std::vector<double> v0, v1;
  RunningStats sec;
  std::vector<double> a, b;
  for (const auto& st : ens.states) {
    v0.push_back(st.velocity.mode({0, 0, 0, 0}).real());
    v1.push_back(st.velocity.mode(low).real());
    sec.add(std::norm(st.velocity.mode(low)));
    a.push_back(std::norm(st.position.mode(low)));
    b.push_back(std::norm(st.position.mode(high)));
  }
  EXPECT_GT(normality_p_value(v0), 0.05);
  EXPECT_GT(normality_p_value(v1), 0.05);
  EXPECT_LT(std::abs(sec.mean - 1.0), 3 * sec.se());

  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) ma += a[i], mb += b[i];
  ma /= a.size();
  mb /= b.size();
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  const double corr = sab / std::sqrt(saa * sbb);
  EXPECT_LT(std::abs(corr), 3.0 / std::sqrt(static_cast<double>(a.size())));
}

TEST(Density, ExactVarianceMatchesQuadrupleSum) {
  const Grid g(4, 8);
  for (double N : {1.0, 2.0}) {
    std::vector<std::pair<Wavevector, double>> ball;
    const int b = static_cast<int>(N);
    for (int a0 = -b; a0 <= b; ++a0)
      for (int a1 = -b; a1 <= b; ++a1)
        for (int a2 = -b; a2 <= b; ++a2)
          for (int a3 = -b; a3 <= b; ++a3) {
            const int n2 = a0 * a0 + a1 * a1 + a2 * a2 + a3 * a3;
            if (n2 <= N * N) ball.push_back({{a0, a1, a2, a3}, 1.0 / ((1.0 + n2) * (1.0 + n2))});
          }
    std::map<Wavevector, double> w(ball.begin(), ball.end());
    double acc = 0.0;
    for (const auto& [n1, w1] : ball)
      for (const auto& [n2, w2] : ball)
        for (const auto& [n3, w3] : ball) {
          const Wavevector n4{-n1[0] - n2[0] - n3[0], -n1[1] - n2[1] - n3[1], -n1[2] - n2[2] - n3[2],
                              -n1[3] - n2[3] - n3[3]};
          const auto it = w.find(n4);
          if (it != w.end()) acc += w1 * w2 * w3 * it->second;
        }
    EXPECT_NEAR(potential_variance(g, N, 3), 24.0 / 16.0 * acc, 1e-9 * acc) << N;
  }
}

TEST(Density, ExactCauchyTrendOverFourEightSixteen) {
  const Grid g(4, 34);
  const double v4 = potential_variance(g, 4, 3), v8 = potential_variance(g, 8, 3), v16 = potential_variance(g, 16, 3);
  EXPECT_GT(v8 - v4, v16 - v8);
  EXPECT_GT(v16 - v8, 0.0);
}

TEST(Density, MonteCarloTrendMatchesExact) {
  const Grid g(4, 18);
  const auto rows = density_convergence_probe({2.0, 4.0, 8.0}, 3, 1000, NoiseStream{17, 0, 0.0}, g);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_GT(rows[0].var_diff_next, rows[1].var_diff_next);
  EXPECT_GT(rows[0].exact_var_diff_next, rows[1].exact_var_diff_next);
  EXPECT_TRUE(std::isnan(rows[2].var_diff_next));
  for (const auto& r : rows) {
    // sample variance of a (roughly) chi-square-like variable: 25% band at 10^3 samples
    EXPECT_NEAR(r.var_R / r.exact_var_R, 1.0, 0.25) << r.N;
    EXPECT_TRUE(std::isfinite(r.mean_weight));
    EXPECT_GT(r.mean_weight, 0.0);
  }
  EXPECT_NEAR(rows[0].var_diff_next / rows[0].exact_var_diff_next, 1.0, 0.25);
  EXPECT_NEAR(rows[1].var_diff_next / rows[1].exact_var_diff_next, 1.0, 0.25);
}

TEST(Density, PotentialBoundedBelow) {
  // H_4(x; a)/4 >= -3a^2/2 pointwise, so exp(-R_N) <= exp(3 a^2 / 2)
  const Grid g(4, 10);
  for (std::uint32_t i = 0; i < 50; ++i) {
    const auto st = sample_initial_mu2(NoiseStream{19, i, 0.0}, g);
    for (double N : {1.0, 2.0, 4.0}) {
      const double a = grid_alpha(g, N);
      EXPECT_GE(compute_RN(st.position, N, 3), -1.5 * a * a);
    }
  }
}

TEST(Invariance, LinearDynamicsStationary) {
  const Grid g(4, 4);
  GibbsSpec spec;
  spec.N = 1.0;
  spec.weighted = false;
  InvarianceOptions opt;
  opt.nonlinear = false;
  opt.weak_order = false;
  const auto rep = invariance_test(spec, 0.1, 0.5, 600, NoiseStream{23, 0, 0.0}, g, default_observables(), opt);
  EXPECT_TRUE(rep.all_pass);
  for (const auto& o : rep.observables) EXPECT_TRUE(o.pass) << o.name;
}

TEST(Invariance, VelocityMarginalAfterEvolution) {
  const Grid g(4, 4);
  GibbsSpec spec;
  spec.N = 1.0;
  spec.burn_in = 200;
  spec.thinning = 3;
  const auto ens = sample_rhoN(spec, NoiseStream{29, 0, 0.0}, g, 600);
  IntegratorConfig cfg;
  cfg.dt = 0.05;
  RunningStats sec;
  for (std::size_t p = 0; p < ens.states.size(); ++p) {
    DampedStepper stepper(g, 3, spec.N, cfg, NoiseStream{29, static_cast<std::uint32_t>(p), 0.0});
    PairState st = ens.states[p];
    for (int j = 0; j < 20; ++j) ASSERT_TRUE(stepper.step(st));
    for (int n2 : {0, 1}) sec.add(shell_power(st.velocity, n2));
  }
  EXPECT_LT(std::abs(sec.mean - 1.0), 3 * sec.se());
}

TEST(Invariance, ReportSerializes) {
  const Grid g(4, 4);
  GibbsSpec spec;
  spec.weighted = false;
  InvarianceOptions opt;
  opt.nonlinear = false;
  opt.weak_order = false;
  const auto rep = invariance_test(spec, 0.25, 0.5, 20, NoiseStream{31, 0, 0.0}, g, {"R_N"}, opt);
  std::ostringstream js, cs;
  rep.write_json(js);
  rep.write_csv(cs);
  EXPECT_NE(js.str().find("\"R_N\""), std::string::npos);
  EXPECT_EQ(cs.str().rfind("observable,mean_before", 0), 0u);
}
