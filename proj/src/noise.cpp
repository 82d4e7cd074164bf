#include "snlb/noise.hpp"

#include <cmath>

#include "snlb/fft.hpp"
#include "snlb/norms.hpp"
#include "snlb/stats.hpp"
#include "snlb/product.hpp"
#include "snlb/variance.hpp"

namespace snlb {
namespace {

void cholesky(ModeStep& m) {
  m.l11 = std::sqrt(std::max(m.c11, 0.0));
  m.l21 = m.l11 > 0.0 ? m.c12 / m.l11 : 0.0;
  m.l22 = std::sqrt(std::max(m.c22 - m.l21 * m.l21, 0.0));
}

std::vector<ModeStep> step_table(ConvolutionKind kind, const Grid& g, double h) {
  const int B = g.max_mode();
  std::vector<ModeStep> t(static_cast<std::size_t>(g.dim() * B * B + 1));
  for (std::size_t n2 = 0; n2 < t.size(); ++n2)
    t[n2] = kind == ConvolutionKind::undamped ? undamped_mode_step(static_cast<int>(n2), h)
                                              : damped_mode_step(static_cast<int>(n2), h);
  return t;
}

void exact_substep(ConvolutionState& st, const std::vector<ModeStep>& table, const KeyedNormal& rng,
                   std::uint64_t key_step, std::uint32_t path) {
  const int d = st.grid().dim();
  auto& a = st.pair.position;
  auto& b = st.pair.velocity;
  for_each_mode(st.grid(), [&](const ModeRef& m) {
    if (m.weight == 0 || !st.active(m.norm2)) return;
    const ModeStep& s = table[static_cast<std::size_t>(m.norm2)];
    const cplx z1 = rng.complex_normal(m.n, d, key_step, path, Purpose::convolution, 0);
    const cplx z2 = rng.complex_normal(m.n, d, key_step, path, Purpose::convolution, 1);
    const cplx a0 = a[m.index], b0 = b[m.index];
    a[m.index] = s.p11 * a0 + s.p12 * b0 + s.l11 * z1;
    b[m.index] = s.p21 * a0 + s.p22 * b0 + s.l21 * z1 + s.l22 * z2;
  });
}

}  // namespace

ModeStep undamped_mode_step(int n2, double h) {
  ModeStep m{};
  if (n2 == 0) {
    m.p11 = 1.0, m.p12 = h, m.p21 = 0.0, m.p22 = 1.0;
    m.c11 = h * h * h / 3.0, m.c12 = h * h / 2.0, m.c22 = h;
  } else {
    const double w = n2;
    const double c = std::cos(w * h), s = std::sin(w * h);
    m.p11 = c, m.p12 = s / w, m.p21 = -w * s, m.p22 = c;
    m.c11 = undamped_mode_variance(w, h);
    m.c12 = s * s / (2.0 * w * w);
    m.c22 = h / 2.0 + std::sin(2.0 * w * h) / (4.0 * w);
  }
  cholesky(m);
  return m;
}

ModeStep damped_mode_step(int n2, double h) {
  // a'' + a' + <n>^4 a = sqrt(2) beta'; impulse response D(t) = e^{-t/2} sin(nu t)/nu
  ModeStep m{};
  const double w2 = (1.0 + n2) * (1.0 + n2);
  const double nu = std::sqrt(w2 - 0.25);
  const double e = std::exp(-h / 2.0);
  const double c = std::cos(nu * h), s = std::sin(nu * h);
  const double D = e * s / nu;
  const double Dp = e * (c - s / (2.0 * nu));
  m.p11 = Dp + D, m.p12 = D, m.p21 = -w2 * D, m.p22 = Dp;
  // J = int_0^h e^{(-1 + 2 i nu) tau} dtau
  const cplx z{-1.0, 2.0 * nu};
  const cplx J = (std::exp(z * h) - 1.0) / z;
  const double one_m_e = -std::expm1(-h);
  const double inv4nu2 = 1.0 / (4.0 * nu * nu);
  m.c11 = (one_m_e - J.real()) / (nu * nu);
  m.c12 = D * D;
  m.c22 = one_m_e * (1.0 + inv4nu2) + J.real() * (1.0 - inv4nu2) - J.imag() / nu;
  cholesky(m);
  return m;
}

PairState sample_initial_mu2(const NoiseStream& stream, const Grid& g, double cutoff) {
  PairState st(g, 0.0);
  const KeyedNormal rng = stream.normal();
  for_each_mode(g, [&](const ModeRef& m) {
    if (m.weight == 0) return;
    if (cutoff >= 0.0 && m.norm2 > cutoff * cutoff + 1e-9) return;
    const double w = 1.0 + m.norm2;
    st.position[m.index] = rng.complex_normal(m.n, g.dim(), 0, stream.path, Purpose::initial_position, 0) / w;
    st.velocity[m.index] = rng.complex_normal(m.n, g.dim(), 0, stream.path, Purpose::initial_velocity, 0);
  });
  return st;
}

ConvolutionState make_convolution(ConvolutionKind kind, const Grid& g, double cutoff, const NoiseStream& stream) {
  ConvolutionState st;
  st.kind = kind;
  st.cutoff = cutoff;
  st.pair = kind == ConvolutionKind::damped ? sample_initial_mu2(stream, g, cutoff) : PairState(g, 0.0);
  return st;
}

void evolve_convolution(ConvolutionState& st, double dt, const NoiseStream& stream) {
  if (!(dt > 0.0)) throw std::invalid_argument("evolve_convolution: dt must be positive");
  const KeyedNormal rng = stream.normal();
  if (stream.base_step <= 0.0) {
    exact_substep(st, step_table(st.kind, st.grid(), dt), rng, st.steps, stream.path);
    ++st.steps;
    st.pair.time += dt;
    return;
  }
  const double h = stream.base_step;
  const double r_real = dt / h, j_real = st.time() / h;
  const auto r = static_cast<std::int64_t>(std::llround(r_real));
  const auto j0 = static_cast<std::int64_t>(std::llround(j_real));
  if (r < 1 || std::abs(r_real - r) > 1e-6 || std::abs(j_real - j0) > 1e-6)
    throw std::invalid_argument("evolve_convolution: step " + std::to_string(dt) + " at t=" +
                                std::to_string(st.time()) + " is not aligned to base step " + std::to_string(h));
  // one-entry cache: consecutive calls nearly always share the base step
  thread_local struct {
    ConvolutionKind kind = ConvolutionKind::undamped;
    int max_n2 = -1;
    double h = 0.0;
    std::vector<ModeStep> table;
  } cache;
  const int max_n2 = st.grid().dim() * st.grid().max_mode() * st.grid().max_mode();
  if (cache.kind != st.kind || cache.max_n2 != max_n2 || cache.h != h) {
    cache.table = step_table(st.kind, st.grid(), h);
    cache.kind = st.kind, cache.max_n2 = max_n2, cache.h = h;
  }
  const auto& table = cache.table;
  for (std::int64_t i = 0; i < r; ++i) exact_substep(st, table, rng, static_cast<std::uint64_t>(j0 + i), stream.path);
  st.steps += static_cast<std::uint64_t>(r);
  st.pair.time = static_cast<double>(j0 + r) * h;
}

double convolution_variance(ConvolutionKind kind, const Grid& g, double cutoff, double t) {
  const double N = cutoff < 0.0 ? std::sqrt(static_cast<double>(g.dim())) * g.max_mode() + 0.5 : cutoff;
  auto& table = VarianceTable::global();
  if (kind == ConvolutionKind::damped) return table.get(VarianceKind::alpha, N, 0.0, g.dim(), g.max_mode());
  return table.get(VarianceKind::undamped, N, t, g.dim(), g.max_mode());
}

Grid wick_work_grid(const Grid& g, int k, int band) {
  return Grid(g.dim(), work_points(k, band, g.max_mode()), g.pad_factor());
}

EnhancedData sample_wick_trajectory(ConvolutionKind kind, int k, const std::vector<double>& times,
                                    const NoiseStream& stream, const Grid& g, double cutoff) {
  if (k < 0 || k > 5) throw std::invalid_argument("sample_wick_trajectory: k must be in 0..5");
  for (std::size_t i = 1; i < times.size(); ++i)
    if (!(times[i] > times[i - 1])) throw std::invalid_argument("sample_wick_trajectory: times must increase");
  EnhancedData out;
  out.kind = kind;
  out.k = k;
  out.times = times;
  ConvolutionWickSource src(kind, g, cutoff, k, stream);
  for (double t : times) {
    out.xi.push_back(src.at(t));
    out.psi.push_back(*src.psi());
  }
  return out;
}

ConvolutionWickSource::ConvolutionWickSource(ConvolutionKind kind, const Grid& g, double cutoff, int k,
                                             const NoiseStream& stream)
    : state_(make_convolution(kind, g, cutoff, stream)),
      stream_(stream),
      k_(k),
      band_(cutoff < 0.0 ? g.max_mode() : std::min(g.max_mode(), static_cast<int>(std::floor(cutoff + 1e-9)))) {
  // the remainder multiplying these powers carries every mode of g
  work_ = wick_work_grid(g, std::max(k, 1), g.max_mode());
}

const WickPowers& ConvolutionWickSource::at(double t) {
  if (cached_ && std::abs(cached_->time - t) < 1e-12) return *cached_;
  if (t < state_.time() - 1e-12)
    throw std::invalid_argument("ConvolutionWickSource: time " + std::to_string(t) + " precedes current " +
                                std::to_string(state_.time()));
  if (t > state_.time() + 1e-12) evolve_convolution(state_, t - state_.time(), stream_);
  const double sigma = convolution_variance(state_.kind, state_.grid(), state_.cutoff, t);
  cached_ = wick_powers(to_physical(state_.pair.position, work_), sigma, k_, band_, t);
  return *cached_;
}

namespace {

SpectralField ball_part(const SpectralField& f, double N) {
  SpectralField out = f;
  for_each_mode(f.grid(), [&](const ModeRef& m) {
    if (m.norm2 > N * N + 1e-9) out[m.index] = 0.0;
  });
  return out;
}

// sum_m <m>^{2s} |c(m)|^2 over the full spectrum of a work-grid field
double weighted_mass(const SpectralField& f, double s) { return sobolev_norm_sq(f, s); }

}  // namespace

std::vector<WickCauchyRow> wick_cauchy_probe(const Grid& g, const WickCauchyProbe& probe) {
  if (probe.Ns.empty()) throw std::invalid_argument("Wick Cauchy probe needs at least one N");
  if (probe.samples < 2) throw std::invalid_argument("Wick Cauchy probe needs at least 2 samples");
  if (!(probe.t > 0.0)) throw std::invalid_argument("Wick Cauchy probe needs t > 0");
  double top = 0.0;
  for (double N : probe.Ns) {
    if (!(N > 0.0)) throw std::invalid_argument("Wick Cauchy probe needs N > 0");
    top = std::max(top, 2.0 * N);
  }
  if (top > g.max_mode())
    throw std::invalid_argument("cutoff 2N = " + std::to_string(top) + " does not fit on a grid with max mode " +
                                std::to_string(g.max_mode()));

  std::vector<WickCauchyRow> rows(probe.Ns.size());
  std::vector<Grid> works;
  for (std::size_t j = 0; j < probe.Ns.size(); ++j) {
    const int band = static_cast<int>(std::floor(2.0 * probe.Ns[j] + 1e-9));
    // a product of two band-B fields has band 2B; M > 4B keeps it alias free
    works.emplace_back(g.dim(), fft_friendly(4 * band + 2));
  }

  // exact oracle: autoconvolutions of the per-mode variance profiles
  for (std::size_t j = 0; j < probe.Ns.size(); ++j) {
    const Grid& w = works[j];
    auto autoconv = [&](double N) {
      SpectralField c(w);
      for_each_mode(w, [&](const ModeRef& m) {
        if (m.weight == 0 || m.norm2 > N * N + 1e-9) return;
        c[m.index] = undamped_mode_variance(m.norm2, probe.t);
      });
      PhysicalField p = to_physical(c, w);
      for (auto& x : p.values) x *= x;
      return forward_transform(p);
    };
    SpectralField diff = autoconv(2.0 * probe.Ns[j]);
    diff -= autoconv(probe.Ns[j]);
    // diff holds sum_{n1+n2=m} (C C)(n1, n2) >= 0; weight and sum over the full spectrum
    double acc = 0.0;
    for_each_mode(w, [&](const ModeRef& m) {
      if (m.weight == 0) return;
      acc += m.weight * std::pow(1.0 + m.norm2, probe.sobolev) * diff[m.index].real();
    });
    rows[j].exact_mean_sq = 2.0 * acc;
  }

  std::vector<RunningStats> norm_stats(probe.Ns.size()), sq_stats(probe.Ns.size());
  for (std::size_t i = 0; i < probe.samples; ++i) {
    const NoiseStream stream{probe.seed, static_cast<std::uint32_t>(i), 0.0};
    ConvolutionState st = make_convolution(ConvolutionKind::undamped, g, top, stream);
    evolve_convolution(st, probe.t, stream);
    const SpectralField& psi = st.pair.position;
    for (std::size_t j = 0; j < probe.Ns.size(); ++j) {
      const double N = probe.Ns[j];
      const SpectralField lo = ball_part(psi, N);
      const SpectralField hi = ball_part(psi, 2.0 * N);
      PhysicalField a = to_physical(hi - lo, works[j]);
      const PhysicalField b = to_physical(hi + lo, works[j]);
      const double shift = convolution_variance(ConvolutionKind::undamped, g, 2.0 * N, probe.t) -
                           convolution_variance(ConvolutionKind::undamped, g, N, probe.t);
      for (std::size_t x = 0; x < a.values.size(); ++x) a.values[x] = a.values[x] * b.values[x] - shift;
      const double sq = weighted_mass(forward_transform(a), probe.sobolev);
      sq_stats[j].add(sq);
      norm_stats[j].add(std::sqrt(sq));
    }
  }
  for (std::size_t j = 0; j < probe.Ns.size(); ++j) {
    rows[j].N = probe.Ns[j];
    rows[j].mean_norm = norm_stats[j].mean;
    rows[j].se = norm_stats[j].se();
    rows[j].mean_sq = sq_stats[j].mean;
  }
  return rows;
}

}  // namespace snlb
