#include "snlb/wick.hpp"

#include <algorithm>
#include <array>
#include <cstdint>
#include <utility>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "snlb/fft.hpp"
#include "snlb/product.hpp"

namespace snlb {

PhysicalField wick_power(const PhysicalField& psi, double sigma, int l) {
  PhysicalField out(psi.grid);
  for (std::size_t i = 0; i < psi.size(); ++i) out.values[i] = hermite(l, psi.values[i], sigma);
  return out;
}

WickPowers wick_powers(const PhysicalField& psi, double sigma, int k, int band, double time) {
  WickPowers w;
  w.work = psi.grid;
  w.time = time;
  w.variance = sigma;
  w.band = band;
  w.powers.assign(static_cast<std::size_t>(k) + 1, PhysicalField(psi.grid));
  std::array<double, 16> h{};
  for (std::size_t i = 0; i < psi.size(); ++i) {
    hermite_all(k, psi.values[i], sigma, h.data());
    for (int l = 0; l <= k; ++l) w.powers[l].values[i] = h[l];
  }
  return w;
}

WickPowers zero_wick_powers(const Grid& work, int k, double time) {
  WickPowers w;
  w.work = work;
  w.time = time;
  w.powers.assign(static_cast<std::size_t>(k) + 1, PhysicalField(work, 0.0));
  w.powers[0] = PhysicalField(work, 1.0);
  return w;
}

SpectralField renormalized_nonlinearity(const SpectralField& v, const WickPowers& xi, int k) {
  if (xi.order() < k) throw std::invalid_argument("renormalized_nonlinearity: Wick powers up to order " +
                                                  std::to_string(k) + " required");
  const Grid& work = xi.work;
  const int bv = spectral_band(v);
  const int bout = v.grid().max_mode();
  const int need = k * std::max(bv, xi.band) + bout;
  if (work.points() <= need) {
    const int pad = (need + v.grid().points()) / v.grid().points();
    throw DealiasingError("work grid " + std::to_string(work.points()) + " too small for degree " +
                              std::to_string(k) + " nonlinearity: need more than " + std::to_string(need) +
                              " points per axis (pad_factor " + std::to_string(pad) + ")",
                          pad);
  }
  const PhysicalField vx = to_physical(v, work);
  PhysicalField acc(work);
  std::array<double, 16> c{};
  for (int l = 0; l <= k; ++l) c[l] = binomial(k, l);
  for (std::size_t i = 0; i < vx.size(); ++i) {
    // sum_l C(k,l) Xi_l v^{k-l}, Horner in v from l = 0
    double s = 0.0;
    for (int l = 0; l <= k; ++l) s = s * vx.values[i] + c[l] * xi.powers[l].values[i];
    acc.values[i] = s;
  }
  return from_physical(acc, v.grid());
}

SpectralField hermite_of_field(const SpectralField& u, double sigma, int k) {
  const int band = std::max(spectral_band(u), 1);
  const Grid work(u.grid().dim(), work_points(k, band, u.grid().max_mode()));
  PhysicalField x = to_physical(u, work);
  for (double& val : x.values) val = hermite(k, val, sigma);
  return from_physical(x, u.grid());
}

namespace {

bool within(int n2, double N) { return n2 <= N * N + 1e-9; }

// 16 bits per axis with offset 2^15, so packed keys add like wavevectors
// (key(a + b) = key(a) + key(b) - key(0)) as long as no axis overflows
std::uint64_t pack(const Wavevector& n, int d) {
  std::uint64_t key = 0;
  for (int i = 0; i < d; ++i) key |= static_cast<std::uint64_t>(n[i] + 32768) << (16 * i);
  return key;
}

using Modes = std::vector<std::pair<std::uint64_t, cplx>>;

/// Sorts by key and merges duplicates.
void canonicalize(Modes& m) {
  std::sort(m.begin(), m.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
  std::size_t w = 0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (w > 0 && m[w - 1].first == m[i].first)
      m[w - 1].second += m[i].second;
    else
      m[w++] = m[i];
  }
  m.resize(w);
}

cplx lookup(const Modes& m, std::uint64_t key) {
  const auto it = std::lower_bound(m.begin(), m.end(), key, [](const auto& x, std::uint64_t k) { return x.first < k; });
  return it != m.end() && it->first == key ? it->second : cplx(0.0);
}

}  // namespace

namespace {

std::vector<ModeRef> ball_modes(const Grid& g, double N) {
  std::vector<ModeRef> ball;
  for_each_mode(g, [&](const ModeRef& m) {
    if (m.weight != 0 && within(m.norm2, N)) ball.push_back(m);
  });
  return ball;
}

/// Direct route is used for balls of at most `limit` lattice points.
bool use_direct(const std::vector<ModeRef>& ball, int k, double N, int limit) {
  std::size_t lattice = 0;
  for (const ModeRef& m : ball) lattice += m.weight;
  const double reach = std::max(k, 2) * std::floor(N + 1e-9);
  return static_cast<int>(lattice) <= limit && reach <= 16000.0;
}

/// H_k(P_N u; sigma) at the wavevectors `outputs`, by convolving the mode list of the ball.
std::vector<cplx> direct_hermite(const SpectralField& u, const std::vector<ModeRef>& ball, double sigma, int k,
                                 const std::vector<Wavevector>& outputs) {
  const int d = u.grid().dim();
  // monomial coefficients of H_k(x; sigma) from H_{l+1} = x H_l - l sigma H_{l-1}
  std::vector<double> prev{1.0}, cur{0.0, 1.0};
  for (int l = 1; l < k; ++l) {
    std::vector<double> next(static_cast<std::size_t>(l) + 2, 0.0);
    for (std::size_t j = 0; j < cur.size(); ++j) next[j + 1] += cur[j];
    for (std::size_t j = 0; j < prev.size(); ++j) next[j] -= l * sigma * prev[j];
    prev = std::move(cur);
    cur = std::move(next);
  }
  // the ball on both halves of the spectrum
  Modes low;
  for (const ModeRef& m : ball) {
    low.emplace_back(pack(m.n, d), u[m.index]);
    if (m.weight == 2) {
      Wavevector neg{};
      for (int i = 0; i < d; ++i) neg[i] = -m.n[i];
      low.emplace_back(pack(neg, d), std::conj(u[m.index]));
    }
  }
  const std::uint64_t origin = pack(Wavevector{}, d);
  std::vector<Modes> pow{Modes{{origin, cplx(1.0)}}};
  for (int j = 1; j < k; ++j) {
    Modes next;
    next.reserve(pow.back().size() * low.size());
    for (const auto& [a, ca] : pow.back())
      for (const auto& [b, cb] : low) next.emplace_back(a + b - origin, ca * cb);
    canonicalize(next);
    pow.push_back(std::move(next));
  }
  std::vector<cplx> out;
  out.reserve(outputs.size());
  for (const Wavevector& n : outputs) {
    const std::uint64_t mk = pack(n, d);
    cplx acc = 0.0;
    for (int j = 0; j < k; ++j)
      if (cur[static_cast<std::size_t>(j)] != 0.0)
        acc += cur[static_cast<std::size_t>(j)] * lookup(pow[static_cast<std::size_t>(j)], mk);
    cplx top = 0.0;
    for (const auto& [b, cb] : low) top += lookup(pow.back(), mk - b + origin) * cb;
    out.push_back(acc + cur.back() * top);
  }
  return out;
}

SpectralField low_part(const SpectralField& u, double N) {
  SpectralField p = u;
  for_each_mode(u.grid(), [&](const ModeRef& m) {
    if (!within(m.norm2, N)) p[m.index] = 0.0;
  });
  return p;
}

}  // namespace

SpectralField projected_hermite(const SpectralField& u, double sigma, int k, double N, int direct_limit) {
  return projected_hermite(u, ball_modes(u.grid(), N), sigma, k, N, direct_limit);
}

SpectralField projected_hermite(const SpectralField& u, const std::vector<ModeRef>& ball, double sigma, int k, double N,
                                int direct_limit) {
  if (k < 1) throw std::invalid_argument("projected_hermite needs k >= 1");
  SpectralField out(u.grid());
  if (!use_direct(ball, k, N, direct_limit)) {
    const SpectralField f = hermite_of_field(low_part(u, N), sigma, k);
    for (const ModeRef& m : ball) out[m.index] = f[m.index];
    return out;
  }
  std::vector<Wavevector> outputs;
  for (const ModeRef& m : ball) outputs.push_back(m.n);
  const std::vector<cplx> h = direct_hermite(u, ball, sigma, k, outputs);
  for (std::size_t i = 0; i < ball.size(); ++i) out[ball[i].index] = h[i];
  return out;
}

double integral_of_projected_hermite(const SpectralField& u, double sigma, int q, double N, int direct_limit) {
  if (q < 1) throw std::invalid_argument("integral_of_projected_hermite needs q >= 1");
  const std::vector<ModeRef> ball = ball_modes(u.grid(), N);
  if (!use_direct(ball, q, N, direct_limit)) return integral_of_hermite(low_part(u, N), sigma, q);
  // the integral over the unit torus is the zero mode
  return direct_hermite(u, ball, sigma, q, {Wavevector{}})[0].real();
}

double integral_of_hermite(const SpectralField& u, double sigma, int q) {
  const int band = std::max(spectral_band(u), 1);
  const Grid work(u.grid().dim(), work_points(q, band, 0));
  const PhysicalField x = to_physical(u, work);
  double acc = 0.0;
  for (double val : x.values) acc += hermite(q, val, sigma);
  return acc * work.cell_volume();
}

}  // namespace snlb
