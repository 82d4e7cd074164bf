#include "snlb/norms.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "snlb/fft.hpp"
#include "snlb/multiplier.hpp"

namespace snlb {

double sobolev_norm_sq(const SpectralField& f, double s) {
  double acc = 0.0;
  for_each_mode(f.grid(), [&](const ModeRef& m) {
    if (m.weight == 0) return;
    acc += m.weight * std::pow(1.0 + m.norm2, s) * std::norm(f[m.index]);
  });
  return acc;
}

double sobolev_norm(const SpectralField& f, double s) { return std::sqrt(sobolev_norm_sq(f, s)); }

double sobolev_inner(const SpectralField& a, const SpectralField& b, double s) {
  if (a.grid() != b.grid()) throw std::invalid_argument("sobolev_inner: grids differ");
  double acc = 0.0;
  for_each_mode(a.grid(), [&](const ModeRef& m) {
    if (m.weight == 0) return;
    acc += m.weight * std::pow(1.0 + m.norm2, s) * std::real(a[m.index] * std::conj(b[m.index]));
  });
  return acc;
}

double lebesgue_norm(const PhysicalField& f, double p) {
  if (!(p >= 1.0)) throw std::invalid_argument("lebesgue_norm needs p >= 1");
  if (std::isinf(p)) {
    double mx = 0.0;
    for (double v : f.values) mx = std::max(mx, std::abs(v));
    return mx;
  }
  double acc = 0.0;
  if (p == 2.0) {
    for (double v : f.values) acc += v * v;
  } else {
    for (double v : f.values) acc += std::pow(std::abs(v), p);
  }
  return std::pow(acc * f.grid.cell_volume(), 1.0 / p);
}

double lebesgue_norm(const SpectralField& f, double p, double sigma) {
  if (sigma == 0.0) return lebesgue_norm(inverse_transform(f), p);
  return lebesgue_norm(inverse_transform(apply_multiplier(f, MultiplierSpec::bessel(sigma))), p);
}

double pair_norm(const PairState& st, double s_prime) {
  return std::sqrt(sobolev_norm_sq(st.position, s_prime) + sobolev_norm_sq(st.velocity, s_prime - 2.0));
}

double shell_power(const SpectralField& f, int n2) {
  double acc = 0.0;
  int count = 0;
  for_each_mode(f.grid(), [&](const ModeRef& m) {
    if (m.weight == 0 || m.norm2 != n2) return;
    acc += m.weight * std::norm(f[m.index]);
    count += m.weight;
  });
  return count ? acc / count : 0.0;
}

double band_energy(const SpectralField& f, int n2max) {
  double acc = 0.0;
  for_each_mode(f.grid(), [&](const ModeRef& m) {
    if (m.weight == 0 || m.norm2 > n2max) return;
    acc += m.weight * std::norm(f[m.index]);
  });
  return acc;
}

}  // namespace snlb
