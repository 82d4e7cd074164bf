#include "snlb/product.hpp"

#include <cmath>

#include "snlb/fft.hpp"

namespace snlb {

int fft_friendly(int n) {
  n = std::max(n, 4);
  for (int m = n + (n % 2);; m += 2) {
    int r = m;
    for (int p : {2, 3, 5})
      while (r % p == 0) r /= p;
    if (r == 1) return m;
  }
}

int work_points(int degree, int band_in, int band_out) { return fft_friendly(degree * band_in + band_out + 1); }

int spectral_band(const SpectralField& f) {
  int band = 0;
  for_each_mode(f.grid(), [&](const ModeRef& m) {
    if (m.weight == 0 || f[m.index] == cplx{0.0, 0.0}) return;
    for (int i = 0; i < f.grid().dim(); ++i) band = std::max(band, std::abs(m.n[i]));
  });
  return band;
}

PhysicalField to_physical(const SpectralField& f, const Grid& work) {
  return inverse_transform(resample(f, work));
}

SpectralField from_physical(const PhysicalField& f, const Grid& target) {
  return resample(forward_transform(f), target);
}

SpectralField dealiased_product(const std::vector<const SpectralField*>& fields) {
  if (fields.empty()) throw std::invalid_argument("dealiased_product needs at least one field");
  const Grid& g = fields.front()->grid();
  for (const auto* f : fields)
    if (f->grid() != g) throw std::invalid_argument("dealiased_product: fields on different grids");
  const int k = static_cast<int>(fields.size());
  const int M = g.points();
  const int B = g.max_mode();
  const int Mw = M * g.pad_factor();
  if (Mw <= (k + 1) * B) {
    int need = g.pad_factor();
    while (need * M <= (k + 1) * B) ++need;
    throw DealiasingError("insufficient padding for degree " + std::to_string(k) + " product: pad_factor " +
                              std::to_string(g.pad_factor()) + " < required " + std::to_string(need),
                          need);
  }
  const Grid work(g.dim(), Mw, g.pad_factor());
  PhysicalField acc = to_physical(*fields.front(), work);
  for (std::size_t i = 1; i < fields.size(); ++i) {
    PhysicalField next = to_physical(*fields[i], work);
    for (std::size_t j = 0; j < acc.size(); ++j) acc.values[j] *= next.values[j];
  }
  return from_physical(acc, g);
}

SpectralField dealiased_power(const SpectralField& f, int k) {
  std::vector<const SpectralField*> v(static_cast<std::size_t>(k), &f);
  return dealiased_product(v);
}

double integral_of_power(const SpectralField& f, int q) {
  const int band = spectral_band(f);
  if (band == 0) return std::pow(f[0].real(), q);
  const Grid work(f.grid().dim(), work_points(q, band, 0));
  PhysicalField p = to_physical(f, work);
  double acc = 0.0;
  for (double v : p.values) acc += std::pow(v, q);
  return acc * work.cell_volume();
}

}  // namespace snlb
