#include "snlb/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <map>
#include <mutex>
#include <tuple>

namespace snlb {
namespace {

enum class PlanKind { r2c, c2r, c2c_fwd, c2c_bwd };

// FFTW's planner is not thread safe; execution with the new-array interface is.
// Plans are made once per (dim, M, kind) with FFTW_UNALIGNED so any buffer can be used.
class PlanCache {
 public:
  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  fftw_plan get(int dim, int M, PlanKind kind) {
    std::lock_guard lock(mu_);
    auto key = std::make_tuple(dim, M, static_cast<int>(kind));
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    int n[kMaxDim];
    std::size_t total = 1;
    for (int i = 0; i < dim; ++i) {
      n[i] = M;
      total *= static_cast<std::size_t>(M);
    }
    const std::size_t half = total / M * (M / 2 + 1);
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    fftw_plan p = nullptr;
    auto* r = static_cast<double*>(fftw_malloc(sizeof(double) * total));
    auto* c = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * std::max(total, half)));
    auto* c2 = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * total));
    switch (kind) {
      case PlanKind::r2c: p = fftw_plan_dft_r2c(dim, n, r, c, flags); break;
      case PlanKind::c2r: p = fftw_plan_dft_c2r(dim, n, c, r, flags); break;
      case PlanKind::c2c_fwd: p = fftw_plan_dft(dim, n, c, c2, FFTW_FORWARD, flags); break;
      case PlanKind::c2c_bwd: p = fftw_plan_dft(dim, n, c, c2, FFTW_BACKWARD, flags); break;
    }
    fftw_free(r);
    fftw_free(c);
    fftw_free(c2);
    if (!p) throw std::runtime_error("FFTW failed to create a plan for M=" + std::to_string(M));
    plans_.emplace(key, p);
    return p;
  }

  ~PlanCache() {
    for (auto& [k, p] : plans_) fftw_destroy_plan(p);
  }

 private:
  std::mutex mu_;
  std::map<std::tuple<int, int, int>, fftw_plan> plans_;
};

void clean_spectrum(const Grid& g, cplx* c) {
  const int d = g.dim();
  const int M = g.points();
  const int H = g.half_points();
  const std::size_t rows = g.spectral_size() / H;
  // last-axis Nyquist column
  for (std::size_t r = 0; r < rows; ++r) c[r * H + (H - 1)] = 0.0;
  // Nyquist slots on the other axes
  if (d > 1) {
    for (std::size_t idx = 0; idx < g.spectral_size(); idx += H) {
      std::size_t rest = idx / H;
      bool nyq = false;
      for (int i = d - 2; i >= 0; --i) {
        if (static_cast<int>(rest % M) == M / 2) nyq = true;
        rest /= M;
      }
      if (nyq) std::fill(c + idx, c + idx + H, cplx{0.0, 0.0});
    }
  }
  // Hermitian pairs on the last-axis zero plane
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t idx = r * H;
    Wavevector n = g.wavevector_of(idx);
    if (!g.representable(n) || !is_canonical(n, d)) continue;
    const std::size_t j = g.index_of(negate(n));
    if (j == idx) {
      c[idx] = {c[idx].real(), 0.0};
      continue;
    }
    const cplx avg = 0.5 * (c[idx] + std::conj(c[j]));
    c[idx] = avg;
    c[j] = std::conj(avg);
  }
}

}  // namespace

void forward_transform(const Grid& g, const double* in, cplx* out) {
  fftw_plan p = PlanCache::instance().get(g.dim(), g.points(), PlanKind::r2c);
  fftw_execute_dft_r2c(p, const_cast<double*>(in), reinterpret_cast<fftw_complex*>(out));
  const double scale = 1.0 / static_cast<double>(g.physical_size());
  for (std::size_t i = 0; i < g.spectral_size(); ++i) out[i] *= scale;
  clean_spectrum(g, out);
}

void inverse_transform(const Grid& g, const cplx* in, double* out) {
  fftw_plan p = PlanCache::instance().get(g.dim(), g.points(), PlanKind::c2r);
  std::vector<cplx> scratch(in, in + g.spectral_size());  // c2r overwrites its input
  fftw_execute_dft_c2r(p, reinterpret_cast<fftw_complex*>(scratch.data()), out);
}

SpectralField forward_transform(const PhysicalField& f) {
  if (f.values.size() != f.grid.physical_size())
    throw std::invalid_argument("forward_transform: expected " + std::to_string(f.grid.physical_size()) +
                                " samples, got " + std::to_string(f.values.size()));
  SpectralField out(f.grid);
  forward_transform(f.grid, f.values.data(), out.coeffs().data());
  return out;
}

PhysicalField inverse_transform(const SpectralField& f) {
  PhysicalField out(f.grid());
  inverse_transform(f.grid(), f.coeffs().data(), out.values.data());
  return out;
}

SpectralField resample(const SpectralField& f, const Grid& target) {
  const Grid& src = f.grid();
  if (src.dim() != target.dim()) throw std::invalid_argument("resample: dimension mismatch");
  if (src == target) return f;
  SpectralField out(target);
  const int B = std::min(src.max_mode(), target.max_mode());
  const Grid& small = src.points() <= target.points() ? src : target;
  for_each_mode(small, [&](const ModeRef& m) {
    if (m.weight == 0) return;
    for (int i = 0; i < src.dim(); ++i)
      if (std::abs(m.n[i]) > B) return;
    out[target.index_of(m.n)] = f[src.index_of(m.n)];
  });
  return out;
}

void complex_transform(const Grid& g, std::vector<cplx>& data, int sign) {
  if (data.size() != g.physical_size()) throw std::invalid_argument("complex_transform: size mismatch");
  fftw_plan p = PlanCache::instance().get(g.dim(), g.points(), sign < 0 ? PlanKind::c2c_fwd : PlanKind::c2c_bwd);
  std::vector<cplx> out(data.size());
  fftw_execute_dft(p, reinterpret_cast<fftw_complex*>(data.data()), reinterpret_cast<fftw_complex*>(out.data()));
  if (sign < 0) {
    const double scale = 1.0 / static_cast<double>(g.physical_size());
    for (auto& z : out) z *= scale;
  }
  data.swap(out);
}

}  // namespace snlb
