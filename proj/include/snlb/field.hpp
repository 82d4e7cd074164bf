#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <span>
#include <vector>

#include "snlb/grid.hpp"

namespace snlb {

using cplx = std::complex<double>;

/// Fourier coefficients of a real field, f(x) = sum_n c(n) e^{2 pi i n.x},
/// stored in the half layout described on Grid. Hermitian symmetry is
/// structural off the last-axis zero plane; on that plane both n and -n are
/// stored and must be conjugates.
class SpectralField {
 public:
  SpectralField() = default;
  explicit SpectralField(const Grid& g) : grid_(g), c_(g.spectral_size(), cplx{0.0, 0.0}) {}

  const Grid& grid() const { return grid_; }
  std::span<cplx> coeffs() { return c_; }
  std::span<const cplx> coeffs() const { return c_; }
  cplx& operator[](std::size_t i) { return c_[i]; }
  const cplx& operator[](std::size_t i) const { return c_[i]; }
  std::size_t size() const { return c_.size(); }

  /// Coefficient of an arbitrary wavevector (zero when not representable).
  cplx mode(const Wavevector& n) const {
    if (!grid_.representable(n)) return {0.0, 0.0};
    if (n[grid_.dim() - 1] >= 0) return c_[grid_.index_of(n)];
    return std::conj(c_[grid_.index_of(negate(n))]);
  }

  /// Sets c(n) and c(-n) = conj(c(n)) consistently. Zero mode keeps the real part.
  void set_mode(const Wavevector& n, cplx value) {
    if (!grid_.representable(n)) throw std::out_of_range("wavevector not representable on grid");
    if (is_zero(n)) value = {value.real(), 0.0};
    if (n[grid_.dim() - 1] > 0) {
      c_[grid_.index_of(n)] = value;
    } else if (n[grid_.dim() - 1] < 0) {
      c_[grid_.index_of(negate(n))] = std::conj(value);
    } else {
      c_[grid_.index_of(n)] = value;
      c_[grid_.index_of(negate(n))] = std::conj(value);
    }
  }

  void fill_zero() { std::fill(c_.begin(), c_.end(), cplx{0.0, 0.0}); }

  SpectralField& operator+=(const SpectralField& o) {
    check_same(o);
    for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += o.c_[i];
    return *this;
  }
  SpectralField& operator-=(const SpectralField& o) {
    check_same(o);
    for (std::size_t i = 0; i < c_.size(); ++i) c_[i] -= o.c_[i];
    return *this;
  }
  SpectralField& operator*=(double a) {
    for (auto& z : c_) z *= a;
    return *this;
  }
  /// this += a * o
  void axpy(double a, const SpectralField& o) {
    check_same(o);
    for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += a * o.c_[i];
  }

  bool all_finite() const {
    for (const auto& z : c_)
      if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
    return true;
  }

  friend SpectralField operator+(SpectralField a, const SpectralField& b) { return a += b; }
  friend SpectralField operator-(SpectralField a, const SpectralField& b) { return a -= b; }
  friend SpectralField operator*(double s, SpectralField a) { return a *= s; }

 private:
  void check_same(const SpectralField& o) const {
    if (o.grid_ != grid_) throw std::invalid_argument("spectral fields live on different grids");
  }

  Grid grid_;
  std::vector<cplx> c_;
};

/// Real samples f(x_j) at the grid points x_j = j/M, row-major.
struct PhysicalField {
  Grid grid;
  std::vector<double> values;

  PhysicalField() = default;
  explicit PhysicalField(const Grid& g, double fill = 0.0) : grid(g), values(g.physical_size(), fill) {}
  PhysicalField(const Grid& g, std::vector<double> v) : grid(g), values(std::move(v)) {
    if (values.size() != g.physical_size())
      throw std::invalid_argument("sample count " + std::to_string(values.size()) + " does not match grid size " +
                                  std::to_string(g.physical_size()));
  }
  std::size_t size() const { return values.size(); }
};

/// (position, velocity) pair, e.g. (v, d_t v) or (u_N, d_t u_N).
struct PairState {
  SpectralField position;
  SpectralField velocity;
  double time = 0.0;
  bool blown_up = false;

  PairState() = default;
  explicit PairState(const Grid& g, double t = 0.0) : position(g), velocity(g), time(t) {}
  const Grid& grid() const { return position.grid(); }
};

}  // namespace snlb
