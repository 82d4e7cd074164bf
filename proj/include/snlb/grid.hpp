#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <cstdlib>

namespace snlb {

/// Maximum spatial dimension supported by the grids.
inline constexpr int kMaxDim = 4;

using Wavevector = std::array<int, kMaxDim>;

/// Uniform grid on the unit-volume torus (R/Z)^d with M points per axis.
///
/// Spectral data use the real-to-complex half layout: the last axis keeps
/// frequencies 0..M/2, every other axis stores 0..M/2-1 followed by -M/2..-1.
/// Frequencies with any component equal to -M/2 (or M/2 on the last axis)
/// are Nyquist modes and are always held at zero, so the largest usable
/// frequency per axis is M/2 - 1.
class Grid {
 public:
  Grid() = default;
  Grid(int dim, int points, int pad_factor = 2) : dim_(dim), points_(points), pad_(pad_factor) {
    if (dim < 1 || dim > kMaxDim) throw std::invalid_argument("grid dimension must be in 1..4");
    if (points < 4 || points % 2 != 0)
      throw std::invalid_argument("grid points per axis must be even and >= 4, got " + std::to_string(points));
    if (pad_factor < 1) throw std::invalid_argument("pad_factor must be >= 1");
  }

  int dim() const { return dim_; }
  int points() const { return points_; }
  int pad_factor() const { return pad_; }
  int max_mode() const { return points_ / 2 - 1; }
  int half_points() const { return points_ / 2 + 1; }

  std::size_t physical_size() const {
    std::size_t n = 1;
    for (int i = 0; i < dim_; ++i) n *= static_cast<std::size_t>(points_);
    return n;
  }
  std::size_t spectral_size() const { return physical_size() / points_ * half_points(); }

  /// Quadrature weight of one grid point (unit volume torus).
  double cell_volume() const { return 1.0 / static_cast<double>(physical_size()); }

  Grid padded() const { return Grid(dim_, points_ * pad_, pad_); }
  Grid with_points(int points) const { return Grid(dim_, points, pad_); }
  Grid with_pad(int pad) const { return Grid(dim_, points_, pad); }

  /// Storage index of the axis slot holding frequency k (non-last axes).
  std::size_t axis_slot(int k) const { return static_cast<std::size_t>(k >= 0 ? k : k + points_); }
  int slot_frequency(std::size_t slot) const {
    const int s = static_cast<int>(slot);
    return s < points_ / 2 ? s : s - points_;
  }

  bool representable(const Wavevector& n) const {
    for (int i = 0; i < dim_; ++i)
      if (n[i] > max_mode() || n[i] < -max_mode()) return false;
    return true;
  }

  /// Index of a stored wavevector. Requires representable(n) and n[d-1] >= 0.
  std::size_t index_of(const Wavevector& n) const {
    std::size_t idx = 0;
    for (int i = 0; i + 1 < dim_; ++i) idx = idx * points_ + axis_slot(n[i]);
    return idx * half_points() + static_cast<std::size_t>(n[dim_ - 1]);
  }

  Wavevector wavevector_of(std::size_t idx) const {
    Wavevector n{0, 0, 0, 0};
    n[dim_ - 1] = static_cast<int>(idx % half_points());
    idx /= half_points();
    for (int i = dim_ - 2; i >= 0; --i) {
      n[i] = slot_frequency(idx % points_);
      idx /= points_;
    }
    return n;
  }

  friend bool operator==(const Grid& a, const Grid& b) {
    return a.dim_ == b.dim_ && a.points_ == b.points_;
  }
  friend bool operator!=(const Grid& a, const Grid& b) { return !(a == b); }

 private:
  int dim_ = 4;
  int points_ = 8;
  int pad_ = 2;
};

inline int norm2(const Wavevector& n) { return n[0] * n[0] + n[1] * n[1] + n[2] * n[2] + n[3] * n[3]; }

/// Mode record passed to for_each_mode.
struct ModeRef {
  std::size_t index;
  Wavevector n;
  int norm2;
  /// Multiplicity in full-spectrum sums: 0 for Nyquist slots, 1 on the
  /// last-axis zero plane, 2 elsewhere (the entry also stands for -n).
  int weight;
};

/// Visits every stored spectral slot in storage order.
template <class Fn>
void for_each_mode(const Grid& g, Fn&& fn) {
  const int d = g.dim();
  const int M = g.points();
  const int H = g.half_points();
  Wavevector n{0, 0, 0, 0};
  std::array<int, kMaxDim> slot{0, 0, 0, 0};
  const std::size_t total = g.spectral_size();
  for (std::size_t idx = 0; idx < total; ++idx) {
    bool nyquist = false;
    int sq = 0;
    for (int i = 0; i + 1 < d; ++i) {
      n[i] = slot[i] < M / 2 ? slot[i] : slot[i] - M;
      if (slot[i] == M / 2) nyquist = true;
      sq += n[i] * n[i];
    }
    n[d - 1] = slot[d - 1];
    if (slot[d - 1] == M / 2) nyquist = true;
    sq += n[d - 1] * n[d - 1];
    const int w = nyquist ? 0 : (slot[d - 1] == 0 ? 1 : 2);
    fn(ModeRef{idx, n, sq, w});
    // odometer increment, last axis fastest
    int ax = d - 1;
    ++slot[ax];
    while (ax > 0 && slot[ax] == (ax == d - 1 ? H : M)) {
      slot[ax] = 0;
      --ax;
      ++slot[ax];
    }
  }
}

/// True when n is the representative of the pair {n, -n} used for keyed
/// random draws: the last non-zero component (scanning from the last axis)
/// is positive. The zero vector is its own representative.
inline bool is_canonical(const Wavevector& n, int dim) {
  for (int i = dim - 1; i >= 0; --i) {
    if (n[i] > 0) return true;
    if (n[i] < 0) return false;
  }
  return true;
}

inline Wavevector negate(const Wavevector& n) { return {-n[0], -n[1], -n[2], -n[3]}; }

inline bool is_zero(const Wavevector& n) { return n[0] == 0 && n[1] == 0 && n[2] == 0 && n[3] == 0; }

}  // namespace snlb
