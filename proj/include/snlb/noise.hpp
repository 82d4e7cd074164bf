#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "snlb/field.hpp"
#include "snlb/rng.hpp"
#include "snlb/wick.hpp"

namespace snlb {

/// Seeded source of the complex Brownian increments beta_n, E|beta_n(t)|^2 = t.
///
/// With base_step > 0 the Brownian path is defined on the lattice of base
/// intervals [j h, (j+1) h]; any step covering r whole base intervals
/// composes r exact sub-steps, so runs at different dt share one path.
/// With base_step = 0 each call is one exact step keyed by a running counter.
struct NoiseStream {
  std::uint64_t seed = 0;
  std::uint32_t path = 0;
  double base_step = 0.0;

  KeyedNormal normal() const { return KeyedNormal(seed); }
  NoiseStream with_path(std::uint32_t p) const { return {seed, p, base_step}; }
};

enum class ConvolutionKind { undamped, damped };

/// Per-mode (Psi(t,n), d_t Psi(t,n)). Modes outside the ball |n| <= cutoff
/// stay zero; cutoff < 0 keeps every mode of the grid. Modes with
/// |n| <= inner are left untouched (used to evolve only a high band).
struct ConvolutionState {
  ConvolutionKind kind = ConvolutionKind::undamped;
  PairState pair;
  double cutoff = -1.0;
  double inner = -1.0;
  std::uint64_t steps = 0;

  double time() const { return pair.time; }
  const Grid& grid() const { return pair.grid(); }
  bool active(int n2) const {
    return (cutoff < 0.0 || n2 <= cutoff * cutoff + 1e-9) && (inner < 0.0 || n2 > inner * inner + 1e-9);
  }
};

/// 2x2 real propagator and lower Cholesky factor of the increment covariance
/// for one mode over a step h.
struct ModeStep {
  double p11, p12, p21, p22;
  double l11, l21, l22;
  double c11, c12, c22;
};
ModeStep undamped_mode_step(int n2, double h);
ModeStep damped_mode_step(int n2, double h);

/// Zero-data convolution (undamped) or mu2-distributed start (damped).
ConvolutionState make_convolution(ConvolutionKind kind, const Grid& g, double cutoff, const NoiseStream& stream);

/// Advance every active mode by the exact linear flow plus an exactly
/// distributed Gaussian Duhamel increment.
void evolve_convolution(ConvolutionState& st, double dt, const NoiseStream& stream);

/// X^1(n) = g_n/<n>^2, X^2(n) = h_n on all modes (or |n| <= cutoff).
PairState sample_initial_mu2(const NoiseStream& stream, const Grid& g, double cutoff = -1.0);

/// Exact variance of the truncated convolution at time t: sigma_N(t) for the
/// undamped kind, alpha_N for the damped kind started from mu2.
double convolution_variance(ConvolutionKind kind, const Grid& g, double cutoff, double t);

/// Trajectory of Psi plus Wick powers Xi_1..Xi_k at requested times.
struct EnhancedData {
  ConvolutionKind kind = ConvolutionKind::undamped;
  int k = 0;
  std::vector<double> times;
  std::vector<SpectralField> psi;
  std::vector<WickPowers> xi;
};

/// Wick work grid for a degree-k nonlinearity on grid g with a field of band `band`.
Grid wick_work_grid(const Grid& g, int k, int band);

EnhancedData sample_wick_trajectory(ConvolutionKind kind, int k, const std::vector<double>& times,
                                    const NoiseStream& stream, const Grid& g, double cutoff = -1.0);

/// Cauchy trend of the Wick square of the undamped convolution at time t:
/// D_N = :Psi_{2N}^2: - :Psi_N^2: with Psi_N = pi_N Psi on one shared path.
struct WickCauchyRow {
  double N = 0.0;
  double mean_norm = 0.0;  // ensemble mean of |D_N|_{H^sobolev}
  double se = 0.0;
  double mean_sq = 0.0;    // ensemble mean of |D_N|^2
  double exact_mean_sq = 0.0;  // 2 sum_m <m>^{2 sobolev} sum_{n1+n2=m} (C_{2N} C_{2N} - C_N C_N)(n1, n2)
};

struct WickCauchyProbe {
  std::vector<double> Ns{4, 8, 16};
  double t = 1.0;
  double sobolev = -0.25;
  std::size_t samples = 200;
  std::uint64_t seed = 1;
};

/// g must hold the largest cutoff 2N; products are formed exactly on a work grid.
std::vector<WickCauchyRow> wick_cauchy_probe(const Grid& g, const WickCauchyProbe& probe);

/// Streaming provider of Wick powers for time steppers.
class WickSource {
 public:
  virtual ~WickSource() = default;
  virtual const WickPowers& at(double t) = 0;
  virtual int order() const = 0;
  /// Raw Psi at the most recent time returned by at().
  virtual const SpectralField* psi() const { return nullptr; }
};

/// Psi = 0: Xi_0 = 1, Xi_l = 0.
class ZeroWickSource final : public WickSource {
 public:
  ZeroWickSource(const Grid& work, int k) : w_(zero_wick_powers(work, k)) {}
  const WickPowers& at(double t) override {
    w_.time = t;
    return w_;
  }
  int order() const override { return w_.order(); }

 private:
  WickPowers w_;
};

/// Evolves an undamped/damped convolution forward on demand. Requests must
/// be non-decreasing in time; the last result is cached.
class ConvolutionWickSource final : public WickSource {
 public:
  ConvolutionWickSource(ConvolutionKind kind, const Grid& g, double cutoff, int k, const NoiseStream& stream);
  const WickPowers& at(double t) override;
  int order() const override { return k_; }
  const SpectralField* psi() const override { return &state_.pair.position; }
  const ConvolutionState& state() const { return state_; }

 private:
  ConvolutionState state_;
  NoiseStream stream_;
  Grid work_;
  int k_;
  int band_;
  std::optional<WickPowers> cached_;
};

}  // namespace snlb
