#pragma once

#include <array>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "snlb/dynamics.hpp"
#include "snlb/field.hpp"
#include "snlb/multiplier.hpp"
#include "snlb/noise.hpp"
#include "snlb/stats.hpp"
#include "snlb/wick.hpp"

namespace snlb {

/// I_N with exponent s; sharp-power symbol unless `smooth`.
struct IOperator {
  double N = 8.0;
  double s = 1.8;
  bool smooth = false;

  MultiplierSpec spec() const { return MultiplierSpec::i_op(N, s, smooth); }
  SpectralField operator()(const SpectralField& f) const { return apply_multiplier(f, spec()); }
};

/// E(I v) = 1/2 |Delta I v|^2 + 1/2 |d_t I v|^2 + 1/4 int (I v)^4.
double modified_energy(const PairState& st, const IOperator& I);

/// |I v|_{L^2}^2 + |Delta I v|_{L^2}^2, the H^2 norm used with the energy bound.
double i_h2_norm_sq(const SpectralField& v, const IOperator& I);

/// Integrands of the three increment terms of d/dt E(I v) at one time, for
/// v_tt + Delta^2 v + :(v + Psi)^3: = 0:
///   commutator = int (d_t I v) { (I v)^3 - I(v^3) }
///   cross      = -3 int (d_t I v) I(v^2 Psi + v :Psi^2:)
///   pure       = - int (d_t I v) I(:Psi^3:)
struct AuditSample {
  double time = 0.0;
  double energy = 0.0;
  double commutator = 0.0;
  double cross = 0.0;
  double pure = 0.0;
};

/// `xi` must hold Xi_0..Xi_3 (Xi_1 = Psi). Throws std::invalid_argument otherwise.
AuditSample audit_sample(const PairState& st, const WickPowers& xi, const IOperator& I);

struct LedgerInterval {
  double t1, t2;
  double dE;
  double commutator, cross, pure;  // trapezoid integrals over [t1, t2]
  double defect;                   // dE - (commutator + cross + pure)
};

struct EnergyLedger {
  IOperator I;
  std::vector<AuditSample> samples;
  std::vector<LedgerInterval> intervals;
  double total_dE = 0.0;
  double total_commutator = 0.0;
  double total_cross = 0.0;
  double total_pure = 0.0;
  double total_defect = 0.0;
  double max_abs_defect = 0.0;

  void write_csv(std::ostream& os) const;
  void write_json(std::ostream& os) const;
};

/// Trapezoid assembly of the increment terms over consecutive samples.
EnergyLedger energy_increment_audit(const std::vector<AuditSample>& samples, const IOperator& I);

struct AuditRunConfig {
  IntegratorConfig integrator;
  double T = 1.0;
  bool noise = true;
  int record_every = 1;  // audit node every this many steps
};

/// Integrates the cubic defocusing remainder equation on the whole grid and
/// audits E(I v) at every recorded step. Throws BlowUp if the path escapes.
EnergyLedger run_energy_audit(const PairState& initial, const IOperator& I, const AuditRunConfig& cfg,
                              const NoiseStream& stream);

/// Gaussian coefficients with <n>^{-s-2} decay on |n_i| <= band, normalized
/// to |f|_{H^s} = 1. Keyed by (stream seed, path).
SpectralField random_hs_field(const Grid& g, double s, int band, const NoiseStream& stream, double decay_shift = 2.0);

/// A field given by an explicit list of modes, closed under n -> -n.
struct SparseField {
  std::vector<Wavevector> modes;
  std::vector<cplx> coeffs;
  int dim = 4;
};

/// Random sparse field on Z^dim: `per_shell` lattice points drawn uniformly in
/// each dyadic shell 2^{j-1} <= |n| < 2^j up to `band`, coefficients
/// <n>^{-s-2} g_n rescaled by sqrt(#shell / per_shell) so every shell carries
/// its dense-field H^s mass in expectation. Normalized to |f|_{H^s} = 1.
SparseField sparse_hs_field(int dim, double s, int band, int per_shell, const NoiseStream& stream);

enum class FieldFamily { dense, sparse };
enum class CommutatorKind { c1, c2, c3 };

struct ScalingRow {
  double N;
  double value;  // ensemble mean of the measured ratio
  double se;
  double max;
};

struct ScalingReport {
  std::string quantity;
  std::vector<ScalingRow> rows;
  LinearFit fit;
  double target = 0.0;
  double tolerance = 0.15;
  bool exact_zero = false;  // every measured value vanished (slope undefined)
  bool pass = false;        // slope <= target + tolerance, or exact_zero

  void write_csv(std::ostream& os) const;
  void write_json(std::ostream& os) const;
  /// gnuplot script plotting log value against log N with the fitted line.
  void write_plot_script(std::ostream& os, const std::string& csv_name) const;
};

struct CommutatorProbe {
  CommutatorKind kind = CommutatorKind::c1;
  int k = 3;
  double s = 1.8;
  std::vector<double> Ns{8, 16, 32, 64};
  std::size_t samples = 20;
  FieldFamily family = FieldFamily::sparse;
  int dim = 4;
  int band = 256;      // frequency band of the test fields
  int per_shell = 6;   // sparse family only
  double gamma = -1.0; // C2 smoothness loss; < 0 means k (2 - s)
  double gamma0 = 0.05;
  double p = 40.0;
  bool smooth_i = false;
  std::uint64_t seed = 1;
  double tolerance = 0.15;

  void validate() const;
  double target() const;
};

/// Ratio measured by one sample of the probe at cutoff N (dense family):
///   c1: |(I f)^k - I(f^k)|_2 / |I f|_{H^2}^k
///   c2: |(I f)(I g) - I(f g)|_2 / (|f|_{H^{2-gamma}} |g|_{W^{-gamma0,p}})
///   c3: |I(f^k g) - (I f)^k I g|_2 / (|I f|_{H^2}^k |g|_{W^{-gamma0,p}})
double commutator_ratio(CommutatorKind kind, int k, const IOperator& I, const SpectralField& f,
                        const SpectralField* g = nullptr, double gamma = 0.0, double gamma0 = 0.05, double p = 40.0);
/// c1 ratio for a sparse field by direct convolution over its modes.
double commutator_ratio_sparse(int k, const IOperator& I, const SparseField& f);

ScalingReport commutator_scaling(const CommutatorProbe& probe);

enum class StrichartzData { random, dirichlet };

struct StrichartzProbe {
  double p = 4.0;
  int dim = 4;
  std::vector<double> Ns{4, 8, 16, 32};
  std::size_t samples = 50;
  StrichartzData data = StrichartzData::random;
  int nodes = 64;             // time nodes per unit time
  bool scale_nodes = false;   // use max(nodes, 2 N^2) nodes (resolves the dispersive time scale)
  int space_points = 0;       // > 0: Monte Carlo over this many uniform points instead of the full grid
  std::uint64_t seed = 1;

  void validate() const;
  double exponent() const { return 0.5 * dim - (dim + 2.0) / p; }
};

/// |e^{it Delta} f|_{L^p([0,1] x T^d)} on the discrete space-time grid, f
/// given as a real field; time integral by trapezoid on `nodes` intervals.
double schrodinger_space_time_norm(const SpectralField& f, double p, int nodes);

/// Same norm with the spatial integral replaced by the mean over `points`
/// (coordinates in [0, 1)). Per point u(t, x) is summed shell by shell, so
/// the cost is one pass over the modes plus nodes x (number of shells).
double schrodinger_space_time_norm_at(const SparseField& f, double p, int nodes,
                                      const std::vector<std::array<double, 4>>& points);

/// Rows: N, mean and max over samples of the ratio
/// |e^{it Delta} P_{<=N} f|_{L^p} / (N^{d/2-(d+2)/p} |f|_{L^2}); fit of the
/// max against N. pass: max ratio at the largest N below 1.5 x the smallest N.
ScalingReport strichartz_probe(const StrichartzProbe& probe);

struct IPsiRow {
  double N;
  double t;
  double variance_exact;  // lattice sum of m_N^2 sigma_n(t), truncated at |n| <= radius
  double variance_mc;
  double variance_se;
  double exp_moment_exact;  // E e^{|X|} = 2 e^{V/2} Phi(sqrt V)
  double exp_moment_mc;
  double exp_moment_se;
};

struct IPsiTable {
  std::vector<IPsiRow> rows;
  double C0 = 0.0;  // max over rows with t log N > 0 of variance / (t log N)

  void write_csv(std::ostream& os) const;
};

/// Monte Carlo of I_N Psi(t, 0) for the undamped convolution on Z^dim
/// truncated at |n| <= radius_factor * N. Per shell the sum of the
/// independent mode values is one Gaussian, so each sample costs one draw per shell.
IPsiTable ipsi_exponential_moment(const std::vector<double>& Ns, const std::vector<double>& ts, std::size_t samples,
                                  double s, const NoiseStream& stream, int dim = 4, double radius_factor = 4.0);

/// Ratios |int (d_t I v)(I v)^k I w| / (N^lambda (1 + E^{3/4}) |w|_{W^{-lambda,4}})
/// over random states (v, v_t, w drawn with random_hs_field).
struct C4Sample {
  int k;
  double lambda;
  double N;
  double ratio;
};
std::vector<C4Sample> c4_probe(const Grid& g, const std::vector<double>& Ns, double s, std::size_t draws,
                               const NoiseStream& stream);

/// C exp(c log(2 + |v(0)|) e^{Cw t^2}).
double double_exponential_envelope(double t, double initial_norm, double C = 1.0, double c = 1.0, double Cw = 1.0);

}  // namespace snlb
