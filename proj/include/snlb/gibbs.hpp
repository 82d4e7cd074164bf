#pragma once

#include <cstdint>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "snlb/dynamics.hpp"
#include "snlb/field.hpp"
#include "snlb/noise.hpp"

namespace snlb {

enum class Sampler { independence_mh, pcn };

struct GibbsSpec {
  int k = 3;
  double N = 1.0;
  Sampler sampler = Sampler::independence_mh;
  long burn_in = 1000;
  long thinning = 10;
  double pcn_beta = 0.3;
  bool weighted = true;  // false: plain mu2 (weight identically 1)

  void validate() const;
};

/// Renormalized potential (k+1)^{-1} int H_{k+1}(P_N u(x); alpha_N) dx.
double compute_RN(const SpectralField& u, double N, int k);

/// alpha_N restricted to the modes the grid can hold.
double grid_alpha(const Grid& g, double N);

struct GibbsEnsemble {
  std::vector<PairState> states;
  double acceptance = 1.0;
  std::string warning;
};

/// Draws `count` states from the truncated Gibbs measure: low modes of the
/// position by Metropolis-Hastings against exp(-R_N), high modes and the
/// whole velocity from mu2 (path ids first_path, first_path + 1, ...).
GibbsEnsemble sample_rhoN(const GibbsSpec& spec, const NoiseStream& stream, const Grid& g, std::size_t count,
                          std::uint32_t first_path = 0);

struct DensityProbeRow {
  double N;
  double mean_R;
  double var_R;
  double mean_weight;  // E exp(-R_N)
  double se_weight;
  double var_diff_next;  // Var(R_N - R_{next N}); NaN for the last N
  double exact_var_R;     // lattice-sum value of Var(R_N)
  double exact_var_diff_next;
};

/// Exact Var(R_N) under mu2 on the modes of g: ((k+1)!/(k+1)^2) int C_N^{k+1} dx,
/// C_N(x) = sum_{|n| <= N} <n>^{-4} e_n(x). For nested balls the Wick chaos
/// gives Cov(R_N, R_N') = Var(R_N), so Var(R_N - R_N') is a difference of these.
double potential_variance(const Grid& g, double N, int k);

/// R_N for a common set of mu2 samples across all N.
std::vector<DensityProbeRow> density_convergence_probe(const std::vector<double>& Ns, int k, std::size_t samples,
                                                       const NoiseStream& stream, const Grid& g);

/// Observable names: u2_shell0/1/2, ut2_shell0/1/2 (shell-averaged |u(n)|^2
/// and |u_t(n)|^2 at |n|^2 = 0, 1, 2), R_N, h_minus_quarter_sq.
std::vector<std::string> default_observables();
double evaluate_observable(const std::string& name, const PairState& st, double N, int k);

struct ObservableResult {
  std::string name;
  double mean_before = 0.0;
  double mean_after = 0.0;
  double se_diff = 0.0;     // standard error of the paired difference
  double allowance = 0.0;   // (4/3)|E[phi_dt - phi_dt/2]|
  double drift_dt = 0.0;    // E[phi_dt - phi_dt/2]
  double drift_half = 0.0;  // E[phi_dt/2 - phi_dt/4]
  double se_drift_dt = 0.0;
  double se_drift_half = 0.0;
  double weak_residual = 0.0;  // E[drift_dt - 4 drift_half], paired per path; O(dt^3) at weak order 2
  double se_weak_residual = 0.0;
  bool pass = false;
};

struct InvarianceReport {
  int k = 3;
  double N = 1.0;
  double dt = 0.01;
  double T = 1.0;
  std::size_t paths = 0;
  double acceptance = 1.0;
  bool nonlinear = true;
  bool weak_order_run = false;
  std::vector<ObservableResult> observables;
  bool all_pass = false;

  void write_json(std::ostream& os) const;
  void write_csv(std::ostream& os) const;
};

struct InvarianceOptions {
  bool nonlinear = true;
  bool weak_order = true;  // also run dt/4 for the weak-order ratio
};

/// Evolves a Gibbs ensemble with step_damped at dt, dt/2 (and dt/4) on one
/// shared noise path per member and compares observable means at 0 and T.
InvarianceReport invariance_test(const GibbsSpec& spec, double dt, double T, std::size_t paths,
                                 const NoiseStream& stream, const Grid& g,
                                 const std::vector<std::string>& observables, const InvarianceOptions& opt = {});
/// Same, starting from an ensemble already drawn from rho_N (one path per state).
InvarianceReport invariance_test(const GibbsSpec& spec, const GibbsEnsemble& ens, double dt, double T,
                                 const NoiseStream& stream, const std::vector<std::string>& observables,
                                 const InvarianceOptions& opt = {});

}  // namespace snlb
