#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "snlb/field.hpp"
#include "snlb/noise.hpp"

namespace snlb {

enum class Scheme { strang, lie };

struct IntegratorConfig {
  double dt = 0.01;
  Scheme scheme = Scheme::strang;
  double blowup_threshold = 1e6;
  double s_prime = 1.99;

  void validate() const;
  /// min(s, 2 - eps)
  static double default_s_prime(double s, double eps = 0.01) { return std::min(s, 2.0 - eps); }
};

/// Raised by run_trajectory when a path leaves the threshold ball.
struct BlowUp : std::runtime_error {
  double time;
  BlowUp(const std::string& what, double t) : std::runtime_error(what), time(t) {}
};

/// Exact flow of u_tt + Delta^2 u = 0 (omega = |n|^2; zero mode drifts).
void linear_step_undamped(PairState& st, double dt);
/// Exact flow of u_tt + (1 - Delta)^2 u = 0 on modes |n| <= cutoff (all if < 0).
void linear_step_bessel(PairState& st, double dt, double cutoff = -1.0);

/// True when the H^{s'} x H^{s'-2} norm exceeds the threshold or is not finite.
bool exceeds_threshold(const PairState& st, const IntegratorConfig& cfg);

/// Remainder equation v_tt + Delta^2 v + sign * P sum_l C(k,l) Xi_l v^{k-l} = 0,
/// P the projection onto |n| <= cutoff (none when cutoff < 0).
/// Kick-drift-kick with Wick powers taken at the kick times t and t + dt.
/// The end-of-step force is reused by the next step when v is unchanged.
class RemainderStepper {
 public:
  RemainderStepper(int k, int sign, double cutoff, IntegratorConfig cfg);

  /// Returns false (and flags st.blown_up) when the threshold is crossed.
  bool step(PairState& st, WickSource& src);
  SpectralField force(const SpectralField& v, const WickPowers& xi) const;
  const IntegratorConfig& config() const { return cfg_; }

 private:
  int k_;
  int sign_;
  double cutoff_;
  IntegratorConfig cfg_;
  std::optional<SpectralField> cached_v_, cached_force_;
  double cached_time_ = -1.0;
};

/// One step of the remainder equation (convenience wrapper without caching).
bool step_remainder(PairState& st, WickSource& src, int k, int sign, const IntegratorConfig& cfg,
                    double cutoff = -1.0);

/// Truncated damped system
///   u_tt + (1 - Delta)^2 u + u_t + P_N H_k(P_N u; alpha_N) = sqrt(2) xi.
/// Low modes |n| <= N: O(dt/2) B(dt/2) A(dt) B(dt/2) O(dt/2) (Strang) or
/// B(dt) A(dt) O(dt) (Lie), with O the exact Ornstein-Uhlenbeck velocity flow,
/// B the nonlinear kick and A the exact (1 - Delta)^2 rotation. Modes |n| > N
/// follow the exact damped linear flow.
class DampedStepper {
 public:
  DampedStepper(const Grid& g, int k, double N, IntegratorConfig cfg, NoiseStream stream, bool nonlinear = true);

  bool step(PairState& st);
  SpectralField force(const SpectralField& u) const;
  double alpha() const { return alpha_; }
  /// Exact OU update of the low-mode velocities over [t0, t0 + h].
  void ou_flow(PairState& st, double t0, double h);
  /// Leave the modes outside the ball untouched instead of evolving them exactly.
  void freeze_high_band(bool frozen) { high_frozen_ = frozen; }

 private:
  void kick(PairState& st, double h);

  Grid grid_;
  int k_;
  double N_;
  double alpha_;
  IntegratorConfig cfg_;
  NoiseStream stream_;
  bool nonlinear_;
  bool high_frozen_ = false;
  ConvolutionState high_;
  std::vector<ModeRef> ou_modes_;  // stored modes of the OU-driven ball
  std::uint64_t ou_calls_ = 0;
  std::optional<SpectralField> cached_u_, cached_force_;
};

bool step_damped(PairState& st, DampedStepper& stepper);

/// Model selection for run_trajectory.
struct ModelSpec {
  bool damped = false;
  int k = 3;
  int sign = 1;         // +1 defocusing
  double cutoff = -1.0; // N; < 0 means the whole grid
  bool noise = true;
  bool nonlinear = true;
};

using Diagnostic = std::function<double(const PairState&)>;

struct TrajectoryRecord {
  std::vector<std::string> columns;  // "time" first
  std::vector<std::vector<double>> rows;
  bool blown_up = false;
  double stop_time = 0.0;
  PairState final_state;

  void write_csv(std::ostream& os) const;
};

/// Named diagnostics: "h_sprime" (pair norm), "linear_energy"
/// (1/2|Delta v|^2 + 1/2|v_t|^2), "energy" (plus 1/(k+1) int v^{k+1}),
/// "l2", "h_minus_quarter" and "mode0" (real part of the zero mode).
Diagnostic make_diagnostic(const std::string& name, const ModelSpec& model, const IntegratorConfig& cfg);

/// Integrates to time T recording the diagnostics every `record_every`
/// steps (and at T). Stops early on blow-up with stop_time set.
TrajectoryRecord run_trajectory(const PairState& initial, const ModelSpec& model, const IntegratorConfig& cfg,
                                double T, const NoiseStream& stream, const std::vector<std::string>& diagnostics,
                                int record_every = 1);

/// Keyed random data: position <n>^{-(s+1+d/2)} g_n, velocity <n>^{-(s-1+d/2)} h_n
/// (in H^s x H^{s-2}), scaled by `amplitude`, keyed by (seed, path).
PairState random_initial_data(const Grid& g, double s, double amplitude, std::uint64_t seed, std::uint32_t path);

/// Same-seed gap between truncated remainders: for each sample, shared
/// random_initial_data and one noise path are evolved with cutoff N and with cutoff 2N; the row
/// for N reports |v_N(T) - v_{2N}(T)|_{H^{s'} x H^{s'-2}}.
struct CutoffGapRow {
  double N = 0.0;
  double mean_gap = 0.0;
  double se = 0.0;
  double max_gap = 0.0;
  std::size_t blown_up = 0;  // samples where either run left the threshold ball
};

struct CutoffGapProbe {
  std::vector<double> Ns{4, 8, 16};
  int k = 3;
  int sign = 1;
  double T = 0.5;
  double s = 1.8;
  double amplitude = 1.0;
  std::size_t samples = 50;
  std::uint64_t seed = 1;
};

/// Every cutoff 2N must fit on g.
std::vector<CutoffGapRow> cutoff_gap_probe(const Grid& g, const CutoffGapProbe& probe, const IntegratorConfig& cfg);

double beam_linear_energy(const PairState& st);
/// 1/2 sum <n>^4 |u(n)|^2 + 1/2 sum |u_t(n)|^2
double damped_linear_energy(const PairState& st);
double beam_energy(const PairState& st, int k);

}  // namespace snlb
