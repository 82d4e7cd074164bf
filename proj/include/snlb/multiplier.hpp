#pragma once

#include <string>
#include <vector>

#include "snlb/field.hpp"

namespace snlb {

enum class MultiplierKind {
  sharp_projector,   // 1 on |n| <= N
  littlewood_paley,  // phi_N, dyadic N
  i_operator,        // min(1, (N/|n|)^{2-s})
  i_operator_smooth, // log-coordinate C^2 blend on [N, 2N]
  bessel,            // <n>^s
  sine_propagator,   // sin(t|n|^2)/|n|^2, value t at n = 0
  damped_dispersion, // (<n>^4 - 1/4)^{1/2}
};

/// Radial Fourier multiplier. Values depend on |n|^2 only.
struct MultiplierSpec {
  MultiplierKind kind = MultiplierKind::sharp_projector;
  double N = 1.0;
  double s = 0.0;
  double t = 0.0;

  static MultiplierSpec projector(double N) { return {MultiplierKind::sharp_projector, N, 0.0, 0.0}; }
  static MultiplierSpec lp(double N) { return {MultiplierKind::littlewood_paley, N, 0.0, 0.0}; }
  static MultiplierSpec i_op(double N, double s, bool smooth = false) {
    return {smooth ? MultiplierKind::i_operator_smooth : MultiplierKind::i_operator, N, s, 0.0};
  }
  static MultiplierSpec bessel(double s) { return {MultiplierKind::bessel, 1.0, s, 0.0}; }
  static MultiplierSpec sine(double t) { return {MultiplierKind::sine_propagator, 1.0, 0.0, t}; }
  static MultiplierSpec damped() { return {MultiplierKind::damped_dispersion, 1.0, 0.0, 0.0}; }

  /// Throws std::invalid_argument on bad parameters.
  void validate() const;
  double operator()(int n2) const;
  std::string describe() const;
};

/// Smooth bump: 1 on [0, 5/4], 0 on [8/5, inf), C-infinity in between.
double lp_bump(double r);
/// phi_1(r) = bump(r); phi_N(r) = bump(r/N) - bump(2r/N) for dyadic N >= 2.
double lp_piece(double N, double r);

/// I-operator symbol with the sharp-power transition.
inline double i_symbol(double N, double s, double r) { return r <= N ? 1.0 : std::pow(N / r, 2.0 - s); }
double i_symbol_smooth(double N, double s, double r);

SpectralField apply_multiplier(const SpectralField& f, const MultiplierSpec& m);
void apply_multiplier_inplace(SpectralField& f, const MultiplierSpec& m);

SpectralField littlewood_paley(const SpectralField& f, int N);
/// Dyadic pieces P_1, P_2, ..., up to the first N whose bump covers the grid;
/// the pieces sum to f exactly.
std::vector<std::pair<int, SpectralField>> littlewood_paley_family(const SpectralField& f);

}  // namespace snlb
