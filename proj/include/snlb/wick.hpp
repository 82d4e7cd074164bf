#pragma once

#include <vector>

#include "snlb/field.hpp"
#include "snlb/hermite.hpp"
#include "snlb/variance.hpp"

namespace snlb {

/// Wick powers H_l(Psi(t,.); sigma), l = 0..k, sampled on a work grid.
/// `band` is the per-axis frequency band of Psi, used for the aliasing check.
struct WickPowers {
  Grid work;
  double time = 0.0;
  double variance = 0.0;
  int band = 0;
  std::vector<PhysicalField> powers;

  int order() const { return static_cast<int>(powers.size()) - 1; }
};

/// Pointwise H_l(psi(x); sigma). l = 0 gives the constant 1 field.
PhysicalField wick_power(const PhysicalField& psi, double sigma, int l);

/// All powers 0..k at once.
WickPowers wick_powers(const PhysicalField& psi, double sigma, int k, int band, double time = 0.0);

/// Wick powers of a field with no stochastic part (all Xi_l = 0 for l >= 1).
WickPowers zero_wick_powers(const Grid& work, int k, double time = 0.0);

/// sum_{l=0}^k C(k,l) Xi_l v^{k-l}, returned on v's grid. Evaluated
/// pointwise on xi.work, which must satisfy M_w > k*max(band_v, band_xi) + band_out.
SpectralField renormalized_nonlinearity(const SpectralField& v, const WickPowers& xi, int k);

/// Pointwise H_k(u; sigma) of a band-limited field, projected back onto
/// u's grid; the work grid is chosen large enough to be exact.
SpectralField hermite_of_field(const SpectralField& u, double sigma, int k);

/// P_N H_k(P_N u; sigma) on u's grid. Small balls (at most `direct_limit`
/// lattice points) use direct convolution of the mode lists; larger ones go
/// through hermite_of_field.
SpectralField projected_hermite(const SpectralField& u, double sigma, int k, double N, int direct_limit = 64);
/// Same, with the stored modes of the ball |n| <= N precomputed by the caller.
SpectralField projected_hermite(const SpectralField& u, const std::vector<ModeRef>& ball, double sigma, int k, double N,
                                int direct_limit = 64);

/// Integral of H_q(P_N u; sigma) over the torus, same route choice as projected_hermite.
double integral_of_projected_hermite(const SpectralField& u, double sigma, int q, double N, int direct_limit = 64);

/// Integral of H_q(u(x); sigma) over the torus (exact quadrature).
double integral_of_hermite(const SpectralField& u, double sigma, int q);

}  // namespace snlb
