#pragma once

#include "snlb/field.hpp"

namespace snlb {

/// (sum_n <n>^{2s} |c(n)|^2)^{1/2}, <n> = (1 + |n|^2)^{1/2}.
double sobolev_norm(const SpectralField& f, double s);
double sobolev_norm_sq(const SpectralField& f, double s);

/// Real inner product sum_n <n>^{2s} c(n) conj(d(n)).
double sobolev_inner(const SpectralField& a, const SpectralField& b, double s);

/// Discrete L^p norm with weight M^-d after applying <n>^sigma. p = inf
/// (pass std::numeric_limits<double>::infinity()) is the grid maximum.
/// The field is sampled on its own grid; use resample() first to refine.
double lebesgue_norm(const SpectralField& f, double p, double sigma = 0.0);
double lebesgue_norm(const PhysicalField& f, double p);

/// Squared norm in H^{s'} x H^{s'-2} used by the blow-up monitor.
double pair_norm(const PairState& st, double s_prime);

/// Per-shell average of |c(n)|^2 over the stored modes with |n|^2 = n2.
double shell_power(const SpectralField& f, int n2);

/// sum over all n of |c(n)|^2 restricted to |n|^2 <= n2max (full spectrum).
double band_energy(const SpectralField& f, int n2max);

}  // namespace snlb
