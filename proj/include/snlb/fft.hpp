#pragma once

#include <vector>

#include "snlb/field.hpp"

namespace snlb {

/// Physical samples -> Fourier coefficients, normalized so that a constant
/// field c has coefficient c at n = 0. Nyquist slots are dropped and the
/// last-axis zero plane is symmetrized, so the result is an exact Hermitian
/// SpectralField; round trips are exact for fields without Nyquist content.
SpectralField forward_transform(const PhysicalField& f);
PhysicalField inverse_transform(const SpectralField& f);

/// Same transforms on raw buffers (sizes must match the grid).
void forward_transform(const Grid& g, const double* in, cplx* out);
void inverse_transform(const Grid& g, const cplx* in, double* out);

/// Copies every coefficient representable on both grids into a field on
/// `target` (zero padding when target is larger, truncation when smaller).
SpectralField resample(const SpectralField& f, const Grid& target);

/// Full complex transform on M^d points. sign = -1 is the forward direction
/// (normalized by M^-d), sign = +1 synthesizes sum_n c(n) e^{2 pi i n.x}.
/// Full-spectrum index of n is the row-major index of (n_i mod M).
void complex_transform(const Grid& g, std::vector<cplx>& data, int sign);

}  // namespace snlb
