#pragma once

#include <stdexcept>
#include <vector>

#include "snlb/field.hpp"

namespace snlb {

/// Raised when a grid is too coarse to evaluate a polynomial product without
/// aliasing. The message names the pad factor that would suffice.
class DealiasingError : public std::runtime_error {
 public:
  DealiasingError(const std::string& what, int required_pad)
      : std::runtime_error(what), required_pad_(required_pad) {}
  int required_pad() const { return required_pad_; }

 private:
  int required_pad_;
};

/// Generalized 2/3 rule: ceil((k+1)/2).
inline int default_pad_factor(int degree) { return (degree + 2) / 2; }

/// Smallest even 2^a 3^b 5^c that is >= n (and >= 4).
int fft_friendly(int n);

/// Smallest FFT-friendly work size on which a degree-q product of fields with
/// per-axis band `band_in` is exact on output band `band_out`: M > q*band_in + band_out.
int work_points(int degree, int band_in, int band_out);

/// Largest |n_i| among non-zero coefficients.
int spectral_band(const SpectralField& f);

/// Samples of f on the (finer or equal) work grid.
PhysicalField to_physical(const SpectralField& f, const Grid& work);
/// Forward transform on the work grid followed by truncation to `target`.
SpectralField from_physical(const PhysicalField& f, const Grid& target);

/// Coefficients of the pointwise product f_1 ... f_k on the common grid of
/// the inputs, evaluated on the padded grid (pad_factor of the input grid).
/// Exact for band-limited inputs; throws DealiasingError otherwise.
SpectralField dealiased_product(const std::vector<const SpectralField*>& fields);
SpectralField dealiased_power(const SpectralField& f, int k);

/// Integral over the torus of f^q, exact (work grid chosen from the band).
double integral_of_power(const SpectralField& f, int q);

}  // namespace snlb
