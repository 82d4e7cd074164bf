#pragma once

#include <vector>

namespace snlb {

/// H_l(x; sigma) by the upward recurrence H_{l+1} = x H_l - sigma l H_{l-1}.
/// Relative accuracy degrades when |x| is far below sqrt(sigma) and l is
/// large (cancellation); degrees used here are <= 8.
inline double hermite(int l, double x, double sigma) {
  if (l <= 0) return 1.0;
  double hm = 1.0, h = x;
  for (int j = 1; j < l; ++j) {
    const double hp = x * h - sigma * j * hm;
    hm = h;
    h = hp;
  }
  return h;
}

/// H_0..H_l at one point.
inline void hermite_all(int l, double x, double sigma, double* out) {
  out[0] = 1.0;
  if (l >= 1) out[1] = x;
  for (int j = 1; j < l; ++j) out[j + 1] = x * out[j] - sigma * j * out[j - 1];
}

inline double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

}  // namespace snlb
