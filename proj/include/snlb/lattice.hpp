#pragma once

#include <cstdint>
#include <vector>

namespace snlb {

/// r(m) = #{n in Z^dim : |n|^2 = m, |n_i| <= box} for m = 0..n2max.
/// box < 0 means no per-axis restriction.
std::vector<std::int64_t> shell_counts(int dim, int n2max, int box = -1);

/// Sum over |n|^2 <= n2max of f(|n|^2), shell by shell.
template <class F>
double shell_sum(int dim, int n2max, F&& f, int box = -1) {
  const auto r = shell_counts(dim, n2max, box);
  double acc = 0.0;
  for (int m = 0; m <= n2max; ++m)
    if (r[m]) acc += static_cast<double>(r[m]) * f(m);
  return acc;
}

/// Largest m with m <= N^2, i.e. the shell bound of the ball |n| <= N.
inline int ball_n2(double N) {
  if (N < 0) return -1;
  int m = static_cast<int>(N * N);
  while (static_cast<double>(m + 1) <= N * N + 1e-9) ++m;
  while (m > 0 && static_cast<double>(m) > N * N + 1e-9) --m;
  return m;
}

}  // namespace snlb
