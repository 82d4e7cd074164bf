#pragma once

#include <cstddef>
#include <vector>

namespace snlb {

/// Welford accumulator.
struct RunningStats {
  std::size_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++n;
    const double d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (x - mean);
  }
  double variance() const { return n > 1 ? m2 / static_cast<double>(n - 1) : 0.0; }
  double se() const;
};

/// Two-sided p-value of Welch's t-test for equal means.
double welch_p_value(const RunningStats& a, const RunningStats& b);
/// Two-sided p-value of the F-test for equal variances.
double variance_ratio_p_value(const RunningStats& a, const RunningStats& b);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_se = 0.0;
  double slope_lo = 0.0;  // 95% confidence interval
  double slope_hi = 0.0;
  std::size_t points = 0;
};

/// Ordinary least squares y = a + b x with a Student-t interval on b.
LinearFit least_squares(const std::vector<double>& x, const std::vector<double>& y);
/// Fit of log y against log x.
LinearFit log_log_fit(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace snlb
