#include "snlb/stats.hpp"

#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace snlb {

double RunningStats::se() const { return n > 1 ? std::sqrt(variance() / static_cast<double>(n)) : 0.0; }

double welch_p_value(const RunningStats& a, const RunningStats& b) {
  const double va = a.variance() / a.n, vb = b.variance() / b.n;
  if (va + vb == 0.0) return a.mean == b.mean ? 1.0 : 0.0;
  const double t = (a.mean - b.mean) / std::sqrt(va + vb);
  const double dof = (va + vb) * (va + vb) / (va * va / (a.n - 1) + vb * vb / (b.n - 1));
  boost::math::students_t dist(dof);
  return 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
}

double variance_ratio_p_value(const RunningStats& a, const RunningStats& b) {
  const double f = a.variance() / b.variance();
  boost::math::fisher_f dist(static_cast<double>(a.n - 1), static_cast<double>(b.n - 1));
  const double lower = boost::math::cdf(dist, f);
  return 2.0 * std::min(lower, 1.0 - lower);
}

LinearFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("least_squares needs >= 2 paired points");
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  LinearFit fit;
  fit.points = x.size();
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  if (x.size() > 2) {
    double rss = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double r = y[i] - fit.intercept - fit.slope * x[i];
      rss += r * r;
    }
    fit.slope_se = std::sqrt(rss / (n - 2) / sxx);
    const double q = boost::math::quantile(boost::math::students_t(n - 2), 0.975);
    fit.slope_lo = fit.slope - q * fit.slope_se;
    fit.slope_hi = fit.slope + q * fit.slope_se;
  } else {
    fit.slope_lo = fit.slope_hi = fit.slope;
  }
  return fit;
}

LinearFit log_log_fit(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(y[i]));
  }
  return least_squares(lx, ly);
}

}  // namespace snlb
