#include "snlb/variance.hpp"

#include <cmath>
#include <iomanip>

#include "snlb/lattice.hpp"

namespace snlb {

double x_minus_sin(double x) {
  if (std::abs(x) > 0.25) return x - std::sin(x);
  // x^3/3! - x^5/5! + ... ; nine terms reach double precision for |x| <= 0.25
  const double x2 = x * x;
  double term = x * x2 / 6.0, acc = 0.0;
  for (int k = 1; k <= 9; ++k) {
    acc += term;
    term *= -x2 / ((2.0 * k + 2.0) * (2.0 * k + 3.0));
  }
  return acc;
}

double undamped_mode_variance(double w, double t) {
  if (w == 0.0) return t * t * t / 3.0;
  return x_minus_sin(2.0 * w * t) / (4.0 * w * w * w);
}

double sigma_N(double t, double N, int dim, int box) {
  if (t == 0.0) return 0.0;
  return shell_sum(dim, ball_n2(N), [t](int m) { return undamped_mode_variance(m, t); }, box);
}

double alpha_N(double N, int dim, int box) {
  return shell_sum(dim, ball_n2(N), [](int m) { return 1.0 / ((1.0 + m) * (1.0 + m)); }, box);
}

VarianceTable& VarianceTable::global() {
  static VarianceTable table;
  return table;
}

double VarianceTable::get(VarianceKind kind, double N, double t, int dim, int box) {
  if (kind == VarianceKind::alpha) t = 0.0;
  const Key key{static_cast<int>(kind), N, t, dim, box};
  {
    std::shared_lock lock(mu_);
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;
  }
  std::unique_lock lock(mu_);
  if (auto it = cache_.find(key); it != cache_.end()) return it->second;
  const double v = kind == VarianceKind::alpha ? alpha_N(N, dim, box) : sigma_N(t, N, dim, box);
  cache_.emplace(key, v);
  return v;
}

std::vector<VarianceEntry> VarianceTable::entries() const {
  std::shared_lock lock(mu_);
  std::vector<VarianceEntry> out;
  for (const auto& [k, v] : cache_)
    out.push_back({static_cast<VarianceKind>(std::get<0>(k)), std::get<1>(k), std::get<2>(k), v});
  return out;
}

std::string to_string(VarianceKind k) { return k == VarianceKind::alpha ? "alpha" : "sigma"; }

void VarianceTable::write_csv(std::ostream& os, const std::vector<VarianceEntry>& rows) {
  os << "kind,N,t,value\n";
  for (const auto& r : rows)
    os << to_string(r.kind) << ',' << r.N << ',' << r.t << ',' << std::setprecision(17) << r.value
       << std::setprecision(6) << '\n';
}

}  // namespace snlb
