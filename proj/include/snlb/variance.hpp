#pragma once

#include <map>
#include <mutex>
#include <ostream>
#include <shared_mutex>
#include <string>
#include <tuple>
#include <vector>

namespace snlb {

/// x - sin(x) without cancellation for small x.
double x_minus_sin(double x);

/// Variance of one undamped convolution mode, int_0^t sin^2(tau w)/w^2 dtau
/// = (2wt - sin 2wt)/(4w^3); t^3/3 for w = 0.
double undamped_mode_variance(double w, double t);

/// sigma_N(t) = sum_{|n| <= N} undamped_mode_variance(|n|^2, t) on Z^dim.
/// `box` >= 0 restricts to |n_i| <= box (grid-limited convolutions).
double sigma_N(double t, double N, int dim = 4, int box = -1);

/// alpha_N = sum_{|n| <= N} <n>^{-4}.
double alpha_N(double N, int dim = 4, int box = -1);

enum class VarianceKind { undamped, alpha };

struct VarianceEntry {
  VarianceKind kind;
  double N;
  double t;
  double value;
};

/// Thread-safe memo of variance sums keyed by (kind, N, t, dim, box).
/// Readers share the lock; a miss computes under the exclusive lock.
class VarianceTable {
 public:
  static VarianceTable& global();

  double get(VarianceKind kind, double N, double t = 0.0, int dim = 4, int box = -1);
  std::vector<VarianceEntry> entries() const;

  /// CSV with header kind,N,t,value.
  static void write_csv(std::ostream& os, const std::vector<VarianceEntry>& rows);

 private:
  using Key = std::tuple<int, double, double, int, int>;
  mutable std::shared_mutex mu_;
  std::map<Key, double> cache_;
};

std::string to_string(VarianceKind k);

}  // namespace snlb
