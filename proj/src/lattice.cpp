#include "snlb/lattice.hpp"

#include <cmath>

namespace snlb {

std::vector<std::int64_t> shell_counts(int dim, int n2max, int box) {
  // 1D representations j^2 with multiplicity 1 (j = 0) or 2
  std::vector<std::pair<int, int>> squares;
  for (int j = 0; j * j <= n2max; ++j) {
    if (box >= 0 && j > box) break;
    squares.push_back({j * j, j == 0 ? 1 : 2});
  }
  std::vector<std::int64_t> acc(static_cast<std::size_t>(n2max) + 1, 0);
  acc[0] = 1;
  for (int d = 0; d < dim; ++d) {
    std::vector<std::int64_t> next(acc.size(), 0);
    for (std::size_t a = 0; a < acc.size(); ++a) {
      if (!acc[a]) continue;
      for (const auto& [sq, mult] : squares) {
        if (a + sq >= acc.size()) break;
        next[a + sq] += acc[a] * mult;
      }
    }
    acc.swap(next);
  }
  return acc;
}

}  // namespace snlb
