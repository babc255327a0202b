#include "assignment.hpp"

#include <limits>

namespace persona_eval::detail {

Assignment max_weight_assignment(const std::vector<double>& weights, std::size_t n) {
  Assignment result;
  if (n == 0) return result;

  // Minimise negated weights. Arrays are 1-based; index 0 is the virtual
  // column used while growing the alternating tree.
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> row_of_col(n + 1, 0), way(n + 1, 0);
  auto cost = [&](std::size_t r, std::size_t c) { return -weights[(r - 1) * n + (c - 1)]; };

  for (std::size_t r = 1; r <= n; ++r) {
    row_of_col[0] = r;
    std::size_t c0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<bool> used(n + 1, false);
    do {
      used[c0] = true;
      const std::size_t r0 = row_of_col[c0];
      double delta = inf;
      std::size_t c1 = 0;
      for (std::size_t c = 1; c <= n; ++c) {
        if (used[c]) continue;
        const double reduced = cost(r0, c) - u[r0] - v[c];
        if (reduced < minv[c]) {
          minv[c] = reduced;
          way[c] = c0;
        }
        if (minv[c] < delta) {
          delta = minv[c];
          c1 = c;
        }
      }
      for (std::size_t c = 0; c <= n; ++c) {
        if (used[c]) {
          u[row_of_col[c]] += delta;
          v[c] -= delta;
        } else {
          minv[c] -= delta;
        }
      }
      c0 = c1;
    } while (row_of_col[c0] != 0);
    do {
      const std::size_t c1 = way[c0];
      row_of_col[c0] = row_of_col[c1];
      c0 = c1;
    } while (c0 != 0);
  }

  result.column_of_row.assign(n, 0);
  for (std::size_t c = 1; c <= n; ++c) {
    result.column_of_row[row_of_col[c] - 1] = c - 1;
  }
  for (std::size_t r = 0; r < n; ++r) result.weight += weights[r * n + result.column_of_row[r]];
  return result;
}

}  // namespace persona_eval::detail
