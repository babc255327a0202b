#pragma once

#include <cstddef>
#include <vector>

namespace persona_eval::detail {

/// Maximum-weight perfect assignment on a square n x n matrix (Hungarian
/// method with potentials, O(n^3)). Returns row -> column.
struct Assignment {
  std::vector<std::size_t> column_of_row;
  double weight = 0.0;
};

Assignment max_weight_assignment(const std::vector<double>& weights, std::size_t n);

}  // namespace persona_eval::detail
