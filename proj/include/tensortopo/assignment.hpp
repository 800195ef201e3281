#pragma once

#include <vector>

#include "tensortopo/types.hpp"

namespace tensortopo {

/// Minimum-cost perfect matching on a square cost matrix (Hungarian method, O(n^3)).
/// Returns col[r], the column assigned to row r. Costs must be finite.
std::vector<Index> solve_assignment(const Matrix& cost);

}  // namespace tensortopo
