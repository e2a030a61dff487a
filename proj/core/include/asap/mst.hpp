#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "asap/types.hpp"

namespace asap {

// Minimum spanning tree of the complete graph with the given symmetric
// weights (row-major n x n; diagonal ignored), by Prim's algorithm grown from
// vertex 0. Among equal-weight crossing edges the lexicographically smallest
// (min index, max index) edge is taken, so equal weights everywhere yield
// the star centred on 0. Edges are returned canonical (first < second) in
// the order they join the tree.
//
// Throws std::invalid_argument for n < 2, a size mismatch, or a weight that
// is non-finite or not positive.
std::vector<Pair> mst(std::size_t n, std::span<const double> weights);

double tree_weight(std::size_t n, std::span<const double> weights,
                   std::span<const Pair> edges);

}  // namespace asap
