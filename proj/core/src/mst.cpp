#include "asap/mst.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace asap {

std::vector<Pair> mst(std::size_t n, std::span<const double> weights) {
  if (n < 2) throw std::invalid_argument("mst: n must be >= 2");
  if (weights.size() != n * n) {
    throw std::invalid_argument("mst: weight matrix must be n x n");
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double w = weights[i * n + j];
      if (!std::isfinite(w) || !(w > 0.0)) {
        throw std::invalid_argument("mst: weight (" + std::to_string(i) + "," +
                                    std::to_string(j) +
                                    ") is not finite and positive");
      }
    }
  }

  std::vector<char> in_tree(n, 0);
  std::vector<double> best(n, std::numeric_limits<double>::infinity());
  std::vector<Pair> best_edge(n);
  std::vector<Pair> edges;
  edges.reserve(n - 1);

  auto attach = [&](std::size_t u) {
    in_tree[u] = 1;
    for (std::size_t v = 0; v < n; ++v) {
      if (in_tree[v]) continue;
      const double w = weights[u * n + v];
      const Pair e = Pair::canonical(u, v);
      if (w < best[v] || (w == best[v] && e < best_edge[v])) {
        best[v] = w;
        best_edge[v] = e;
      }
    }
  };

  attach(0);
  for (std::size_t step = 1; step < n; ++step) {
    std::size_t pick = n;
    for (std::size_t v = 0; v < n; ++v) {
      if (in_tree[v]) continue;
      if (pick == n || best[v] < best[pick] ||
          (best[v] == best[pick] && best_edge[v] < best_edge[pick])) {
        pick = v;
      }
    }
    edges.push_back(best_edge[pick]);
    attach(pick);
  }
  return edges;
}

double tree_weight(std::size_t n, std::span<const double> weights,
                   std::span<const Pair> edges) {
  double total = 0.0;
  for (const Pair& e : edges) total += weights[e.first * n + e.second];
  return total;
}

}  // namespace asap
