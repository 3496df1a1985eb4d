#include "smile/topology.hpp"

#include <algorithm>

#include "smile/error.hpp"
#include "smile/rng.hpp"

namespace smile {

bool InterferenceGraph::adjacent(int a, int b) const {
  const auto& n = neighbors[a];
  return std::binary_search(n.begin(), n.end(), b);
}

int InterferenceGraph::max_degree() const {
  int d = 0;
  for (int v : degree) d = std::max(d, v);
  return d;
}

InterferenceGraph make_graph(int cells, std::vector<std::pair<int, int>> edges) {
  if (cells < 1) raise(Errc::bad_argument, "graph needs at least one cell");

  for (auto& [a, b] : edges) {
    if (a == b) raise(Errc::self_loop, "cell cannot interfere with itself");
    if (a < 0 || b < 0 || a >= cells || b >= cells)
      raise(Errc::index_out_of_range, "edge endpoint outside cell range");
    if (a > b) std::swap(a, b);
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

  InterferenceGraph g;
  g.cells = cells;
  g.edges = std::move(edges);
  g.neighbors.assign(cells, {});
  for (auto [a, b] : g.edges) {
    g.neighbors[a].push_back(b);
    g.neighbors[b].push_back(a);
  }
  for (auto& n : g.neighbors) std::sort(n.begin(), n.end());
  g.degree.resize(cells);
  for (int v = 0; v < cells; ++v) g.degree[v] = static_cast<int>(g.neighbors[v].size());
  return g;
}

bool feasible_channel_count(const InterferenceGraph& g, int channels) {
  return channels >= g.max_degree() + 1;
}

InterferenceGraph random_graph(int cells, double edge_prob, std::uint64_t seed) {
  if (edge_prob < 0.0 || edge_prob > 1.0) raise(Errc::bad_argument, "edge probability outside [0, 1]");
  Rng rng(derive_seed(seed, 0x67726170686d6bULL));
  std::vector<std::pair<int, int>> edges;
  for (int a = 0; a < cells; ++a)
    for (int b = a + 1; b < cells; ++b)
      if (rng.uniform01() < edge_prob) edges.emplace_back(a, b);
  return make_graph(cells, std::move(edges));
}

}  // namespace smile
