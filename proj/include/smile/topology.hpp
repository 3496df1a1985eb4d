#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace smile {

// Undirected interference graph over cells 0..cells-1. Two adjacent cells
// transmitting on the same channel in the same slot destroy each other's
// throughput; non-adjacent cells reuse channels freely.
struct InterferenceGraph {
  int cells = 0;
  std::vector<std::pair<int, int>> edges;   // normalized a < b, sorted, unique
  std::vector<std::vector<int>> neighbors;  // sorted per cell
  std::vector<int> degree;

  bool adjacent(int a, int b) const;
  int max_degree() const;
};

InterferenceGraph make_graph(int cells, std::vector<std::pair<int, int>> edges);

// True when every cell can hold a channel distinct from all neighbors:
// channels >= max degree + 1. Failure is advisory; a stable allocation can
// still exist on specific rate matrices.
bool feasible_channel_count(const InterferenceGraph& g, int channels);

// Erdos-Renyi G(n, p) with a fixed edge scan order, reproducible by seed.
InterferenceGraph random_graph(int cells, double edge_prob, std::uint64_t seed);

}  // namespace smile
