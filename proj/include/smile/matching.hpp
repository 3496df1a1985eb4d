#pragma once

#include <Eigen/Dense>
#include <vector>

#include "smile/topology.hpp"

namespace smile {

using Allocation = std::vector<int>;   // cell -> channel
using RateMatrix = Eigen::MatrixXd;    // cells x channels, nonnegative

enum class IterationOutcome { assigned, collision };

struct AllocationIteration {
  int index = 0;  // 1-based
  int cell = 0;
  int channel = 0;
  IterationOutcome outcome = IterationOutcome::assigned;
  std::vector<int> colliders;  // assigned neighbors already holding the channel
  int slots = 0;               // 1 per clean grab, 2 when a collision is resolved
};

struct AllocationResult {
  Allocation assignment;
  std::vector<AllocationIteration> log;
  int total_slots = 0;
};

// Greedy best-entry process: repeatedly take the largest remaining entry
// among unassigned cells (ties: lowest cell, then lowest channel). A cell
// whose grab collides with an assigned neighbor loses that entry only. Exact
// zeros count as already eliminated; a cell left with no entries is a
// deadlock error.
AllocationResult solve_stable(const RateMatrix& rates, const InterferenceGraph& g);

struct StabilityReport {
  bool stable = false;
  // first blocking pair in (cell, channel) scan order when unstable
  int blocking_cell = -1;
  int blocking_channel = -1;
};

// Checks the no-blocking-pair condition: a cell preferring s over its own
// channel must see some assigned neighbor on s with a strictly higher rate.
// The allocation must already be complete and conflict-free.
StabilityReport is_stable(const Allocation& alloc, const RateMatrix& rates,
                          const InterferenceGraph& g);

// Exhaustive scan of all channels^cells assignments; refuses instances with
// more than 1e7 of them.
std::vector<Allocation> enumerate_stable(const RateMatrix& rates, const InterferenceGraph& g);

}  // namespace smile
