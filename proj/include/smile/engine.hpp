#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "smile/agent.hpp"
#include "smile/channel.hpp"
#include "smile/matching.hpp"
#include "smile/topology.hpp"

namespace smile {

enum class Policy { smile, oracle, random };

enum class SlotPhase { init, explore, await, alloc, exploit };

struct CellSlot {
  int channel = -1;       // -1 when silent
  double sensed = 0.0;    // current rate of the chosen channel
  double realized = 0.0;  // throughput after the collision rule
  SlotPhase phase = SlotPhase::await;
};

struct SlotRecord {
  long long t = 0;  // 1-based
  std::vector<CellSlot> cells;
};

using SlotSink = std::function<void(const SlotRecord&)>;
// chain states after each slot's advance, for trajectory comparisons
using ChainSink = std::function<void(long long t, const Eigen::MatrixXi& states)>;

struct EngineConfig {
  long long horizon = 0;
  Policy policy = Policy::smile;
  AgentParams agent;                       // smile only
  std::uint64_t seed = 1;
  std::optional<int> fixed_initial_state;  // default: stationary draw per chain
};

struct AllocationPhaseRecord {
  long long start_t = 0;  // first slot consumed by the phase
  AllocationResult result;
};

struct RunTrace {
  long long slots_played = 0;
  std::vector<AllocationPhaseRecord> allocations;  // smile
  Allocation oracle_assignment;                    // oracle
  std::vector<AgentState> agents;                  // smile, final snapshot
  int completed_exploitations = 0;
  int aborted_exploitations = 0;
};

// Realized throughput for one slot: a transmitting cell scores its sensed
// rate unless some neighbor chose the same channel; silent cells score 0.
std::vector<double> resolve_slot(const std::vector<int>& choices, const Eigen::MatrixXd& rates,
                                 const InterferenceGraph& g);

// Distributed allocation round over the agents' current estimates. Each cell
// bids its best remaining entry; the highest bid wins the backoff race (ties:
// lowest cell, then lowest channel). A winner colliding with assigned
// neighbors spends a second slot on the exchange that fills both collision
// registries and drops only the contested entry. Consumes no engine slots
// itself; the caller replays the returned log against live chains.
AllocationResult run_allocation_protocol(std::vector<AgentState>& agents,
                                         const InterferenceGraph& g);

RunTrace run_engine(const ChannelMatrix& channels, const InterferenceGraph& g,
                    const EngineConfig& cfg, const SlotSink& sink = nullptr,
                    const ChainSink& chain_sink = nullptr);

}  // namespace smile
