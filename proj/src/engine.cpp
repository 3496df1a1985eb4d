#include "smile/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "smile/error.hpp"
#include "smile/rng.hpp"

namespace smile {

namespace {

constexpr std::uint64_t kChainTag = 0x636861696e73ULL;
constexpr std::uint64_t kPolicyTag = 0x706f6c696379ULL;
constexpr long long kNever = std::numeric_limits<long long>::max();

SlotPhase to_slot_phase(AgentPhase p) {
  switch (p) {
    case AgentPhase::init: return SlotPhase::init;
    case AgentPhase::explore_re:
    case AgentPhase::explore_ee: return SlotPhase::explore;
    case AgentPhase::await: return SlotPhase::await;
    case AgentPhase::alloc: return SlotPhase::alloc;
    case AgentPhase::exploit: return SlotPhase::exploit;
  }
  return SlotPhase::await;
}

}  // namespace

std::vector<double> resolve_slot(const std::vector<int>& choices, const Eigen::MatrixXd& rates,
                                 const InterferenceGraph& g) {
  const int cells = g.cells;
  std::vector<double> out(cells, 0.0);
  for (int l = 0; l < cells; ++l) {
    const int s = choices[l];
    if (s < 0) continue;
    bool jammed = false;
    for (int q : g.neighbors[l]) {
      if (choices[q] == s) {
        jammed = true;
        break;
      }
    }
    out[l] = jammed ? 0.0 : rates(l, s);
  }
  return out;
}

AllocationResult run_allocation_protocol(std::vector<AgentState>& agents,
                                         const InterferenceGraph& g) {
  const int cells = static_cast<int>(agents.size());
  if (cells != g.cells) raise(Errc::dimension_mismatch, "agent count != cell count");
  const int chans = agents.empty() ? 0 : agents[0].channels();

  // each cell's private view: its estimates with locally dropped entries
  std::vector<std::vector<double>> view(cells);
  for (int l = 0; l < cells; ++l) {
    view[l].resize(chans);
    for (int s = 0; s < chans; ++s) view[l][s] = agents[l].estimate(s);
  }

  AllocationResult result;
  result.assignment.assign(cells, -1);
  int unassigned = cells;

  while (unassigned > 0) {
    // backoff race: every unassigned cell bids its best remaining entry;
    // the largest bid transmits first
    int winner = -1, channel = -1;
    double top = 0.0;
    for (int l = 0; l < cells; ++l) {
      if (result.assignment[l] >= 0) continue;
      int my_channel = -1;
      double my_bid = 0.0;
      for (int s = 0; s < chans; ++s) {
        if (view[l][s] > my_bid) {
          my_bid = view[l][s];
          my_channel = s;
        }
      }
      if (my_channel >= 0 && my_bid > top) {
        top = my_bid;
        winner = l;
        channel = my_channel;
      }
    }
    if (winner < 0) raise(Errc::deadlock, "no unassigned cell can still bid");

    AllocationIteration it;
    it.index = static_cast<int>(result.log.size()) + 1;
    it.cell = winner;
    it.channel = channel;
    for (int q : g.neighbors[winner])
      if (result.assignment[q] == channel) it.colliders.push_back(q);

    if (it.colliders.empty()) {
      it.outcome = IterationOutcome::assigned;
      it.slots = 1;
      result.assignment[winner] = channel;
      --unassigned;
    } else {
      // second slot: both sides learn who they are contending with
      it.outcome = IterationOutcome::collision;
      it.slots = 2;
      for (int q : it.colliders) {
        agents[winner].record_collision(channel, q, agents[q].estimate(channel));
        agents[q].record_collision(channel, winner, agents[winner].estimate(channel));
      }
      view[winner][channel] = 0.0;
    }
    result.total_slots += it.slots;
    result.log.push_back(std::move(it));
  }
  return result;
}

namespace {

// ============================================================================
// engine
// ============================================================================

class Engine {
public:
  Engine(const ChannelMatrix& channels, const InterferenceGraph& g, const EngineConfig& cfg,
         const SlotSink& sink, const ChainSink& chain_sink)
      : channels_(channels), graph_(g), cfg_(cfg), sink_(sink), chain_sink_(chain_sink) {
    cells_ = static_cast<int>(channels.size());
    if (cells_ == 0 || g.cells != cells_) raise(Errc::dimension_mismatch, "graph/channel mismatch");
    chans_ = static_cast<int>(channels[0].size());
    for (const auto& row : channels)
      if (static_cast<int>(row.size()) != chans_) raise(Errc::dimension_mismatch, "ragged channels");
    if (chans_ == 0) raise(Errc::bad_argument, "need at least one channel");
    if (cfg.horizon == 0) raise(Errc::horizon_zero, "horizon must be positive");
    if (cfg.horizon < 0) raise(Errc::bad_config, "negative horizon");
    if (cfg.policy == Policy::smile && cfg.horizon < chans_)
      raise(Errc::bad_config, "horizon shorter than the initialization sweep");

    chain_.resize(cells_);
    rng_.reserve(cells_);
    for (int l = 0; l < cells_; ++l) {
      chain_[l].resize(chans_);
      auto& row = rng_.emplace_back();
      row.reserve(chans_);
      for (int s = 0; s < chans_; ++s) {
        row.emplace_back(derive_seed(cfg.seed, kChainTag,
                                     static_cast<std::uint64_t>(l) * 65536u + s));
        const ChannelModel& m = channels_[l][s];
        if (cfg.fixed_initial_state) {
          const int st = *cfg.fixed_initial_state;
          if (st < 0 || st >= m.states()) raise(Errc::bad_config, "initial state out of range");
          chain_[l][s] = ChainState{st};
        } else {
          chain_[l][s] = stationary_start(m, row.back());
        }
      }
    }
    rate_.resize(cells_, chans_);
    state_.resize(cells_, chans_);
    record_.cells.resize(cells_);
    choices_.assign(cells_, -1);
  }

  RunTrace run() {
    switch (cfg_.policy) {
      case Policy::oracle: run_oracle(); break;
      case Policy::random: run_random(); break;
      case Policy::smile: run_smile(); break;
    }
    trace_.slots_played = t_;
    return std::move(trace_);
  }

private:
  void advance_chains() {
    for (int l = 0; l < cells_; ++l) {
      for (int s = 0; s < chans_; ++s) {
        rate_(l, s) = step_chain(channels_[l][s], chain_[l][s], rng_[l][s]);
        state_(l, s) = chain_[l][s].state;
      }
    }
    if (chain_sink_) chain_sink_(t_ + 1, state_);
  }

  // one full slot: advance chains, apply the collision rule, emit, move time
  void play_slot(SlotPhase fallback_phase, bool per_agent_phase) {
    advance_chains();
    record_.t = t_ + 1;
    for (int l = 0; l < cells_; ++l) {
      CellSlot& c = record_.cells[l];
      c.channel = choices_[l];
      c.sensed = choices_[l] >= 0 ? rate_(l, choices_[l]) : 0.0;
      c.phase = per_agent_phase ? to_slot_phase(agents_[l].phase()) : fallback_phase;
      c.realized = 0.0;
    }
    for (int l = 0; l < cells_; ++l) {
      const int s = choices_[l];
      if (s < 0) continue;
      bool jammed = false;
      for (int q : graph_.neighbors[l]) {
        if (choices_[q] == s) {
          jammed = true;
          break;
        }
      }
      record_.cells[l].realized = jammed ? 0.0 : rate_(l, s);
    }
    if (sink_) sink_(record_);
    ++t_;
  }

  bool horizon_reached() const { return t_ >= cfg_.horizon; }

  void run_oracle() {
    const auto solved = solve_stable(mean_matrix(channels_), graph_);
    trace_.oracle_assignment = solved.assignment;
    choices_ = solved.assignment;
    while (!horizon_reached()) play_slot(SlotPhase::exploit, false);
  }

  void run_random() {
    Rng policy_rng(derive_seed(cfg_.seed, kPolicyTag));
    while (!horizon_reached()) {
      for (int l = 0; l < cells_; ++l) choices_[l] = policy_rng.uniform_int(chans_);
      play_slot(SlotPhase::exploit, false);
    }
  }

  // --------------------------------------------------------------------------
  // smile
  // --------------------------------------------------------------------------

  // smallest t at which the pair (cell, channel) crosses its exploration
  // threshold; the threshold only moves with ln t while estimates are frozen
  long long pair_trigger(const AgentState& a, int s) const {
    const long long samples = a.stats(s).ee_samples;
    const double c = std::max(a.exploration_coefficient(s), 2.0 / a.params().i_const);
    const double crossing = static_cast<double>(samples) / c;
    if (crossing > 43.0) return kNever;  // e^43 > 4e18 slots
    long long e = static_cast<long long>(std::floor(std::exp(crossing))) + 1;
    if (e < 1) e = 1;
    while (e > 1 && a.exploration_needed(s, e - 1)) --e;
    while (!a.exploration_needed(s, e)) ++e;
    return e;
  }

  long long agent_trigger(const AgentState& a) const {
    long long best = kNever;
    for (int s = 0; s < chans_; ++s) best = std::min(best, pair_trigger(a, s));
    return best;
  }

  void run_smile() {
    agents_.clear();
    agents_.reserve(cells_);
    for (int l = 0; l < cells_; ++l) {
      std::vector<int> nbrs = graph_.neighbors[l];
      agents_.emplace_back(l, chans_, std::move(nbrs), cfg_.agent);
    }

    // lockstep initialization: every cell samples channel k in slot k
    for (int k = 0; k < chans_ && !horizon_reached(); ++k) {
      std::fill(choices_.begin(), choices_.end(), k);
      play_slot(SlotPhase::init, true);
      for (int l = 0; l < cells_; ++l) agents_[l].init_sample(k, state_(l, k), rate_(l, k));
    }
    if (horizon_reached()) {
      finish_smile();
      return;
    }
    for (auto& a : agents_) a.set_phase(AgentPhase::await);

    std::vector<long long> wake(cells_, 0);
    int completed = 0;

    while (!horizon_reached()) {
      // exploration cycle: agents below threshold run full epochs, the rest
      // stay silent until everyone is ready
      for (int l = 0; l < cells_; ++l) wake[l] = agent_trigger(agents_[l]);
      while (!horizon_reached()) {
        bool all_ready = true;
        for (int l = 0; l < cells_; ++l) {
          AgentState& a = agents_[l];
          if (a.phase() == AgentPhase::await && wake[l] <= t_) {
            const int s = a.next_exploration_channel(t_);
            if (s >= 0)
              a.begin_exploration(s);
            else
              wake[l] = agent_trigger(a);
          }
          if (a.phase() != AgentPhase::await) all_ready = false;
        }
        if (all_ready) break;

        for (int l = 0; l < cells_; ++l) {
          const AgentState& a = agents_[l];
          choices_[l] = a.active_channel();
        }
        play_slot(SlotPhase::explore, true);
        for (int l = 0; l < cells_; ++l) {
          AgentState& a = agents_[l];
          const int s = a.active_channel();
          if (s < 0) continue;
          if (a.phase() == AgentPhase::explore_re) {
            a.run_recovery_step(s, state_(l, s), rate_(l, s));
          } else if (a.phase() == AgentPhase::explore_ee) {
            if (a.run_estimation_step(s, state_(l, s), rate_(l, s)))
              wake[l] = agent_trigger(a);
          }
        }
      }
      if (horizon_reached()) break;

      // allocation phase, then replay its slot script against live chains
      for (auto& a : agents_) a.set_phase(AgentPhase::alloc);
      AllocationPhaseRecord phase;
      phase.start_t = t_ + 1;
      phase.result = run_allocation_protocol(agents_, graph_);
      trace_.allocations.push_back(phase);
      const AllocationResult& alloc = trace_.allocations.back().result;

      std::vector<int> assigned(cells_, -1);
      for (const auto& it : alloc.log) {
        if (horizon_reached()) break;
        choices_ = assigned;
        choices_[it.cell] = it.channel;
        play_slot(SlotPhase::alloc, true);
        if (it.outcome == IterationOutcome::collision) {
          if (horizon_reached()) break;
          play_slot(SlotPhase::alloc, true);
        } else {
          assigned[it.cell] = it.channel;
        }
      }
      if (horizon_reached()) break;

      // exploitation: transmit on the allocation until the phase budget runs
      // out or some pair's threshold catches up with the clock
      for (auto& a : agents_) a.set_phase(AgentPhase::exploit);
      const long long budget =
          completed >= 31 ? kNever : (2LL << (2 * completed));  // 2 * 4^completed
      long long trigger = kNever;
      for (const auto& a : agents_) trigger = std::min(trigger, agent_trigger(a));

      bool interrupted = false;
      for (long long n = 0; n < budget && !horizon_reached(); ++n) {
        if (t_ >= trigger) {
          interrupted = true;
          break;
        }
        choices_ = alloc.assignment;
        play_slot(SlotPhase::exploit, true);
      }
      if (!horizon_reached()) {
        if (interrupted) {
          ++trace_.aborted_exploitations;
        } else {
          ++completed;
          ++trace_.completed_exploitations;
          for (auto& a : agents_) a.complete_exploitation();
        }
      }
      for (auto& a : agents_) a.set_phase(AgentPhase::await);
    }
    finish_smile();
  }

  void finish_smile() { trace_.agents = agents_; }

  const ChannelMatrix& channels_;
  const InterferenceGraph& graph_;
  EngineConfig cfg_;
  const SlotSink& sink_;
  const ChainSink& chain_sink_;

  int cells_ = 0;
  int chans_ = 0;
  long long t_ = 0;
  std::vector<std::vector<ChainState>> chain_;
  std::vector<std::vector<Rng>> rng_;
  Eigen::MatrixXd rate_;
  Eigen::MatrixXi state_;
  std::vector<int> choices_;
  SlotRecord record_;
  std::vector<AgentState> agents_;
  RunTrace trace_;
};

}  // namespace

RunTrace run_engine(const ChannelMatrix& channels, const InterferenceGraph& g,
                    const EngineConfig& cfg, const SlotSink& sink, const ChainSink& chain_sink) {
  Engine engine(channels, g, cfg, sink, chain_sink);
  return engine.run();
}

}  // namespace smile
