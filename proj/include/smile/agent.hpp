#pragma once

#include <map>
#include <vector>

namespace smile {

struct AgentParams {
  double kappa = 1.0;     // scales every exploration coefficient
  double delta_sq = 1e-6; // floor under squared estimate gaps
  double epsilon = 0.0;   // slack subtracted from squared gaps
  double i_const = 1.0;   // 2 / i_const floors the exploration threshold
};

enum class AgentPhase { init, explore_re, explore_ee, await, alloc, exploit };

// Per-channel exploration bookkeeping. Only counted samples (the recovery
// exit and estimation-epoch observations, plus the single initialization
// sample) enter the estimate.
struct ChannelStats {
  long long ee_samples = 0;  // T^EE
  double ee_sum = 0.0;       // summed rates of counted samples
  int epochs = 1;            // exploration epoch counter, 1 before the first sample
  int anchor = -1;           // last counted state; recovery target of the next epoch
};

// One cell's local learning state: rate estimates per channel, exploration
// epoch machinery, and the collision registry of neighbor estimates picked up
// during allocation phases.
class AgentState {
public:
  AgentState(int cell, int channels, std::vector<int> neighbors, AgentParams params);

  int cell() const { return cell_; }
  int channels() const { return channels_; }
  int degree() const { return static_cast<int>(neighbors_.size()); }
  const AgentParams& params() const { return params_; }
  AgentPhase phase() const { return phase_; }
  int active_channel() const { return active_; }
  const ChannelStats& stats(int channel) const { return stats_.at(channel); }

  // one initialization sample per channel, lockstep with the global clock
  void init_sample(int channel, int state, double rate);
  bool initialized() const;

  double estimate(int channel) const;

  // the degree+1 apparently best channels, ties to the lowest index
  std::vector<int> preferred_set() const;

  double row_coefficient(int channel) const;
  double column_coefficient(int channel) const;
  double exploration_coefficient(int channel) const;

  // true while ee_samples < max{coefficient, 2/I} * ln t
  bool exploration_needed(int channel, long long t) const;
  // lowest channel index that still needs exploration at time t, or -1
  int next_exploration_channel(long long t) const;

  void begin_exploration(int channel);
  // recovery slot; counts the sample and arms the estimation epoch once the
  // anchor state shows up (possibly on the very first slot)
  bool run_recovery_step(int channel, int state, double rate);
  // estimation slot; returns true when the epoch completes
  bool run_estimation_step(int channel, int state, double rate);
  long long estimation_remaining() const { return ee_remaining_; }

  void set_phase(AgentPhase p) { phase_ = p; }

  void record_collision(int channel, int neighbor, double neighbor_estimate);
  const std::map<int, double>& registry(int channel) const { return registry_.at(channel); }

  int exploitation_phases() const { return exploitation_phases_; }
  void complete_exploitation() { ++exploitation_phases_; }

private:
  int cell_;
  int channels_;
  std::vector<int> neighbors_;
  AgentParams params_;
  AgentPhase phase_ = AgentPhase::init;
  int active_ = -1;
  long long ee_remaining_ = 0;
  std::vector<ChannelStats> stats_;
  std::vector<std::map<int, double>> registry_;  // per channel: neighbor -> estimate
  int exploitation_phases_ = 0;
};

}  // namespace smile
