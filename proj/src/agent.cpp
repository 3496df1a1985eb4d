#include "smile/agent.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "smile/error.hpp"

namespace smile {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

AgentState::AgentState(int cell, int channels, std::vector<int> neighbors, AgentParams params)
    : cell_(cell), channels_(channels), neighbors_(std::move(neighbors)), params_(params) {
  if (channels < 1) raise(Errc::bad_argument, "agent needs at least one channel");
  if (params_.kappa <= 0.0 || params_.delta_sq <= 0.0 || params_.i_const <= 0.0 ||
      params_.epsilon < 0.0)
    raise(Errc::bad_config, "agent parameters out of range");
  std::sort(neighbors_.begin(), neighbors_.end());
  stats_.resize(channels);
  registry_.resize(channels);
}

void AgentState::init_sample(int channel, int state, double rate) {
  if (phase_ != AgentPhase::init) raise(Errc::wrong_phase, "initialization is over");
  ChannelStats& st = stats_.at(channel);
  if (st.ee_samples != 0) raise(Errc::double_init, "channel already initialized");
  st.ee_samples = 1;
  st.ee_sum = rate;
  st.anchor = state;
  st.epochs = 2;
}

bool AgentState::initialized() const {
  return std::all_of(stats_.begin(), stats_.end(),
                     [](const ChannelStats& s) { return s.ee_samples > 0; });
}

double AgentState::estimate(int channel) const {
  const ChannelStats& st = stats_.at(channel);
  return st.ee_samples > 0 ? st.ee_sum / static_cast<double>(st.ee_samples) : 0.0;
}

std::vector<int> AgentState::preferred_set() const {
  std::vector<int> order(channels_);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [this](int a, int b) { return estimate(a) > estimate(b); });
  const int take = std::min(channels_, degree() + 1);
  order.resize(take);
  return order;
}

double AgentState::row_coefficient(int channel) const {
  const std::vector<int> pref = preferred_set();
  const double own = estimate(channel);
  const bool in_pref = std::find(pref.begin(), pref.end(), channel) != pref.end();

  double gap_sq = kInf;
  if (in_pref) {
    for (int p = 0; p < channels_; ++p) {
      if (p == channel) continue;
      const double d = own - estimate(p);
      gap_sq = std::min(gap_sq, d * d);
    }
  } else {
    double low = kInf;
    for (int p : pref) low = std::min(low, estimate(p));
    const double d = own - low;
    gap_sq = d * d;
  }
  if (gap_sq == kInf) return 0.0;  // single channel, nothing to separate
  return 4.0 * params_.kappa / std::max(params_.delta_sq, gap_sq - params_.epsilon);
}

double AgentState::column_coefficient(int channel) const {
  const std::map<int, double>& reg = registry_.at(channel);
  if (reg.empty()) return 0.0;
  const double own = estimate(channel);
  double gap_sq = kInf;
  for (const auto& [neighbor, value] : reg) {
    const double d = own - value;
    gap_sq = std::min(gap_sq, d * d);
  }
  return 4.0 * params_.kappa / std::max(params_.delta_sq, gap_sq - params_.epsilon);
}

double AgentState::exploration_coefficient(int channel) const {
  return std::max(row_coefficient(channel), column_coefficient(channel));
}

bool AgentState::exploration_needed(int channel, long long t) const {
  if (t < 1) raise(Errc::bad_argument, "time starts at 1");
  const double threshold =
      std::max(exploration_coefficient(channel), 2.0 / params_.i_const) *
      std::log(static_cast<double>(t));
  return static_cast<double>(stats_.at(channel).ee_samples) < threshold;
}

int AgentState::next_exploration_channel(long long t) const {
  for (int s = 0; s < channels_; ++s)
    if (exploration_needed(s, t)) return s;
  return -1;
}

void AgentState::begin_exploration(int channel) {
  if (phase_ != AgentPhase::await) raise(Errc::wrong_phase, "can only explore from await");
  if (stats_.at(channel).ee_samples == 0) raise(Errc::wrong_phase, "channel not initialized");
  phase_ = AgentPhase::explore_re;
  active_ = channel;
}

bool AgentState::run_recovery_step(int channel, int state, double rate) {
  if (phase_ != AgentPhase::explore_re || channel != active_)
    raise(Errc::wrong_phase, "not recovering this channel");
  ChannelStats& st = stats_[channel];
  if (state != st.anchor) return false;
  st.ee_samples += 1;
  st.ee_sum += rate;
  phase_ = AgentPhase::explore_ee;
  ee_remaining_ = 1LL << (2 * (st.epochs - 1));  // 4^(epochs-1)
  return true;
}

bool AgentState::run_estimation_step(int channel, int state, double rate) {
  if (phase_ != AgentPhase::explore_ee || channel != active_)
    raise(Errc::wrong_phase, "not estimating this channel");
  ChannelStats& st = stats_[channel];
  st.ee_samples += 1;
  st.ee_sum += rate;
  if (--ee_remaining_ > 0) return false;
  st.epochs += 1;
  st.anchor = state;  // the next recovery epoch hunts for the last state seen
  phase_ = AgentPhase::await;
  active_ = -1;
  return true;
}

void AgentState::record_collision(int channel, int neighbor, double neighbor_estimate) {
  if (!std::binary_search(neighbors_.begin(), neighbors_.end(), neighbor))
    raise(Errc::not_a_neighbor, "collision with a cell outside the neighborhood");
  registry_.at(channel)[neighbor] = neighbor_estimate;
}

}  // namespace smile
