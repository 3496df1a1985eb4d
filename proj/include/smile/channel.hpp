#pragma once

#include <Eigen/Dense>
#include <vector>

#include "smile/rng.hpp"

namespace smile {

// Finite-state Markov channel. Validated models are row-stochastic,
// irreducible and aperiodic, so the stationary distribution exists, is unique
// and strictly positive.
struct ChannelModel {
  Eigen::VectorXd rates;       // per-state emitted rate, nonnegative
  Eigen::MatrixXd transition;  // row-stochastic
  Eigen::VectorXd stationary;  // filled by make_channel
  double mean_rate = 0.0;      // stationary mean of rates

  int states() const { return static_cast<int>(rates.size()); }
};

ChannelModel make_channel(Eigen::VectorXd rates, Eigen::MatrixXd transition);

// Unique stationary row vector of a validated transition matrix. Direct
// linear solve for chains up to 64 states, power iteration as fallback.
Eigen::VectorXd stationary_distribution(const Eigen::MatrixXd& transition);

// M(r, r') = expected number of steps to first reach r' starting from r.
// Zero diagonal.
Eigen::MatrixXd mean_hitting_times(const Eigen::MatrixXd& transition);

// Two-state channel: state 0 emits good_rate, state 1 emits 0. Both stay
// probabilities must lie strictly inside (0, 1).
ChannelModel make_gilbert_elliott(double p_stay_good, double p_stay_bad, double good_rate);

// Same transition structure as the base chain with all rates rescaled so the
// stationary mean equals target_mean.
ChannelModel make_scaled(const Eigen::VectorXd& base_rates, const Eigen::MatrixXd& base_transition,
                         double target_mean);

// Bundled 6-state birth-death chain (quantized Rayleigh fading), rates 0..5,
// stationary mean 5/2.
const Eigen::MatrixXd& rayleigh6_transition();
const Eigen::VectorXd& rayleigh6_rates();
ChannelModel make_rayleigh6_scaled(double target_mean);

// Live chain position. Chains are restless: the engine advances every chain
// exactly once per slot whether or not anyone senses it.
struct ChainState {
  int state = 0;
};

// Advance one slot and return the emitted rate of the state after the move.
double step_chain(const ChannelModel& m, ChainState& st, Rng& rng);

// Draw an initial state from the stationary distribution.
ChainState stationary_start(const ChannelModel& m, Rng& rng);

using ChannelMatrix = std::vector<std::vector<ChannelModel>>;  // cells x channels

// True means mu(cell, channel); the genie input for the stable-allocation
// solver and for regret accounting.
Eigen::MatrixXd mean_matrix(const ChannelMatrix& channels);

}  // namespace smile
