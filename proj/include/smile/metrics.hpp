#pragma once

#include <Eigen/Dense>
#include <vector>

#include "smile/channel.hpp"
#include "smile/engine.hpp"
#include "smile/matching.hpp"
#include "smile/topology.hpp"

namespace smile {

// ============================================================
// system constants
// ============================================================

struct SystemConstants {
  double pi_min = 0.0;       // smallest stationary probability anywhere
  double pi_hat_max = 0.0;   // largest of max{pi, 1-pi} anywhere
  double r_max = 0.0;        // largest single-state rate
  double rbar_max = 0.0;     // largest per-pair sum of state rates
  double q_max = 0.0;        // worst per-pair (min pi)^-1 * sum of rates
  int c_max = 0;             // largest state-space size
  double lambda_max = 0.0;   // largest second eigenvalue modulus
  double lambda_bar_min = 0.0;  // 1 - lambda_max
  Eigen::MatrixXd lambda;      // per pair: second-largest eigenvalue modulus
  Eigen::MatrixXd lambda_bar;  // per pair: spectral gap
  Eigen::MatrixXd m_max;       // per pair: worst mean hitting time
  double kappa = 0.0;
  double i_const = 0.0;
  double epsilon = 0.0;  // the slack the constants were computed with
};

// Second eigenvalues are taken by modulus of the transition matrix itself.
SystemConstants compute_constants(const ChannelMatrix& channels, double epsilon);

// ============================================================
// exploration coefficients from true means
// ============================================================

// per cell and channel: which neighbors' estimates the cell holds for that
// channel (picked up through allocation collisions)
using RegistrySets = std::vector<std::vector<std::vector<int>>>;

// worst-case registries: every neighbor is assumed to have collided everywhere
RegistrySets all_neighbor_registries(const InterferenceGraph& g, int channels);

struct ExplorationCoefficients {
  Eigen::MatrixXd row;
  Eigen::MatrixXd column;
  Eigen::MatrixXd combined;
};

ExplorationCoefficients true_exploration_coefficients(const RateMatrix& means,
                                                      const InterferenceGraph& g,
                                                      const RegistrySets& v, double kappa);

// smallest relevant mean gap: row gaps over all channel pairs, column gaps
// over registry pairs; +inf when no pair exists at all
double delta_min(const RateMatrix& means, const RegistrySets& v);

// ============================================================
// regret bound evaluator
// ============================================================

struct BoundBreakdown {
  double exploration_transient = 0.0;   // switching cost while exploring
  double exploration_suboptimal = 0.0;  // off-allocation loss while exploring
  double allocation_transient = 0.0;
  double allocation_suboptimal = 0.0;
  double exploitation = 0.0;  // switching into phases plus wrong-allocation phases
  double total = 0.0;
  bool constant_term_omitted = true;  // the additive constant is reported as zero
  Eigen::MatrixXd script_e;           // per pair: exploration scale used by the bound
  double delta_min_sq = 0.0;
};

// Genie-side regret envelope at horizon t; every term is exposed so the
// evaluation can be audited line by line.
BoundBreakdown theorem1_bound(const SystemConstants& c, const ChannelMatrix& channels,
                              const InterferenceGraph& g, const Allocation& oracle_alloc,
                              const RegistrySets& v, double epsilon, long long t);

// ============================================================
// regret accounting
// ============================================================

struct RegretTrace {
  double oracle_value = 0.0;
  std::vector<double> cumulative_sum;  // realized system rate summed up to each slot
  std::vector<double> regret;          // t * oracle_value - cumulative_sum[t-1]
  int replication = 0;
};

// total mean rate of an allocation; silent cells contribute zero
double allocation_value(const RateMatrix& means, const Allocation& alloc);

// cumulative regret per slot: R[t-1] = t * oracle_value - sum of realized rates
std::vector<double> cumulative_regret(const std::vector<double>& slot_sums,
                                      double oracle_value);

// Instantaneous values may be negative: a realized rate can beat its mean.
RegretTrace regret_from_outcomes(const std::vector<SlotRecord>& outcomes,
                                 const Allocation& oracle_alloc, const RateMatrix& means);

}  // namespace smile
