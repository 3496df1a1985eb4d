#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "smile/channel.hpp"
#include "smile/engine.hpp"
#include "smile/metrics.hpp"
#include "smile/topology.hpp"

namespace smile {

const char* library_version();

// ============================================================
// instances
// ============================================================

struct InstanceSpec {
  ChannelMatrix channels;
  InterferenceGraph graph;
};

// kinds: explicit, paper_rayleigh6_scaled, gilbert_elliott_ensemble, random.
// Edges and channel indices in the JSON are 1-based; generators drawing means
// from a range redraw until every relevant gap clears 1e-6.
InstanceSpec generate_instance(const nlohmann::json& spec);

// ============================================================
// configuration
// ============================================================

struct ExperimentConfig {
  int schema_version = 1;
  InstanceSpec instance;
  long long horizon = 0;
  int replications = 1;
  std::uint64_t seed = 1;
  AgentParams agent;
  bool agent_auto = false;       // derive kappa, I, delta^2 from the instance
  double constants_epsilon = 1.0;
  std::vector<Policy> policies;
  std::string output_dir = "out";
  long long stride = 1;
  int jobs = 0;     // 0 picks the hardware thread count
  std::string raw;  // config text as given, hashed into the manifest
};

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

const char* policy_name(Policy p);

// ============================================================
// replication runners
// ============================================================

// slots at which traces are sampled: stride, 2*stride, ..., plus the horizon
std::vector<long long> sample_points(long long horizon, long long stride);

struct ReplicationTable {
  std::vector<long long> ts;
  Eigen::MatrixXd cumsum;  // replications x points, realized sum rate up to t
  Eigen::MatrixXd regret;  // replications x points
};

// Replication r always runs from derive_seed(config seed, r), so the two
// runners agree bit for bit and rerunning a config reproduces every file.
ReplicationTable run_replications_serial(const ExperimentConfig& cfg, Policy policy,
                                         double oracle_value);
ReplicationTable run_replications_parallel(const ExperimentConfig& cfg, Policy policy,
                                           double oracle_value, int jobs);

// ============================================================
// aggregation and artifacts
// ============================================================

struct PolicySeries {
  Policy policy = Policy::smile;
  std::vector<long long> ts;
  std::vector<double> mean_regret;
  std::vector<double> stderr_regret;
  std::vector<double> mean_sum_rate;  // cumulative realized sum over t, averaged
  std::vector<double> bound;          // policy-independent regret envelope
};

struct ExperimentResult {
  Allocation oracle_alloc;
  double oracle_value = 0.0;
  SystemConstants constants;
  std::vector<PolicySeries> series;
};

ExperimentResult run_experiment(const ExperimentConfig& cfg);

// writes one CSV per policy plus constants.json, allocation.json and
// manifest.json; returns the paths written
std::vector<std::string> write_artifacts(const ExperimentResult& result,
                                         const ExperimentConfig& cfg,
                                         const std::string& out_dir);

std::string format_csv(const PolicySeries& series);

// the constants.json payload, also printed by the constants subcommand
nlohmann::json constants_report(const SystemConstants& c);

std::uint64_t fnv1a64(const std::string& bytes);

}  // namespace smile
