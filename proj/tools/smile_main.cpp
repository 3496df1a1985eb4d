#include <CLI11.hpp>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "smile/engine.hpp"
#include "smile/error.hpp"
#include "smile/experiment.hpp"
#include "smile/matching.hpp"
#include "smile/metrics.hpp"

namespace {

using namespace smile;

// 0 success, 2 config error, 3 instance error, 4 runtime error
int exit_code_for(Errc code) {
  switch (code) {
    case Errc::config_parse:
    case Errc::bad_config:
      return 2;
    case Errc::io_failure:
      return 4;
    default:
      return 3;
  }
}

int run_cmd(const std::string& config_path, int jobs, const std::string& out_override) {
  ExperimentConfig cfg = load_config(config_path);
  if (jobs > 0) cfg.jobs = jobs;

  std::string out_dir = cfg.output_dir;
  if (const char* env = std::getenv("SMILE_OUT_DIR")) out_dir = env;
  if (!out_override.empty()) out_dir = out_override;

  const ExperimentResult result = run_experiment(cfg);
  const auto files = write_artifacts(result, cfg, out_dir);

  std::printf("oracle value: %.17g\n", result.oracle_value);
  for (const PolicySeries& series : result.series)
    std::printf("%s: final mean regret %.6g, final mean sum rate %.6g\n",
                policy_name(series.policy), series.mean_regret.back(),
                series.mean_sum_rate.back());
  for (const std::string& f : files) std::printf("wrote %s\n", f.c_str());
  return 0;
}

int alloc_cmd(const std::string& config_path) {
  const ExperimentConfig cfg = load_config(config_path);
  const Eigen::MatrixXd means = mean_matrix(cfg.instance.channels);
  const InterferenceGraph& g = cfg.instance.graph;
  const int chans = static_cast<int>(means.cols());

  // dry run on the true means: every agent already "knows" its rates
  std::vector<AgentState> agents;
  for (int l = 0; l < g.cells; ++l) {
    AgentState a(l, chans, g.neighbors[l], cfg.agent);
    for (int s = 0; s < chans; ++s) a.init_sample(s, 0, means(l, s));
    a.set_phase(AgentPhase::await);
    agents.push_back(std::move(a));
  }

  const AllocationResult result = run_allocation_protocol(agents, g);
  for (const AllocationIteration& it : result.log) {
    if (it.outcome == IterationOutcome::assigned) {
      std::printf("iteration %d: cell %d takes channel %d\n", it.index, it.cell + 1,
                  it.channel + 1);
    } else {
      std::string others;
      for (int q : it.colliders) others += (others.empty() ? "" : ", ") + std::to_string(q + 1);
      std::printf("iteration %d: cell %d collides on channel %d with cell %s\n", it.index,
                  it.cell + 1, it.channel + 1, others.c_str());
    }
  }
  std::printf("iterations: %zu\n", result.log.size());
  std::printf("slots: %d\n", result.total_slots);
  for (std::size_t l = 0; l < result.assignment.size(); ++l)
    std::printf("cell %zu -> channel %d\n", l + 1, result.assignment[l] + 1);
  return 0;
}

int constants_cmd(const std::string& config_path) {
  const ExperimentConfig cfg = load_config(config_path);
  const SystemConstants c = compute_constants(cfg.instance.channels, cfg.constants_epsilon);
  std::printf("%s\n", constants_report(c).dump(2).c_str());
  return 0;
}

int enumerate_cmd(const std::string& config_path) {
  const ExperimentConfig cfg = load_config(config_path);
  const Eigen::MatrixXd means = mean_matrix(cfg.instance.channels);
  const auto stable = enumerate_stable(means, cfg.instance.graph);
  for (const Allocation& alloc : stable) {
    std::string cells;
    for (std::size_t l = 0; l < alloc.size(); ++l) {
      if (!cells.empty()) cells += ", ";
      cells += std::to_string(l + 1) + " -> " + std::to_string(alloc[l] + 1);
    }
    std::printf("{%s} value %.17g\n", cells.c_str(), allocation_value(means, alloc));
  }
  std::printf("stable allocations: %zu\n", stable.size());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"time-slotted spectrum sharing simulator"};
  app.require_subcommand(1);

  std::string config;
  int jobs = 0;
  std::string out_override;

  CLI::App* run = app.add_subcommand("run", "run the configured experiment and write artifacts");
  run->add_option("config", config, "experiment config (JSON)")->required();
  run->add_option("--jobs", jobs, "replication workers (default: hardware threads)");
  run->add_option("--out", out_override, "output directory (overrides config and environment)");

  CLI::App* alloc = app.add_subcommand("alloc", "allocation dry run on the true means");
  alloc->add_option("config", config, "experiment config (JSON)")->required();

  CLI::App* constants = app.add_subcommand("constants", "print the system constants");
  constants->add_option("config", config, "experiment config (JSON)")->required();

  CLI::App* enumerate = app.add_subcommand("enumerate", "list every stable allocation");
  enumerate->add_option("config", config, "experiment config (JSON)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (run->parsed()) return run_cmd(config, jobs, out_override);
    if (alloc->parsed()) return alloc_cmd(config);
    if (constants->parsed()) return constants_cmd(config);
    return enumerate_cmd(config);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 4;
  }
}
