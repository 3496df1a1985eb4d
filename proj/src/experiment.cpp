#include "smile/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <utility>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "smile/error.hpp"
#include "smile/rng.hpp"

namespace smile {

namespace {

using nlohmann::json;

Eigen::MatrixXd parse_means(const json& j) {
  if (!j.is_array() || j.empty() || !j.front().is_array() || j.front().empty())
    raise(Errc::config_parse, "means must be a non-empty 2d array");
  const int rows = static_cast<int>(j.size());
  const int cols = static_cast<int>(j.front().size());
  Eigen::MatrixXd m(rows, cols);
  for (int l = 0; l < rows; ++l) {
    if (static_cast<int>(j[l].size()) != cols) raise(Errc::config_parse, "ragged means array");
    for (int s = 0; s < cols; ++s) m(l, s) = j[l][s].get<double>();
  }
  return m;
}

// edges come 1-based from configs
InterferenceGraph parse_graph_spec(const json& j, int cells, std::uint64_t seed) {
  if (j.contains("edges")) {
    std::vector<std::pair<int, int>> edges;
    for (const auto& e : j.at("edges")) {
      if (!e.is_array() || e.size() != 2) raise(Errc::config_parse, "edge must be a pair");
      const int a = e[0].get<int>();
      const int b = e[1].get<int>();
      if (a < 1 || b < 1 || a > cells || b > cells)
        raise(Errc::instance_invalid, "edge endpoint outside 1..cells");
      edges.emplace_back(a - 1, b - 1);
    }
    return make_graph(cells, std::move(edges));
  }
  if (j.contains("edge_prob"))
    return random_graph(cells, j.at("edge_prob").get<double>(), derive_seed(seed, 1));
  raise(Errc::config_parse, "graph needs either edges or edge_prob");
}

// smallest relevant gap of a candidate draw; coinciding means count as zero
double candidate_gap(const Eigen::MatrixXd& means, const InterferenceGraph& g) {
  try {
    return delta_min(means, all_neighbor_registries(g, static_cast<int>(means.cols())));
  } catch (const Error&) {
    return 0.0;
  }
}

InstanceSpec explicit_instance(const json& spec) {
  const json& rows = spec.at("channels");
  if (!rows.is_array() || rows.empty()) raise(Errc::config_parse, "channels must be an array");
  InstanceSpec inst;
  inst.channels.resize(rows.size());
  int cols = -1;
  for (std::size_t l = 0; l < rows.size(); ++l) {
    if (!rows[l].is_array() || rows[l].empty())
      raise(Errc::config_parse, "channels rows must be arrays");
    if (cols < 0) cols = static_cast<int>(rows[l].size());
    if (static_cast<int>(rows[l].size()) != cols)
      raise(Errc::config_parse, "ragged channels array");
    for (const auto& cell : rows[l]) {
      const auto& jr = cell.at("rates");
      Eigen::VectorXd rates(jr.size());
      for (std::size_t i = 0; i < jr.size(); ++i) rates(i) = jr[i].get<double>();
      const auto& jt = cell.at("transition");
      Eigen::MatrixXd p(jt.size(), jt.size());
      for (std::size_t r = 0; r < jt.size(); ++r) {
        if (jt[r].size() != jt.size()) raise(Errc::config_parse, "transition must be square");
        for (std::size_t q = 0; q < jt.size(); ++q) p(r, q) = jt[r][q].get<double>();
      }
      inst.channels[l].push_back(make_channel(std::move(rates), std::move(p)));
    }
  }
  inst.graph = parse_graph_spec(spec.at("graph"), static_cast<int>(rows.size()),
                                spec.value("seed", std::uint64_t{1}));
  return inst;
}

InstanceSpec scaled_fading_instance(const json& spec) {
  const Eigen::MatrixXd means = parse_means(spec.at("means"));
  InstanceSpec inst;
  inst.channels.resize(means.rows());
  for (int l = 0; l < means.rows(); ++l)
    for (int s = 0; s < means.cols(); ++s)
      inst.channels[l].push_back(make_rayleigh6_scaled(means(l, s)));
  inst.graph = parse_graph_spec(spec.at("graph"), static_cast<int>(means.rows()),
                                spec.value("seed", std::uint64_t{1}));
  return inst;
}

InstanceSpec gilbert_elliott_instance(const json& spec) {
  const int cells = spec.at("cells").get<int>();
  const int chans = spec.at("channels").get<int>();
  if (cells < 1 || chans < 1) raise(Errc::instance_invalid, "cells and channels must be positive");
  const double stay_good = spec.at("p_stay_good").get<double>();
  const double stay_bad = spec.at("p_stay_bad").get<double>();
  const std::uint64_t seed = spec.value("seed", std::uint64_t{1});

  InstanceSpec inst;
  inst.graph = parse_graph_spec(spec.at("graph"), cells, seed);

  if (spec.contains("good_rate")) {
    const Eigen::MatrixXd rate = parse_means(spec.at("good_rate"));
    if (rate.rows() != cells || rate.cols() != chans)
      raise(Errc::instance_invalid, "good_rate shape does not match cells x channels");
    inst.channels.resize(cells);
    for (int l = 0; l < cells; ++l)
      for (int s = 0; s < chans; ++s)
        inst.channels[l].push_back(make_gilbert_elliott(stay_good, stay_bad, rate(l, s)));
    return inst;
  }

  const auto& range = spec.at("good_rate_range");
  const double lo = range.at(0).get<double>();
  const double hi = range.at(1).get<double>();
  if (!(lo > 0.0) || !(hi > lo)) raise(Errc::instance_invalid, "good_rate_range must be 0 < lo < hi");

  Rng rng(derive_seed(seed, 2));
  for (int attempt = 0; attempt < 200; ++attempt) {
    Eigen::MatrixXd rate(cells, chans);
    for (int l = 0; l < cells; ++l)
      for (int s = 0; s < chans; ++s) rate(l, s) = lo + (hi - lo) * rng.uniform01();
    ChannelMatrix channels(cells);
    for (int l = 0; l < cells; ++l)
      for (int s = 0; s < chans; ++s)
        channels[l].push_back(make_gilbert_elliott(stay_good, stay_bad, rate(l, s)));
    if (candidate_gap(mean_matrix(channels), inst.graph) > 1e-6) {
      inst.channels = std::move(channels);
      return inst;
    }
  }
  raise(Errc::instance_invalid, "couldn't draw distinct means; widen good_rate_range");
}

InstanceSpec random_instance(const json& spec) {
  const int cells = spec.at("cells").get<int>();
  const int chans = spec.at("channels").get<int>();
  if (cells < 1 || chans < 1) raise(Errc::instance_invalid, "cells and channels must be positive");
  const auto& range = spec.at("mean_range");
  const double lo = range.at(0).get<double>();
  const double hi = range.at(1).get<double>();
  if (!(lo > 0.0) || !(hi > lo)) raise(Errc::instance_invalid, "mean_range must be 0 < lo < hi");
  const std::uint64_t seed = spec.value("seed", std::uint64_t{1});

  InstanceSpec inst;
  // the graph is part of the draw unless one is pinned explicitly
  if (spec.contains("graph"))
    inst.graph = parse_graph_spec(spec.at("graph"), cells, seed);
  else
    inst.graph = random_graph(cells, spec.at("edge_prob").get<double>(), derive_seed(seed, 1));

  Rng rng(derive_seed(seed, 2));
  for (int attempt = 0; attempt < 200; ++attempt) {
    Eigen::MatrixXd means(cells, chans);
    for (int l = 0; l < cells; ++l)
      for (int s = 0; s < chans; ++s) means(l, s) = lo + (hi - lo) * rng.uniform01();
    if (candidate_gap(means, inst.graph) <= 1e-6) continue;
    inst.channels.resize(cells);
    for (int l = 0; l < cells; ++l)
      for (int s = 0; s < chans; ++s) inst.channels[l].push_back(make_rayleigh6_scaled(means(l, s)));
    return inst;
  }
  raise(Errc::instance_invalid, "couldn't draw distinct means; widen mean_range");
}

Policy parse_policy(const std::string& name) {
  if (name == "smile") return Policy::smile;
  if (name == "oracle") return Policy::oracle;
  if (name == "random") return Policy::random;
  raise(Errc::bad_config, "unknown policy: " + name);
}

void append_row(std::string& out, long long t, double regret, double se, double rate,
                double bound) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%lld,%.17g,%.17g,%.17g,%.17g\n", t, regret, se, rate, bound);
  out += buf;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (int r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(Errc::io_failure, "cannot open " + path.string());
  out << text;
  if (!out) raise(Errc::io_failure, "short write to " + path.string());
}

int resolve_jobs(int requested) {
  if (requested > 0) return requested;
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace

const char* library_version() { return "0.1.0"; }

const char* policy_name(Policy p) {
  switch (p) {
    case Policy::smile: return "smile";
    case Policy::oracle: return "oracle";
    case Policy::random: return "random";
  }
  return "unknown";
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

// ============================================================
// instances and configuration
// ============================================================

InstanceSpec generate_instance(const json& spec) {
  try {
    const std::string kind = spec.at("kind").get<std::string>();
    if (kind == "explicit") return explicit_instance(spec);
    if (kind == "paper_rayleigh6_scaled") return scaled_fading_instance(spec);
    if (kind == "gilbert_elliott_ensemble") return gilbert_elliott_instance(spec);
    if (kind == "random") return random_instance(spec);
    raise(Errc::instance_invalid, "unknown instance kind: " + kind);
  } catch (const json::exception& e) {
    raise(Errc::config_parse, std::string("instance spec: ") + e.what());
  }
}

ExperimentConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    raise(Errc::config_parse, std::string("config is not valid JSON: ") + e.what());
  }

  ExperimentConfig cfg;
  cfg.raw = text;
  try {
    cfg.schema_version = j.at("schema_version").get<int>();
    if (cfg.schema_version != 1) raise(Errc::config_parse, "unsupported schema_version");

    cfg.instance = generate_instance(j.at("instance"));
    cfg.horizon = j.at("horizon").get<long long>();
    cfg.replications = j.at("replications").get<int>();
    cfg.seed = j.value("seed", std::uint64_t{1});
    cfg.constants_epsilon = j.value("constants_epsilon", 1.0);
    cfg.output_dir = j.value("output_dir", std::string("out"));
    cfg.stride = j.value("stride", 1LL);
    cfg.jobs = j.value("jobs", 0);

    const json& agent = j.at("agent");
    cfg.agent_auto = agent.value("auto", false);
    if (!cfg.agent_auto) {
      cfg.agent.kappa = agent.at("kappa").get<double>();
      cfg.agent.i_const = agent.at("i_const").get<double>();
      cfg.agent.epsilon = agent.at("epsilon").get<double>();
      cfg.agent.delta_sq = agent.at("delta_sq").get<double>();
    }

    for (const auto& p : j.at("policies")) cfg.policies.push_back(parse_policy(p.get<std::string>()));
  } catch (const json::exception& e) {
    raise(Errc::config_parse, std::string("config: ") + e.what());
  }

  const int chans = static_cast<int>(cfg.instance.channels.front().size());
  if (cfg.horizon < chans) raise(Errc::bad_config, "horizon shorter than the channel sweep");
  if (cfg.replications < 1) raise(Errc::bad_config, "replications must be at least 1");
  if (cfg.stride < 1) raise(Errc::bad_config, "stride must be at least 1");
  if (!(cfg.constants_epsilon > 0.0)) raise(Errc::bad_config, "constants_epsilon must be positive");
  if (cfg.policies.empty()) raise(Errc::bad_config, "no policies requested");
  if (!cfg.agent_auto && !(cfg.agent.kappa > 0.0 && cfg.agent.i_const > 0.0 &&
                           cfg.agent.delta_sq > 0.0 && cfg.agent.epsilon >= 0.0))
    raise(Errc::bad_config, "agent parameters out of range");
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(Errc::config_parse, "cannot read config file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

// ============================================================
// replication runners
// ============================================================

std::vector<long long> sample_points(long long horizon, long long stride) {
  if (horizon < 1 || stride < 1) raise(Errc::bad_argument, "horizon and stride must be positive");
  std::vector<long long> ts;
  for (long long t = stride; t <= horizon; t += stride) ts.push_back(t);
  if (ts.empty() || ts.back() != horizon) ts.push_back(horizon);
  return ts;
}

namespace {

void run_one_replication(const ExperimentConfig& cfg, Policy policy, double oracle_value,
                         const std::vector<long long>& ts, int rep, Eigen::MatrixXd& cumsum,
                         Eigen::MatrixXd& regret) {
  EngineConfig ecfg;
  ecfg.horizon = cfg.horizon;
  ecfg.policy = policy;
  ecfg.agent = cfg.agent;
  ecfg.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(rep));

  double running = 0.0;
  std::size_t next = 0;
  run_engine(cfg.instance.channels, cfg.instance.graph, ecfg, [&](const SlotRecord& rec) {
    double slot = 0.0;
    for (const CellSlot& c : rec.cells) slot += c.realized;
    running += slot;
    if (next < ts.size() && rec.t == ts[next]) {
      cumsum(rep, static_cast<int>(next)) = running;
      regret(rep, static_cast<int>(next)) =
          static_cast<double>(ts[next]) * oracle_value - running;
      ++next;
    }
  });
}

ReplicationTable make_table(const ExperimentConfig& cfg) {
  ReplicationTable table;
  table.ts = sample_points(cfg.horizon, cfg.stride);
  table.cumsum = Eigen::MatrixXd::Zero(cfg.replications, static_cast<int>(table.ts.size()));
  table.regret = Eigen::MatrixXd::Zero(cfg.replications, static_cast<int>(table.ts.size()));
  return table;
}

}  // namespace

ReplicationTable run_replications_serial(const ExperimentConfig& cfg, Policy policy,
                                         double oracle_value) {
  ReplicationTable table = make_table(cfg);
  for (int rep = 0; rep < cfg.replications; ++rep)
    run_one_replication(cfg, policy, oracle_value, table.ts, rep, table.cumsum, table.regret);
  return table;
}

ReplicationTable run_replications_parallel(const ExperimentConfig& cfg, Policy policy,
                                           double oracle_value, int jobs) {
  ReplicationTable table = make_table(cfg);
  const int workers = resolve_jobs(jobs);
  // exceptions must not unwind out of the parallel region
  std::exception_ptr failure = nullptr;
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(workers)
#endif
  for (int rep = 0; rep < cfg.replications; ++rep) {
    try {
      run_one_replication(cfg, policy, oracle_value, table.ts, rep, table.cumsum, table.regret);
    } catch (...) {
#ifdef _OPENMP
#pragma omp critical
#endif
      if (!failure) failure = std::current_exception();
    }
  }
  (void)workers;
  if (failure) std::rethrow_exception(failure);
  return table;
}

// ============================================================
// experiment orchestration
// ============================================================

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  const Eigen::MatrixXd means = mean_matrix(cfg.instance.channels);
  const int chans = static_cast<int>(means.cols());

  ExperimentResult result;
  result.oracle_alloc = solve_stable(means, cfg.instance.graph).assignment;
  result.oracle_value = allocation_value(means, result.oracle_alloc);
  result.constants = compute_constants(cfg.instance.channels, cfg.constants_epsilon);

  ExperimentConfig resolved = cfg;
  if (cfg.agent_auto) {
    resolved.agent.kappa = result.constants.kappa;
    resolved.agent.i_const = result.constants.i_const;
    resolved.agent.epsilon = cfg.constants_epsilon;
    const double dm = delta_min(means, all_neighbor_registries(cfg.instance.graph, chans));
    resolved.agent.delta_sq = dm * dm;
  }

  const auto ts = sample_points(cfg.horizon, cfg.stride);
  const auto v = all_neighbor_registries(cfg.instance.graph, chans);
  std::vector<double> bounds(ts.size());
  for (std::size_t i = 0; i < ts.size(); ++i)
    bounds[i] = theorem1_bound(result.constants, cfg.instance.channels, cfg.instance.graph,
                               result.oracle_alloc, v, cfg.constants_epsilon,
                               std::max<long long>(ts[i], 2))
                    .total;

  const int jobs = resolve_jobs(cfg.jobs);
  for (Policy policy : cfg.policies) {
    const ReplicationTable table =
        jobs == 1 ? run_replications_serial(resolved, policy, result.oracle_value)
                  : run_replications_parallel(resolved, policy, result.oracle_value, jobs);

    PolicySeries series;
    series.policy = policy;
    series.ts = ts;
    series.bound = bounds;
    const int reps = cfg.replications;
    series.mean_regret.resize(ts.size());
    series.stderr_regret.resize(ts.size());
    series.mean_sum_rate.resize(ts.size());
    for (std::size_t i = 0; i < ts.size(); ++i) {
      const auto col = table.regret.col(static_cast<int>(i));
      const double mean = col.sum() / reps;
      series.mean_regret[i] = mean;
      double se = 0.0;
      if (reps > 1) {
        const double var = (col.array() - mean).square().sum() / (reps - 1);
        se = std::sqrt(var / reps);
      }
      series.stderr_regret[i] = se;
      series.mean_sum_rate[i] =
          table.cumsum.col(static_cast<int>(i)).sum() / reps / static_cast<double>(ts[i]);
    }
    result.series.push_back(std::move(series));
  }
  return result;
}

// ============================================================
// artifacts
// ============================================================

json constants_report(const SystemConstants& c) {
  return json{{"pi_min", c.pi_min},
              {"pi_hat_max", c.pi_hat_max},
              {"r_max", c.r_max},
              {"rbar_max", c.rbar_max},
              {"q_max", c.q_max},
              {"c_max", c.c_max},
              {"lambda_max", c.lambda_max},
              {"lambda_bar_min", c.lambda_bar_min},
              {"lambda", matrix_to_json(c.lambda)},
              {"lambda_bar", matrix_to_json(c.lambda_bar)},
              {"m_max", matrix_to_json(c.m_max)},
              {"kappa", c.kappa},
              {"i_const", c.i_const},
              {"epsilon", c.epsilon},
              {"lambda_by_modulus", true},
              {"bound_o1_term_omitted", true}};
}

std::string format_csv(const PolicySeries& series) {
  std::string out = "t,mean_regret,stderr,mean_sum_rate,bound\n";
  for (std::size_t i = 0; i < series.ts.size(); ++i)
    append_row(out, series.ts[i], series.mean_regret[i], series.stderr_regret[i],
               series.mean_sum_rate[i], series.bound[i]);
  return out;
}

std::vector<std::string> write_artifacts(const ExperimentResult& result,
                                         const ExperimentConfig& cfg,
                                         const std::string& out_dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) raise(Errc::io_failure, "cannot create " + out_dir + ": " + ec.message());

  std::vector<std::string> written;
  for (const PolicySeries& series : result.series) {
    const fs::path path = fs::path(out_dir) / (std::string(policy_name(series.policy)) + ".csv");
    write_text(path, format_csv(series));
    written.push_back(path.string());
  }

  const fs::path cpath = fs::path(out_dir) / "constants.json";
  write_text(cpath, constants_report(result.constants).dump(2) + "\n");
  written.push_back(cpath.string());

  json alloc_one_based = json::array();
  for (int ch : result.oracle_alloc) alloc_one_based.push_back(ch + 1);
  json allocation{{"channel_per_cell", alloc_one_based},
                  {"indexing", "one_based"},
                  {"value", result.oracle_value}};
  const fs::path apath = fs::path(out_dir) / "allocation.json";
  write_text(apath, allocation.dump(2) + "\n");
  written.push_back(apath.string());

  json seeds = json::array();
  for (int rep = 0; rep < cfg.replications; ++rep)
    seeds.push_back(derive_seed(cfg.seed, static_cast<std::uint64_t>(rep)));
  json policies = json::array();
  for (Policy p : cfg.policies) policies.push_back(policy_name(p));

  char stamp[32] = "unknown";
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  if (std::tm tm{}; gmtime_r(&now, &tm) != nullptr)
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", &tm);

  char hash[24];
  std::snprintf(hash, sizeof hash, "%016llx",
                static_cast<unsigned long long>(fnv1a64(cfg.raw)));

  json manifest{{"schema_version", cfg.schema_version},
                {"library_version", library_version()},
                {"config_fnv1a64", hash},
                {"timestamp_utc", stamp},
                {"seed", cfg.seed},
                {"replication_seeds", seeds},
                {"horizon", cfg.horizon},
                {"replications", cfg.replications},
                {"stride", cfg.stride},
                {"jobs", resolve_jobs(cfg.jobs)},
                {"policies", policies},
                {"constants_epsilon", cfg.constants_epsilon},
                {"agent_auto", cfg.agent_auto},
                {"oracle_value", result.oracle_value},
                {"files", json(written)}};
  if (!cfg.agent_auto)
    manifest["agent"] = json{{"kappa", cfg.agent.kappa},
                             {"i_const", cfg.agent.i_const},
                             {"epsilon", cfg.agent.epsilon},
                             {"delta_sq", cfg.agent.delta_sq}};
  const fs::path mpath = fs::path(out_dir) / "manifest.json";
  write_text(mpath, manifest.dump(2) + "\n");
  written.push_back(mpath.string());
  return written;
}

}  // namespace smile
