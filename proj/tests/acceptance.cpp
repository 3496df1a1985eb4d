// Acceptance gate: nine end-to-end checks, one summary line each, nonzero
// exit when any of them fails. Fixture configs are read from the directory
// named by SMILE_FIXTURES.

#include <smile/engine.hpp>
#include <smile/error.hpp>
#include <smile/experiment.hpp>
#include <smile/matching.hpp>
#include <smile/metrics.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace {

using namespace smile;

std::string fixtures_dir() {
  const char* env = std::getenv("SMILE_FIXTURES");
  return env ? env : "fixtures";
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

template <class... Args>
std::string fmt(const char* f, Args... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

Outcome guard(const std::function<Outcome()>& fn) {
  try {
    return fn();
  } catch (const std::exception& e) {
    return {false, e.what()};
  }
}

int index_of(const std::vector<long long>& ts, long long t) {
  auto it = std::find(ts.begin(), ts.end(), t);
  if (it == ts.end()) raise(Errc::bad_argument, "sample point missing");
  return static_cast<int>(it - ts.begin());
}

// ============================================================
// random instances shared by the solver and protocol sweeps
// ============================================================

struct RandomInstance {
  Eigen::MatrixXd means;
  InterferenceGraph g;
};

// cells 1..6, channels max_degree+1..5, all entries pairwise distinct so
// every relevant gap is resolvable
RandomInstance draw_instance(std::uint64_t tag, int i) {
  Rng rng(derive_seed(tag, static_cast<std::uint64_t>(i)));
  for (;;) {
    const int cells = 1 + rng.uniform_int(6);
    const double p = rng.uniform01() * 0.6;
    const InterferenceGraph g = random_graph(cells, p, rng.raw());
    if (g.max_degree() + 1 > 5) continue;
    const int chans = g.max_degree() + 1 + rng.uniform_int(5 - g.max_degree());

    Eigen::MatrixXd means(cells, chans);
    std::vector<double> flat;
    for (int l = 0; l < cells; ++l)
      for (int s = 0; s < chans; ++s) {
        means(l, s) = 1.0 + 99.0 * rng.uniform01();
        flat.push_back(means(l, s));
      }
    std::sort(flat.begin(), flat.end());
    bool distinct = true;
    for (std::size_t k = 1; k < flat.size(); ++k)
      if (flat[k] - flat[k - 1] <= 1e-6) distinct = false;
    if (!distinct) continue;
    return {means, g};
  }
}

std::vector<AgentState> agents_with_estimates(const Eigen::MatrixXd& est,
                                              const InterferenceGraph& g,
                                              const AgentParams& params) {
  const int chans = static_cast<int>(est.cols());
  std::vector<AgentState> agents;
  for (int l = 0; l < g.cells; ++l) {
    AgentState a(l, chans, g.neighbors[l], params);
    for (int s = 0; s < chans; ++s) a.init_sample(s, 0, est(l, s));
    a.set_phase(AgentPhase::await);
    agents.push_back(std::move(a));
  }
  return agents;
}

// ============================================================
// C1 solver correctness, C2 worked example
// ============================================================

Outcome c1_solver_correctness() {
  const auto t0 = std::chrono::steady_clock::now();
  const int total = 1000;
  for (int i = 0; i < total; ++i) {
    const RandomInstance inst = draw_instance(0xC1, i);
    const AllocationResult res = solve_stable(inst.means, inst.g);
    if (!is_stable(res.assignment, inst.means, inst.g).stable)
      return {false, fmt("instance %d: solver output not stable", i)};
    const auto all = enumerate_stable(inst.means, inst.g);
    if (std::find(all.begin(), all.end(), res.assignment) == all.end())
      return {false, fmt("instance %d: solver output not in the enumeration", i)};
  }
  const double secs = seconds_since(t0);
  return {secs < 60.0, fmt("%d/%d stable and enumerated, %.1f s", total, total, secs)};
}

Outcome c2_allocation_walkthrough() {
  const ExperimentConfig cfg = load_config(fixtures_dir() + "/fig2_alloc.json");
  const Eigen::MatrixXd means = mean_matrix(cfg.instance.channels);
  auto agents = agents_with_estimates(means, cfg.instance.graph, cfg.agent);
  const AllocationResult res = run_allocation_protocol(agents, cfg.instance.graph);

  if (res.log.size() != 7) return {false, fmt("%zu iterations, want 7", res.log.size())};
  for (const AllocationIteration& it : res.log) {
    const bool want_collision = it.index == 2 || it.index == 6;
    if ((it.outcome == IterationOutcome::collision) != want_collision)
      return {false, fmt("iteration %d: unexpected outcome", it.index)};
  }
  if (res.total_slots != 9) return {false, fmt("%d slots, want 9", res.total_slots)};
  if (res.assignment != Allocation{0, 2, 1, 2, 1}) return {false, "wrong final allocation"};
  return {true, "7 iterations, collisions at 2 and 6, 9 slots, expected allocation"};
}

// ============================================================
// C3/C4/C5 share one batch of three-cell replications
// ============================================================

struct StudyRuns {
  ExperimentConfig cfg;
  double oracle_value = 0.0;
  Allocation oracle_alloc;
  ReplicationTable smile;
  ReplicationTable random;
  double secs = 0.0;
};

StudyRuns run_study() {
  StudyRuns r;
  r.cfg = load_config(fixtures_dir() + "/paper_3x5.json");
  const Eigen::MatrixXd means = mean_matrix(r.cfg.instance.channels);
  const AllocationResult oracle = solve_stable(means, r.cfg.instance.graph);
  r.oracle_alloc = oracle.assignment;
  r.oracle_value = allocation_value(means, oracle.assignment);

  const auto t0 = std::chrono::steady_clock::now();
  r.smile = run_replications_serial(r.cfg, Policy::smile, r.oracle_value);
  r.random = run_replications_serial(r.cfg, Policy::random, r.oracle_value);
  r.secs = seconds_since(t0);
  return r;
}

double window_rate(const ReplicationTable& tab, long long from, long long to) {
  const int a = index_of(tab.ts, from);
  const int b = index_of(tab.ts, to);
  return ((tab.cumsum.col(b) - tab.cumsum.col(a)) / static_cast<double>(to - from)).mean();
}

Outcome c3_convergence(const StudyRuns& r) {
  if (std::abs(r.oracle_value - 205.0) > 1e-9)
    return {false, fmt("oracle value %.6f, want 205", r.oracle_value)};
  const long long h = r.cfg.horizon;
  const double ws = window_rate(r.smile, h - h / 10, h);
  const double wr = window_rate(r.random, h - h / 10, h);
  const double off = std::abs(ws - r.oracle_value) / r.oracle_value;
  const bool pass = off <= 0.05 && wr < 0.8 * r.oracle_value && r.secs < 300.0;
  return {pass, fmt("last-10%% sum rate %.1f (%.1f%% off %.0f), random %.1f, %.0f s", ws,
                    100.0 * off, r.oracle_value, wr, r.secs)};
}

Outcome c4_regret_shape(const StudyRuns& r) {
  const std::vector<long long> probes = {10000, 50000, 100000, 200000};
  const int reps = static_cast<int>(r.smile.regret.rows());
  std::vector<double> v, se;
  for (long long t : probes) {
    const auto col = r.smile.regret.col(index_of(r.smile.ts, t));
    const double m = col.mean();
    const double var = (col.array() - m).square().sum() / (reps - 1);
    v.push_back(m / std::log(static_cast<double>(t)));
    se.push_back(std::sqrt(var / reps) / std::log(static_cast<double>(t)));
  }
  const int peak = static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
  for (std::size_t j = peak + 1; j < v.size(); ++j)
    if (v[j] > v[j - 1] + 2.0 * se[j])
      return {false, fmt("R/ln t rises after the peak: %.0f -> %.0f at t=%lld", v[j - 1], v[j],
                         probes[j])};

  const double last = r.smile.regret.col(index_of(r.smile.ts, 200000)).mean();
  const double cap = 0.02 * 200000.0 * r.oracle_value;
  const bool pass = last < cap;
  return {pass, fmt("R/ln t %.0f -> %.0f -> %.0f -> %.0f, R(2e5) %.3g < %.3g", v[0], v[1], v[2],
                    v[3], last, cap)};
}

Outcome c5_bound_envelope(const StudyRuns& r) {
  const SystemConstants sc =
      compute_constants(r.cfg.instance.channels, r.cfg.constants_epsilon);
  const RegistrySets registries = all_neighbor_registries(
      r.cfg.instance.graph, static_cast<int>(r.cfg.instance.channels[0].size()));

  std::string shown;
  for (long long t : {1000LL, 10000LL, 100000LL}) {
    // twenty seeds: the first twenty replication rows
    const double mean_regret = r.smile.regret.col(index_of(r.smile.ts, t)).head(20).mean();
    const BoundBreakdown b =
        theorem1_bound(sc, r.cfg.instance.channels, r.cfg.instance.graph, r.oracle_alloc,
                       registries, r.cfg.constants_epsilon, t);
    if (!(mean_regret <= b.total))
      return {false, fmt("regret %.3g above the bound %.3g at t=%lld", mean_regret, b.total, t)};
    if (t == 100000) shown = fmt("%.3g <= %.3g at t=1e5", mean_regret, b.total);
  }
  return {true, "regret under the bound at t=1e3, 1e4, 1e5; " + shown};
}

// ============================================================
// C6 chain numerics
// ============================================================

Outcome c6_chain_numerics() {
  // stationary residuals on bundled and random dense chains
  std::vector<ChannelModel> chains;
  {
    Eigen::VectorXd rates(2);
    rates << 0.0, 1.0;
    Eigen::MatrixXd P(2, 2);
    P << 0.55, 0.45, 0.05, 0.95;
    chains.push_back(make_channel(rates, P));
  }
  chains.push_back(make_gilbert_elliott(0.9, 0.8, 30.0));
  chains.push_back(make_gilbert_elliott(0.85, 0.7, 20.0));
  chains.push_back(make_channel(rayleigh6_rates(), rayleigh6_transition()));
  chains.push_back(make_rayleigh6_scaled(120.0));
  for (int i = 0; i < 40; ++i) {
    Rng rng(derive_seed(0xC6A, i));
    const int n = 2 + rng.uniform_int(7);
    Eigen::VectorXd rates(n);
    Eigen::MatrixXd P(n, n);
    for (int a = 0; a < n; ++a) {
      rates(a) = 10.0 * rng.uniform01();
      double sum = 0.0;
      for (int b = 0; b < n; ++b) {
        P(a, b) = 0.05 + rng.uniform01();
        sum += P(a, b);
      }
      P.row(a) /= sum;
    }
    chains.push_back(make_channel(rates, P));
  }
  double residual = 0.0;
  for (const ChannelModel& m : chains) {
    const Eigen::VectorXd err = m.transition.transpose() * m.stationary - m.stationary;
    residual = std::max(residual, err.cwiseAbs().maxCoeff());
  }
  if (residual > 1e-10) return {false, fmt("stationary residual %.3g > 1e-10", residual)};

  // hitting times against plain simulation on the six-state chain
  const Eigen::MatrixXd M = mean_hitting_times(rayleigh6_transition());
  const ChannelModel ray = make_channel(rayleigh6_rates(), rayleigh6_transition());
  const int trials = 100000;
  double worst = 0.0;
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) {
      if (i == j) continue;
      Rng rng(derive_seed(0xC6B, i * 6 + j));
      long long steps = 0;
      for (int n = 0; n < trials; ++n) {
        ChainState st{i};
        do {
          step_chain(ray, st, rng);
          ++steps;
        } while (st.state != j);
      }
      const double mc = static_cast<double>(steps) / trials;
      worst = std::max(worst, std::abs(mc - M(i, j)) / M(i, j));
    }
  if (worst > 0.02) return {false, fmt("hitting time off by %.2f%%", 100.0 * worst)};

  // chains advance identically no matter which policy plays
  const ExperimentConfig cfg = load_config(fixtures_dir() + "/paper_3x5.json");
  std::vector<Eigen::MatrixXi> a, b;
  EngineConfig ec;
  ec.horizon = 2000;
  ec.agent = cfg.agent;
  ec.seed = 42;
  ec.policy = Policy::smile;
  run_engine(cfg.instance.channels, cfg.instance.graph, ec, nullptr,
             [&](long long, const Eigen::MatrixXi& s) { a.push_back(s); });
  ec.policy = Policy::random;
  run_engine(cfg.instance.channels, cfg.instance.graph, ec, nullptr,
             [&](long long, const Eigen::MatrixXi& s) { b.push_back(s); });
  if (a.size() != b.size()) return {false, "trace lengths differ"};
  for (std::size_t t = 0; t < a.size(); ++t)
    if (!(a[t].array() == b[t].array()).all())
      return {false, fmt("chain states diverge at slot %zu", t + 1)};

  return {true, fmt("residual %.2g, hitting times within %.2f%%, traces identical", residual,
                    100.0 * worst)};
}

// ============================================================
// C7 protocol equivalence, C8 scale, C9 estimates
// ============================================================

Outcome c7_protocol_equivalence() {
  const int total = 500;
  for (int i = 0; i < total; ++i) {
    const RandomInstance inst = draw_instance(0xC7, i);
    auto agents = agents_with_estimates(inst.means, inst.g, AgentParams{});
    const Allocation distributed = run_allocation_protocol(agents, inst.g).assignment;
    const Allocation central = solve_stable(inst.means, inst.g).assignment;
    if (distributed != central) return {false, fmt("instance %d: assignments differ", i)};
  }
  return {true, fmt("%d/%d protocol runs match the solver", total, total)};
}

Outcome c8_twenty_cell_scale() {
  const ExperimentConfig cfg = load_config(fixtures_dir() + "/large20.json");
  const Eigen::MatrixXd means = mean_matrix(cfg.instance.channels);
  const AllocationResult oracle = solve_stable(means, cfg.instance.graph);
  const double v = allocation_value(means, oracle.assignment);

  const auto t0 = std::chrono::steady_clock::now();
  const ReplicationTable tab = run_replications_serial(cfg, Policy::smile, v);
  const double secs = seconds_since(t0);

  const long long h = cfg.horizon;
  const double w = window_rate(tab, h - h / 10, h);
  const double off = std::abs(w - v) / v;
  const bool pass = off <= 0.10 && secs < 600.0;
  return {pass, fmt("last-10%% sum rate %.1f vs oracle %.1f (%.1f%% off), %.0f s", w, v,
                    100.0 * off, secs)};
}

Outcome c9_estimate_convergence() {
  const double mean = 120.0;
  const ChannelModel ch = make_rayleigh6_scaled(mean);
  int good = 0;
  long long samples = 0;
  for (int trial = 0; trial < 100; ++trial) {
    Rng rng(derive_seed(0xC9, trial));
    ChainState st = stationary_start(ch, rng);
    AgentState a(0, 1, {}, AgentParams{});
    a.init_sample(0, st.state, ch.rates(st.state));
    a.set_phase(AgentPhase::await);
    while (a.stats(0).ee_samples < 10000) {
      a.begin_exploration(0);
      while (a.phase() == AgentPhase::explore_re) {
        const double r = step_chain(ch, st, rng);
        a.run_recovery_step(0, st.state, r);
      }
      while (a.phase() == AgentPhase::explore_ee) {
        const double r = step_chain(ch, st, rng);
        a.run_estimation_step(0, st.state, r);
      }
    }
    samples = a.stats(0).ee_samples;
    if (std::abs(a.estimate(0) - mean) / mean <= 0.05) ++good;
  }
  return {good >= 95, fmt("%d/100 trials within 5%% after %lld counted samples", good, samples)};
}

}  // namespace

int main() {
  bool all = true;
  const auto report = [&](const char* label, const Outcome& o) {
    std::printf("%s: %s (%s)\n", label, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass) all = false;
  };

  report("C1 stable solver correctness", guard(c1_solver_correctness));
  report("C2 five-cell allocation walkthrough", guard(c2_allocation_walkthrough));

  std::optional<StudyRuns> study;
  std::string study_err;
  try {
    study = run_study();
  } catch (const std::exception& e) {
    study_err = e.what();
  }
  report("C3 three-cell convergence",
         study ? guard([&] { return c3_convergence(*study); }) : Outcome{false, study_err});
  report("C4 regret growth shape",
         study ? guard([&] { return c4_regret_shape(*study); }) : Outcome{false, study_err});
  report("C5 regret bound envelope",
         study ? guard([&] { return c5_bound_envelope(*study); }) : Outcome{false, study_err});

  report("C6 chain numerics", guard(c6_chain_numerics));
  report("C7 protocol equals solver", guard(c7_protocol_equivalence));
  report("C8 twenty-cell scale", guard(c8_twenty_cell_scale));
  report("C9 estimate convergence", guard(c9_estimate_convergence));

  return all ? 0 : 1;
}
