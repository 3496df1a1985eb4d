#include "smile/channel.hpp"

#include <cmath>
#include <numeric>
#include <vector>

#include "smile/error.hpp"

namespace smile {

namespace {

constexpr double kRowSumTol = 1e-12;
constexpr double kStationaryResidualTol = 1e-10;
constexpr double kPowerIterTol = 1e-13;
constexpr long kPowerIterCap = 1'000'000;
constexpr int kDirectSolveMaxStates = 64;

// ============================================================================
// validation
// ============================================================================

void check_stochastic(const Eigen::MatrixXd& P) {
  const int n = static_cast<int>(P.rows());
  for (int i = 0; i < n; ++i) {
    double sum = 0.0;
    for (int j = 0; j < n; ++j) {
      if (P(i, j) < 0.0) raise(Errc::not_stochastic, "negative transition probability");
      sum += P(i, j);
    }
    if (std::abs(sum - 1.0) > kRowSumTol) raise(Errc::not_stochastic, "transition row does not sum to 1");
  }
}

std::vector<int> reachable_from(const Eigen::MatrixXd& P, int root, bool transpose) {
  const int n = static_cast<int>(P.rows());
  std::vector<int> dist(n, -1);
  std::vector<int> queue{root};
  dist[root] = 0;
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const int u = queue[head];
    for (int v = 0; v < n; ++v) {
      const double p = transpose ? P(v, u) : P(u, v);
      if (p > 0.0 && dist[v] < 0) {
        dist[v] = dist[u] + 1;
        queue.push_back(v);
      }
    }
  }
  return dist;
}

void check_irreducible_aperiodic(const Eigen::MatrixXd& P) {
  const int n = static_cast<int>(P.rows());
  const std::vector<int> dist = reachable_from(P, 0, false);
  const std::vector<int> rdist = reachable_from(P, 0, true);
  for (int v = 0; v < n; ++v)
    if (dist[v] < 0 || rdist[v] < 0) raise(Errc::reducible, "transition graph is not strongly connected");

  // period = gcd of d(u) + 1 - d(v) over all edges, with d the BFS levels
  long long g = 0;
  for (int u = 0; u < n; ++u)
    for (int v = 0; v < n; ++v)
      if (P(u, v) > 0.0) g = std::gcd(g, static_cast<long long>(dist[u]) + 1 - dist[v]);
  if (g != 1) raise(Errc::periodic, "transition graph has period > 1");
}

Eigen::VectorXd power_iteration(const Eigen::MatrixXd& P) {
  const int n = static_cast<int>(P.rows());
  Eigen::VectorXd x = Eigen::VectorXd::Constant(n, 1.0 / n);
  for (long it = 0; it < kPowerIterCap; ++it) {
    Eigen::VectorXd next = P.transpose() * x;
    next /= next.sum();
    const double diff = (next - x).lpNorm<Eigen::Infinity>();
    x = next;
    if (diff <= kPowerIterTol) return x;
  }
  raise(Errc::no_convergence, "stationary power iteration did not converge");
}

double stationary_residual(const Eigen::MatrixXd& P, const Eigen::VectorXd& pi) {
  return (P.transpose() * pi - pi).lpNorm<Eigen::Infinity>();
}

}  // namespace

Eigen::VectorXd stationary_distribution(const Eigen::MatrixXd& P) {
  const int n = static_cast<int>(P.rows());
  if (n == 0) raise(Errc::empty_state_space, "empty transition matrix");
  if (n == 1) return Eigen::VectorXd::Ones(1);

  if (n <= kDirectSolveMaxStates) {
    // (P^T - I) pi = 0 with the last equation replaced by sum(pi) = 1
    Eigen::MatrixXd A = P.transpose() - Eigen::MatrixXd::Identity(n, n);
    A.row(n - 1).setOnes();
    Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
    b(n - 1) = 1.0;
    Eigen::VectorXd pi = A.colPivHouseholderQr().solve(b);
    pi = pi.cwiseMax(0.0);
    const double total = pi.sum();
    if (total > 0.0) {
      pi /= total;
      if (stationary_residual(P, pi) <= kStationaryResidualTol) return pi;
    }
  }
  Eigen::VectorXd pi = power_iteration(P);
  if (stationary_residual(P, pi) > kStationaryResidualTol)
    raise(Errc::no_convergence, "stationary distribution residual too large");
  return pi;
}

Eigen::MatrixXd mean_hitting_times(const Eigen::MatrixXd& P) {
  const int n = static_cast<int>(P.rows());
  if (n == 0) raise(Errc::empty_state_space, "empty transition matrix");
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
  if (n == 1) return M;

  for (int target = 0; target < n; ++target) {
    // (I - Q) h = 1 over the states other than the target
    Eigen::MatrixXd A(n - 1, n - 1);
    for (int i = 0, a = 0; i < n; ++i) {
      if (i == target) continue;
      for (int j = 0, c = 0; j < n; ++j) {
        if (j == target) continue;
        A(a, c) = (i == j ? 1.0 : 0.0) - P(i, j);
        ++c;
      }
      ++a;
    }
    const Eigen::VectorXd h = A.partialPivLu().solve(Eigen::VectorXd::Ones(n - 1));
    if (!h.allFinite()) raise(Errc::singular_system, "hitting-time system is singular");
    for (int i = 0, a = 0; i < n; ++i) {
      if (i == target) continue;
      M(i, target) = h(a++);
    }
  }
  return M;
}

ChannelModel make_channel(Eigen::VectorXd rates, Eigen::MatrixXd transition) {
  const int n = static_cast<int>(rates.size());
  if (n == 0) raise(Errc::empty_state_space, "channel needs at least one state");
  if (transition.rows() != n || transition.cols() != n)
    raise(Errc::dimension_mismatch, "transition matrix does not match state count");
  for (int i = 0; i < n; ++i)
    if (rates(i) < 0.0) raise(Errc::bad_argument, "negative channel rate");
  check_stochastic(transition);
  check_irreducible_aperiodic(transition);

  ChannelModel m;
  m.rates = std::move(rates);
  m.transition = std::move(transition);
  m.stationary = stationary_distribution(m.transition);
  m.mean_rate = m.stationary.dot(m.rates);
  return m;
}

ChannelModel make_gilbert_elliott(double p_stay_good, double p_stay_bad, double good_rate) {
  if (!(p_stay_good > 0.0 && p_stay_good < 1.0) || !(p_stay_bad > 0.0 && p_stay_bad < 1.0))
    raise(Errc::degenerate_chain, "stay probabilities must lie strictly inside (0, 1)");
  if (good_rate < 0.0) raise(Errc::bad_argument, "negative good-state rate");
  Eigen::VectorXd rates(2);
  rates << good_rate, 0.0;
  Eigen::MatrixXd P(2, 2);
  P << p_stay_good, 1.0 - p_stay_good, 1.0 - p_stay_bad, p_stay_bad;
  return make_channel(std::move(rates), std::move(P));
}

ChannelModel make_scaled(const Eigen::VectorXd& base_rates, const Eigen::MatrixXd& base_transition,
                         double target_mean) {
  if (target_mean < 0.0) raise(Errc::bad_argument, "negative target mean");
  ChannelModel base = make_channel(base_rates, base_transition);
  if (base.mean_rate <= 0.0) raise(Errc::zero_base_mean, "base chain has zero mean rate");
  const double factor = target_mean / base.mean_rate;
  base.rates *= factor;
  base.mean_rate = base.stationary.dot(base.rates);
  return base;
}

const Eigen::MatrixXd& rayleigh6_transition() {
  static const Eigen::MatrixXd P = [] {
    Eigen::MatrixXd m(6, 6);
    m << 3 / 6.0, 2 / 6.0, 1 / 6.0, 0, 0, 0,
         2 / 8.0, 3 / 8.0, 2 / 8.0, 1 / 8.0, 0, 0,
         1 / 9.0, 2 / 9.0, 3 / 9.0, 2 / 9.0, 1 / 9.0, 0,
         0, 1 / 9.0, 2 / 9.0, 3 / 9.0, 2 / 9.0, 1 / 9.0,
         0, 0, 1 / 8.0, 2 / 8.0, 3 / 8.0, 2 / 8.0,
         0, 0, 0, 1 / 6.0, 2 / 6.0, 3 / 6.0;
    return m;
  }();
  return P;
}

const Eigen::VectorXd& rayleigh6_rates() {
  static const Eigen::VectorXd r = [] {
    Eigen::VectorXd v(6);
    v << 0, 1, 2, 3, 4, 5;
    return v;
  }();
  return r;
}

ChannelModel make_rayleigh6_scaled(double target_mean) {
  return make_scaled(rayleigh6_rates(), rayleigh6_transition(), target_mean);
}

double step_chain(const ChannelModel& m, ChainState& st, Rng& rng) {
  const int n = m.states();
  const double u = rng.uniform01();
  double acc = 0.0;
  int next = n - 1;
  for (int j = 0; j < n; ++j) {
    acc += m.transition(st.state, j);
    if (u < acc) {
      next = j;
      break;
    }
  }
  st.state = next;
  return m.rates(next);
}

ChainState stationary_start(const ChannelModel& m, Rng& rng) {
  const int n = m.states();
  const double u = rng.uniform01();
  double acc = 0.0;
  for (int j = 0; j < n; ++j) {
    acc += m.stationary(j);
    if (u < acc) return ChainState{j};
  }
  return ChainState{n - 1};
}

Eigen::MatrixXd mean_matrix(const ChannelMatrix& channels) {
  const int cells = static_cast<int>(channels.size());
  const int chans = cells > 0 ? static_cast<int>(channels[0].size()) : 0;
  Eigen::MatrixXd mu(cells, chans);
  for (int l = 0; l < cells; ++l) {
    if (static_cast<int>(channels[l].size()) != chans)
      raise(Errc::dimension_mismatch, "ragged channel matrix");
    for (int s = 0; s < chans; ++s) mu(l, s) = channels[l][s].mean_rate;
  }
  return mu;
}

}  // namespace smile
