#include "smile/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "smile/error.hpp"

namespace smile {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_matrix_shape(const ChannelMatrix& channels) {
  if (channels.empty() || channels.front().empty())
    raise(Errc::bad_argument, "channel matrix must be non-empty");
  const std::size_t cols = channels.front().size();
  for (const auto& row : channels)
    if (row.size() != cols) raise(Errc::dimension_mismatch, "ragged channel matrix");
}

void check_registry_shape(const RegistrySets& v, int cells, int channels) {
  if (static_cast<int>(v.size()) != cells)
    raise(Errc::dimension_mismatch, "registry sets do not match the cell count");
  for (const auto& per_cell : v) {
    if (static_cast<int>(per_cell.size()) != channels)
      raise(Errc::dimension_mismatch, "registry sets do not match the channel count");
    for (const auto& ids : per_cell)
      for (int q : ids)
        if (q < 0 || q >= cells) raise(Errc::index_out_of_range, "registry holds a bad cell id");
  }
}

// channels holding the D+1 highest true means of one row (all of them when
// the row is shorter); ties broken toward the lower channel index
std::vector<bool> preferred_set(const RateMatrix& means, int cell, int degree) {
  const int channels = static_cast<int>(means.cols());
  const int take = std::min(degree + 1, channels);
  std::vector<int> order(channels);
  for (int s = 0; s < channels; ++s) order[s] = s;
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return means(cell, a) > means(cell, b);
  });
  std::vector<bool> in_set(channels, false);
  for (int i = 0; i < take; ++i) in_set[order[i]] = true;
  return in_set;
}

// smallest squared gap between a row entry and every other entry of the row
double row_min_gap_sq(const RateMatrix& means, int cell, int channel) {
  double best = kInf;
  for (int p = 0; p < means.cols(); ++p) {
    if (p == channel) continue;
    const double d = means(cell, channel) - means(cell, p);
    best = std::min(best, d * d);
  }
  return best;
}

// smallest squared gap between a cell's mean and the registry neighbors' means
double col_min_gap_sq(const RateMatrix& means, const RegistrySets& v, int cell, int channel) {
  double best = kInf;
  for (int q : v[cell][channel]) {
    const double d = means(cell, channel) - means(q, channel);
    best = std::min(best, d * d);
  }
  return best;
}

}  // namespace

// ============================================================
// constants
// ============================================================

SystemConstants compute_constants(const ChannelMatrix& channels, double epsilon) {
  if (epsilon <= 0.0) raise(Errc::epsilon_nonpositive, "epsilon must be positive");
  check_matrix_shape(channels);

  const int cells = static_cast<int>(channels.size());
  const int chans = static_cast<int>(channels.front().size());

  SystemConstants c;
  c.epsilon = epsilon;
  c.pi_min = kInf;
  c.lambda = Eigen::MatrixXd::Zero(cells, chans);
  c.lambda_bar = Eigen::MatrixXd::Zero(cells, chans);
  c.m_max = Eigen::MatrixXd::Zero(cells, chans);

  for (int l = 0; l < cells; ++l) {
    for (int s = 0; s < chans; ++s) {
      const ChannelModel& m = channels[l][s];
      if (m.states() == 0 || m.stationary.size() != m.states())
        raise(Errc::bad_argument, "channel model missing its stationary distribution");

      c.c_max = std::max(c.c_max, m.states());
      c.r_max = std::max(c.r_max, m.rates.maxCoeff());
      const double rbar = m.rates.sum();
      c.rbar_max = std::max(c.rbar_max, rbar);

      const double pi_lo = m.stationary.minCoeff();
      c.pi_min = std::min(c.pi_min, pi_lo);
      for (int r = 0; r < m.states(); ++r)
        c.pi_hat_max = std::max(c.pi_hat_max, std::max(m.stationary(r), 1.0 - m.stationary(r)));
      c.q_max = std::max(c.q_max, rbar / pi_lo);

      double lambda2 = 0.0;
      if (m.states() > 1) {
        Eigen::EigenSolver<Eigen::MatrixXd> solver(m.transition, false);
        if (solver.info() != Eigen::Success)
          raise(Errc::eigensolver_failure, "eigenvalue computation did not converge");
        std::vector<double> moduli(m.states());
        for (int r = 0; r < m.states(); ++r) moduli[r] = std::abs(solver.eigenvalues()(r));
        std::sort(moduli.begin(), moduli.end(), std::greater<>());
        lambda2 = moduli[1];
        c.m_max(l, s) = mean_hitting_times(m.transition).maxCoeff();
      }
      c.lambda(l, s) = lambda2;
      c.lambda_bar(l, s) = 1.0 - lambda2;
      c.lambda_max = std::max(c.lambda_max, lambda2);
    }
  }

  c.lambda_bar_min = 1.0 - c.lambda_max;
  const double chp = static_cast<double>(c.c_max) * c.rbar_max * c.pi_hat_max;
  c.kappa = 28.0 * chp * chp / c.lambda_bar_min;
  const double span = c.rbar_max + 2.0;
  c.i_const = 7.0 * epsilon * epsilon / (48.0 * span * span * c.kappa);
  return c;
}

// ============================================================
// exploration scales
// ============================================================

RegistrySets all_neighbor_registries(const InterferenceGraph& g, int channels) {
  if (channels <= 0) raise(Errc::bad_argument, "channel count must be positive");
  RegistrySets v(g.cells);
  for (int l = 0; l < g.cells; ++l) v[l].assign(channels, g.neighbors[l]);
  return v;
}

double delta_min(const RateMatrix& means, const RegistrySets& v) {
  check_registry_shape(v, static_cast<int>(means.rows()), static_cast<int>(means.cols()));
  double best = kInf;
  for (int l = 0; l < means.rows(); ++l)
    for (int s = 0; s < means.cols(); ++s) {
      for (int p = s + 1; p < means.cols(); ++p)
        best = std::min(best, std::abs(means(l, s) - means(l, p)));
      for (int q : v[l][s]) best = std::min(best, std::abs(means(l, s) - means(q, s)));
    }
  if (best == 0.0) raise(Errc::degenerate_gaps, "two relevant means coincide");
  return best;
}

ExplorationCoefficients true_exploration_coefficients(const RateMatrix& means,
                                                      const InterferenceGraph& g,
                                                      const RegistrySets& v, double kappa) {
  const int cells = static_cast<int>(means.rows());
  const int chans = static_cast<int>(means.cols());
  if (cells != g.cells) raise(Errc::dimension_mismatch, "means do not match the graph");
  check_registry_shape(v, cells, chans);
  if (kappa <= 0.0) raise(Errc::bad_argument, "kappa must be positive");

  ExplorationCoefficients out;
  out.row = Eigen::MatrixXd::Zero(cells, chans);
  out.column = Eigen::MatrixXd::Zero(cells, chans);
  out.combined = Eigen::MatrixXd::Zero(cells, chans);

  for (int l = 0; l < cells; ++l) {
    const auto preferred = preferred_set(means, l, g.degree[l]);
    double worst_preferred = kInf;
    for (int s = 0; s < chans; ++s)
      if (preferred[s]) worst_preferred = std::min(worst_preferred, means(l, s));

    for (int s = 0; s < chans; ++s) {
      double row_gap_sq;
      if (preferred[s]) {
        row_gap_sq = row_min_gap_sq(means, l, s);
      } else {
        const double d = means(l, s) - worst_preferred;
        row_gap_sq = d * d;
      }
      if (row_gap_sq == 0.0) raise(Errc::degenerate_gaps, "two relevant means coincide");
      out.row(l, s) = row_gap_sq == kInf ? 0.0 : 4.0 * kappa / row_gap_sq;

      const double col_gap_sq = col_min_gap_sq(means, v, l, s);
      if (col_gap_sq == 0.0) raise(Errc::degenerate_gaps, "two relevant means coincide");
      out.column(l, s) = col_gap_sq == kInf ? 0.0 : 4.0 * kappa / col_gap_sq;

      out.combined(l, s) = std::max(out.row(l, s), out.column(l, s));
    }
  }
  return out;
}

// ============================================================
// regret bound
// ============================================================

BoundBreakdown theorem1_bound(const SystemConstants& c, const ChannelMatrix& channels,
                              const InterferenceGraph& g, const Allocation& oracle_alloc,
                              const RegistrySets& v, double epsilon, long long t) {
  check_matrix_shape(channels);
  const RateMatrix means = mean_matrix(channels);
  const int cells = static_cast<int>(means.rows());
  const int chans = static_cast<int>(means.cols());
  if (cells != g.cells) raise(Errc::dimension_mismatch, "channels do not match the graph");
  if (c.m_max.rows() != cells || c.m_max.cols() != chans)
    raise(Errc::dimension_mismatch, "constants were computed for a different instance");
  check_registry_shape(v, cells, chans);
  if (t < 2) raise(Errc::bad_argument, "the bound needs a horizon of at least 2");
  if (static_cast<int>(oracle_alloc.size()) != cells)
    raise(Errc::invalid_allocation, "benchmark allocation has the wrong length");
  for (int l = 0; l < cells; ++l) {
    if (oracle_alloc[l] < 0 || oracle_alloc[l] >= chans)
      raise(Errc::invalid_allocation, "benchmark allocation must assign every cell");
    for (int q : g.neighbors[l])
      if (q > l && oracle_alloc[q] == oracle_alloc[l])
        raise(Errc::invalid_allocation, "benchmark allocation has an interference conflict");
  }

  const double eps = epsilon;
  const double dmin = delta_min(means, v);
  const double dmin_sq = dmin * dmin;
  const double log_t = std::log(static_cast<double>(t));
  const double two_over_i = 2.0 / c.i_const;

  BoundBreakdown out;
  out.delta_min_sq = dmin_sq;
  out.script_e = Eigen::MatrixXd::Zero(cells, chans);

  double oracle_value = 0.0;
  for (int l = 0; l < cells; ++l) oracle_value += means(l, oracle_alloc[l]);

  // per-pair exploration scales and epoch counts
  Eigen::MatrixXd epochs(cells, chans);
  double epoch_sum = 0.0;
  for (int l = 0; l < cells; ++l) {
    const auto preferred = preferred_set(means, l, g.degree[l]);
    for (int s = 0; s < chans; ++s) {
      const double row_sq = row_min_gap_sq(means, l, s);
      const double col_sq = col_min_gap_sq(means, v, l, s);
      const double sep = preferred[s] ? std::min(row_sq, col_sq) : row_sq;

      double scale;
      if (sep - 2.0 * eps > dmin_sq) {
        scale = std::max(two_over_i, 4.0 * c.kappa / (sep - 2.0 * eps));
      } else {
        scale = std::max(two_over_i, 4.0 * c.kappa / dmin_sq);
      }
      out.script_e(l, s) = scale;

      epochs(l, s) = std::floor(std::log(3.0 * scale * log_t + 1.0) / std::log(4.0)) + 1.0;
      epoch_sum += epochs(l, s);
    }
  }

  const double pairs = static_cast<double>(cells) * static_cast<double>(chans);
  out.exploration_transient = c.q_max * epoch_sum;

  for (int l = 0; l < cells; ++l)
    for (int s = 0; s < chans; ++s) {
      double clash = 0.0;
      for (int q : g.neighbors[l])
        if (oracle_alloc[q] == s) clash += means(q, s);
      const double gap = means(l, oracle_alloc[l]) + clash - means(l, s);
      out.exploration_suboptimal +=
          (4.0 * out.script_e(l, s) * log_t + 1.0 + c.m_max(l, s) * epochs(l, s)) * gap;
    }

  out.allocation_transient = 2.0 * pairs * c.q_max * epoch_sum;
  out.allocation_suboptimal = 2.0 * pairs * epoch_sum * oracle_value;

  const double phases = std::ceil(std::log(1.5 * static_cast<double>(t) + 1.0) / std::log(4.0));
  const double wrong_phase_rate = (pairs * g.max_degree() + pairs) *
                                  (4.0 * static_cast<double>(c.c_max) / c.pi_min) * oracle_value;
  out.exploitation = (static_cast<double>(cells) * c.q_max + wrong_phase_rate) * phases;

  out.total = out.exploration_transient + out.exploration_suboptimal + out.allocation_transient +
              out.allocation_suboptimal + out.exploitation;
  return out;
}

// ============================================================
// regret accounting
// ============================================================

double allocation_value(const RateMatrix& means, const Allocation& alloc) {
  if (static_cast<int>(alloc.size()) != means.rows())
    raise(Errc::invalid_allocation, "allocation has the wrong length");
  double total = 0.0;
  for (int l = 0; l < means.rows(); ++l) {
    if (alloc[l] < 0) continue;  // silent cell
    if (alloc[l] >= means.cols()) raise(Errc::invalid_allocation, "channel index out of range");
    total += means(l, alloc[l]);
  }
  return total;
}

std::vector<double> cumulative_regret(const std::vector<double>& slot_sums, double oracle_value) {
  std::vector<double> regret(slot_sums.size());
  double realized = 0.0;
  for (std::size_t i = 0; i < slot_sums.size(); ++i) {
    realized += slot_sums[i];
    regret[i] = static_cast<double>(i + 1) * oracle_value - realized;
  }
  return regret;
}

RegretTrace regret_from_outcomes(const std::vector<SlotRecord>& outcomes,
                                 const Allocation& oracle_alloc, const RateMatrix& means) {
  RegretTrace trace;
  trace.oracle_value = allocation_value(means, oracle_alloc);
  trace.cumulative_sum.resize(outcomes.size());
  double realized = 0.0;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    const SlotRecord& rec = outcomes[i];
    if (static_cast<int>(rec.cells.size()) != means.rows())
      raise(Errc::dimension_mismatch, "slot record does not match the cell count");
    for (const CellSlot& cell : rec.cells) realized += cell.realized;
    trace.cumulative_sum[i] = realized;
  }
  trace.regret.resize(outcomes.size());
  for (std::size_t i = 0; i < outcomes.size(); ++i)
    trace.regret[i] = static_cast<double>(i + 1) * trace.oracle_value - trace.cumulative_sum[i];
  return trace;
}

}  // namespace smile
