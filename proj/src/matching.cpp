#include "smile/matching.hpp"

#include <cmath>

#include "smile/error.hpp"

namespace smile {

namespace {

void check_rates(const RateMatrix& rates, const InterferenceGraph& g) {
  if (rates.rows() != g.cells) raise(Errc::dimension_mismatch, "rate rows != cell count");
  if (rates.cols() < 1) raise(Errc::bad_argument, "need at least one channel");
  if ((rates.array() < 0.0).any()) raise(Errc::bad_argument, "negative rate entry");
}

// conditions 1-2: complete and conflict-free
void check_valid_allocation(const Allocation& alloc, const RateMatrix& rates,
                            const InterferenceGraph& g) {
  if (static_cast<int>(alloc.size()) != g.cells)
    raise(Errc::invalid_allocation, "allocation size != cell count");
  for (int s : alloc)
    if (s < 0 || s >= rates.cols()) raise(Errc::invalid_allocation, "channel index out of range");
  for (auto [a, b] : g.edges)
    if (alloc[a] == alloc[b]) raise(Errc::invalid_allocation, "adjacent cells share a channel");
}

// condition 3 scan shared by is_stable and enumerate_stable
bool no_blocking_pair(const Allocation& alloc, const RateMatrix& rates,
                      const InterferenceGraph& g, int* bad_cell, int* bad_channel) {
  const int chans = static_cast<int>(rates.cols());
  for (int l = 0; l < g.cells; ++l) {
    const double own = rates(l, alloc[l]);
    for (int s = 0; s < chans; ++s) {
      if (rates(l, s) <= own) continue;
      bool beaten = false;
      for (int q : g.neighbors[l]) {
        if (alloc[q] == s && rates(q, s) > rates(l, s)) {
          beaten = true;
          break;
        }
      }
      if (!beaten) {
        if (bad_cell) *bad_cell = l;
        if (bad_channel) *bad_channel = s;
        return false;
      }
    }
  }
  return true;
}

}  // namespace

AllocationResult solve_stable(const RateMatrix& rates, const InterferenceGraph& g) {
  check_rates(rates, g);
  const int cells = g.cells;
  const int chans = static_cast<int>(rates.cols());

  // exact zeros are unusable from the start, same as eliminated entries
  std::vector<std::vector<bool>> eliminated(cells, std::vector<bool>(chans));
  for (int l = 0; l < cells; ++l)
    for (int s = 0; s < chans; ++s) eliminated[l][s] = rates(l, s) == 0.0;

  AllocationResult result;
  result.assignment.assign(cells, -1);
  int unassigned = cells;

  while (unassigned > 0) {
    int best_l = -1, best_s = -1;
    double best_v = -1.0;
    for (int l = 0; l < cells; ++l) {
      if (result.assignment[l] >= 0) continue;
      for (int s = 0; s < chans; ++s) {
        if (eliminated[l][s]) continue;
        if (rates(l, s) > best_v) {
          best_v = rates(l, s);
          best_l = l;
          best_s = s;
        }
      }
    }
    if (best_l < 0)
      raise(Errc::deadlock, "an unassigned cell has no remaining channel entries");

    AllocationIteration it;
    it.index = static_cast<int>(result.log.size()) + 1;
    it.cell = best_l;
    it.channel = best_s;
    for (int q : g.neighbors[best_l])
      if (result.assignment[q] == best_s) it.colliders.push_back(q);

    if (it.colliders.empty()) {
      it.outcome = IterationOutcome::assigned;
      it.slots = 1;
      result.assignment[best_l] = best_s;
      for (int s = 0; s < chans; ++s) eliminated[best_l][s] = true;
      --unassigned;
    } else {
      it.outcome = IterationOutcome::collision;
      it.slots = 2;
      eliminated[best_l][best_s] = true;
    }
    result.total_slots += it.slots;
    result.log.push_back(std::move(it));
  }
  return result;
}

StabilityReport is_stable(const Allocation& alloc, const RateMatrix& rates,
                          const InterferenceGraph& g) {
  check_rates(rates, g);
  check_valid_allocation(alloc, rates, g);
  StabilityReport report;
  report.stable = no_blocking_pair(alloc, rates, g, &report.blocking_cell, &report.blocking_channel);
  return report;
}

std::vector<Allocation> enumerate_stable(const RateMatrix& rates, const InterferenceGraph& g) {
  check_rates(rates, g);
  const int cells = g.cells;
  const int chans = static_cast<int>(rates.cols());

  double combos = 1.0;
  for (int l = 0; l < cells; ++l) combos *= chans;
  if (combos > 1e7) raise(Errc::too_large, "assignment space exceeds 1e7");

  std::vector<Allocation> found;
  Allocation alloc(cells, 0);
  while (true) {
    bool conflict = false;
    for (auto [a, b] : g.edges) {
      if (alloc[a] == alloc[b]) {
        conflict = true;
        break;
      }
    }
    if (!conflict && no_blocking_pair(alloc, rates, g, nullptr, nullptr)) found.push_back(alloc);

    int pos = cells - 1;
    while (pos >= 0 && alloc[pos] == chans - 1) alloc[pos--] = 0;
    if (pos < 0) break;
    ++alloc[pos];
  }
  return found;
}

}  // namespace smile
