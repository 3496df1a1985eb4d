#pragma once

#include <stdexcept>
#include <string>

namespace smile {

enum class Errc {
  // channel
  empty_state_space,
  dimension_mismatch,
  not_stochastic,
  reducible,
  periodic,
  no_convergence,
  singular_system,
  zero_base_mean,
  degenerate_chain,
  // topology
  self_loop,
  index_out_of_range,
  bad_argument,
  // matching
  deadlock,
  invalid_allocation,
  too_large,
  // agent
  double_init,
  not_a_neighbor,
  wrong_phase,
  // metrics
  epsilon_nonpositive,
  eigensolver_failure,
  degenerate_gaps,
  // engine / experiment
  horizon_zero,
  bad_config,
  config_parse,
  instance_invalid,
  io_failure,
};

class Error : public std::runtime_error {
public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Errc code() const { return code_; }

private:
  Errc code_;
};

[[noreturn]] inline void raise(Errc code, const std::string& what) { throw Error(code, what); }

}  // namespace smile
