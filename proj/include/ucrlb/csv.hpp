#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "ucrlb/harness.hpp"

namespace ucrlb {

/// Shortest round-trip text for a double (%.17g).
std::string format_double(double value);

/// Header `algo,env,trial,t,cum_regret,episodes`; rows sorted by
/// (algo, env, trial, t).
void write_results_csv(std::ostream& out, const std::vector<ExperimentResult>& results);

/// Header `algo,env,t,mean_regret,std_regret,mean_episodes`.
void write_summary_csv(std::ostream& out, const std::vector<ExperimentResult>& results);

/// Header `algo,ds,s,d,norm_regret`, plus `reference` (least-squares
/// c sqrt(DS) per algorithm) when requested.
void write_ds_sweep_csv(std::ostream& out, const DsSweepResult& sweep, bool reference);

/// Header `t,episode_bound,theory_reference_shape_constants_as_printed` for
/// the checkpoints above S A.
void write_bounds_csv(std::ostream& out, double diameter, std::size_t num_states, std::size_t num_actions,
                      const std::vector<std::uint64_t>& checkpoints, double delta);

}  // namespace ucrlb
