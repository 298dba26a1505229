#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "ucrlb/agents.hpp"
#include "ucrlb/mdp.hpp"
#include "ucrlb/random.hpp"

namespace ucrlb {

struct ExperimentConfig {
  EnvSpec env;
  AlgoSpec algo;
  std::uint64_t horizon = std::uint64_t{1} << 24;
  std::size_t trials = 40;
  double delta = 0.05;
  std::uint64_t base_seed = 0;
  bool masking = true;
  /// Worker threads for trials; 0 reads UCRLB_THREADS, then the hardware count.
  std::size_t threads = 0;

  /// Throws ConfigError naming the offending field.
  void validate() const;
};

/// Powers of two up to the horizon, plus the horizon itself when it is not
/// a power of two.
std::vector<std::uint64_t> checkpoint_rounds(std::uint64_t horizon);

struct RegretTrace {
  std::size_t trial = 0;
  std::vector<std::uint64_t> checkpoints;
  std::vector<double> cumulative_regret;
  std::vector<std::size_t> episodes;  // episodes started by each checkpoint
  std::vector<std::uint64_t> episode_starts;
  std::size_t episode_count = 0;
  double total_reward = 0.0;
  double optimal_gain = 0.0;

  double final_regret() const { return cumulative_regret.empty() ? 0.0 : cumulative_regret.back(); }
};

/// Per-trial relabelling of states and actions. The agent sees
/// state_perm[s] for true state s and plays masked action b, which is true
/// action action_inverse[b].
struct MaskingMaps {
  std::vector<State> state_perm;
  std::vector<State> state_inverse;
  std::vector<Action> action_perm;
  std::vector<Action> action_inverse;

  static MaskingMaps identity(std::size_t num_states, std::size_t num_actions);
  static MaskingMaps draw(std::size_t num_states, std::size_t num_actions, Stream& stream);
};

/// Random streams of one trial. Environment streams are keyed by
/// (base_seed, trial, true s, true a) so that two agents taking the same
/// actions in a trial observe the same samples, whatever the masking.
struct TrialStreams {
  std::size_t num_actions = 0;
  std::vector<Stream> pair_streams;  // s * A + a
  Stream agent;
  Stream masking;

  Stream& pair(State s, Action a) { return pair_streams[s * num_actions + a]; }
};

TrialStreams make_streams(std::uint64_t base_seed, std::size_t trial, std::size_t num_states,
                          std::size_t num_actions);

/// Builds the agent of a trial from the (possibly masked) problem sizes.
using AgentFactory = std::function<std::unique_ptr<Agent>(std::size_t num_states, std::size_t num_actions,
                                                          double delta, Stream agent_stream)>;

AgentFactory default_agent_factory(const AlgoSpec& spec);

/// Runs one trial for cfg.horizon rounds. For UCRL-V runs the episode count
/// is checked against S A log2(8T / (S A)) and a violation throws.
RegretTrace run_trial(const ExperimentConfig& cfg, std::size_t trial);
RegretTrace run_trial(const ExperimentConfig& cfg, std::size_t trial, const AgentFactory& factory);

struct RegretSummary {
  std::vector<std::uint64_t> checkpoints;
  std::vector<double> mean;
  std::vector<double> stddev;  // sample standard deviation (0 for one trial)
  std::vector<double> mean_episodes;
};

struct ExperimentResult {
  std::string algo;
  std::string env;
  std::vector<RegretTrace> traces;  // ordered by trial index
  RegretSummary summary;
};

RegretSummary summarize(const std::vector<RegretTrace>& traces);

/// Runs every trial (concurrently when allowed) and aggregates them in
/// trial order. A failing trial rethrows with its index in the message.
ExperimentResult run_experiment(const ExperimentConfig& cfg);
ExperimentResult run_experiment(const ExperimentConfig& cfg, const AgentFactory& factory,
                                const std::string& algo_label);

struct DsPoint {
  double target_ds = 0.0;
  std::size_t num_states = 0;
  double success_prob = 0.0;
  double diameter = 0.0;
  double ds() const { return static_cast<double>(num_states) * diameter; }
};

/// Chooses a GameOfSkill-v2 chain for a target D*S = x: S = round(x^{1/3})
/// (at least 2) and the right-success probability tuned by bisection so
/// that the computed diameter is within 10% of x^{2/3}.
DsPoint tune_game_of_skill(double target_ds);

struct DsSweepRow {
  std::string algo;
  DsPoint point;
  double mean_regret = 0.0;
  double norm_regret = 0.0;  // mean_regret / sqrt(T ln T)
};

struct DsSweepResult {
  std::vector<DsSweepRow> rows;                // sorted by (algo, ds)
  std::vector<ExperimentResult> experiments;   // same order as rows
};

/// Normaliser sqrt(T ln T).
double regret_normaliser(std::uint64_t horizon);

DsSweepResult ds_sweep(const ExperimentConfig& base, const std::vector<AlgoSpec>& algos,
                       const std::vector<double>& ds_values);

/// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace ucrlb
