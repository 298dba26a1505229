#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "ucrlb/random.hpp"

namespace ucrlb {

using State = std::size_t;
using Action = std::size_t;
using Policy = std::vector<Action>;

struct DeterministicReward {
  double value = 0.0;
};

struct BetaReward {
  double alpha = 1.0;
  double beta = 1.0;
};

using RewardDistribution = std::variant<DeterministicReward, BetaReward>;

double mean(const RewardDistribution& reward);

/// Ground-truth finite MDP with rewards in [0,1].
///
/// Transition rows are stored densely, one row of length S per (s, a), with
/// pairs laid out as s * A + a. The constructor validates every row and every
/// reward distribution and throws ConfigError on violations.
class TabularMDP {
 public:
  TabularMDP(std::size_t num_states, std::size_t num_actions, std::vector<double> transitions,
             std::vector<RewardDistribution> rewards, State initial_state = 0);

  std::size_t num_states() const { return num_states_; }
  std::size_t num_actions() const { return num_actions_; }
  State initial_state() const { return initial_state_; }

  std::span<const double> transition_row(State s, Action a) const {
    return {transitions_.data() + (s * num_actions_ + a) * num_states_, num_states_};
  }
  double p(State s, Action a, State next) const { return transition_row(s, a)[next]; }
  const RewardDistribution& reward(State s, Action a) const { return rewards_[s * num_actions_ + a]; }
  double expected_reward(State s, Action a) const { return mean(reward(s, a)); }

  /// Same model with states and actions relabelled: state s becomes
  /// state_perm[s], action a becomes action_perm[a].
  TabularMDP permuted(std::span<const State> state_perm, std::span<const Action> action_perm) const;

 private:
  std::size_t num_states_;
  std::size_t num_actions_;
  std::vector<double> transitions_;
  std::vector<RewardDistribution> rewards_;
  State initial_state_;
};

enum class EnvKind { riverswim, bandits, game_of_skill_v1, game_of_skill_v2, custom };

std::string to_string(EnvKind kind);
EnvKind parse_env_kind(const std::string& name);

/// RiverSwim kernel under the "right" action. "left" is always a
/// deterministic move one state left (the leftmost state stays put).
struct RiverSwimKernel {
  double interior_right = 0.35;
  double interior_stay = 0.6;
  double interior_left = 0.05;
  double first_right = 0.4;
  double first_stay = 0.6;
  double last_stay = 0.6;
  double last_left = 0.4;
};

/// Declarative environment description. Unset optionals take the
/// per-environment defaults listed in build_env.
struct EnvSpec {
  EnvKind kind = EnvKind::riverswim;
  std::optional<std::size_t> chain_length;
  std::optional<double> success_prob;
  std::optional<double> reward_left;
  std::optional<double> reward_right;
  /// Horizon used by `bandits` to place the Beta arm T^{-1/4} above 0.8.
  std::uint64_t horizon_hint = std::uint64_t{1} << 24;
  RiverSwimKernel riverswim;
  std::shared_ptr<const TabularMDP> custom;
};

/// Short identifier used in CSV output, e.g. "riverswim".
std::string env_name(const EnvSpec& spec);

/// Builds the MDP described by `spec`.
///
/// Defaults: riverswim has 6 states and rewards 0.208 (leftmost, left) and
/// 0.5 (rightmost, right). bandits has one state, arm 0 ~ Beta(0.8 + g,
/// 0.2 - g) with g = horizon_hint^{-1/4}, and arm 1 paying 0.8. The
/// game_of_skill environments have 20 states, right succeeds with
/// probability 1/25 and otherwise stays, rewards 0.8 (leftmost, left) and
/// 0.9 (rightmost, right). Reward-paying endpoint actions self-loop.
/// Action 0 is "left" and action 1 is "right" in every chain.
TabularMDP build_env(const EnvSpec& spec);

struct StepResult {
  double reward = 0.0;
  State next = 0;
};

/// Samples (reward, next) for one round. The stream is the per-(s, a)
/// stream; the next state uses one draw and a Beta reward uses further ones.
StepResult env_step(const TabularMDP& mdp, State s, Action a, Stream& stream);

/// Expected-reward view of an MDP used by the solvers.
struct MeanModel {
  std::size_t num_states = 0;
  std::size_t num_actions = 0;
  std::vector<double> kernel;   // (s * A + a) * S + next
  std::vector<double> rewards;  // s * A + a

  std::span<const double> row(State s, Action a) const {
    return {kernel.data() + (s * num_actions + a) * num_states, num_states};
  }
};

MeanModel mean_model(const TabularMDP& mdp);

/// Result of average-reward relative value iteration.
///
/// `gain` is the midpoint of the last difference vector, so it lies within
/// residual_span / 2 of the optimal gain. For a single-state model the
/// diameter is 0 by convention (no ordered pair of distinct states exists).
struct GainReport {
  double gain = 0.0;
  std::vector<double> bias;
  Policy policy;
  std::size_t iterations = 0;
  double residual_span = 0.0;
  bool converged = false;
};

struct RviOptions {
  double tolerance = 1e-9;
  std::size_t max_iterations = 1'000'000;
  /// Weight of the self-loop in the aperiodicity transform
  /// P' = tau * I + (1 - tau) * P, which keeps gains and optimal policies.
  double aperiodicity = 0.1;
};

/// Relative value iteration. Never throws on the cap; check `converged`.
GainReport relative_value_iteration(const MeanModel& model, const RviOptions& options = {});

/// Optimal gain of the true MDP. Throws ConvergenceError past the cap.
GainReport optimal_gain(const TabularMDP& mdp, double tol = 1e-9, std::size_t max_iterations = 1'000'000);

/// Gain of the Markov chain (kernel S x S, per-state rewards). Throws
/// ConvergenceError past the cap.
double markov_chain_gain(std::span<const double> kernel, std::span<const double> rewards,
                         double tol = 1e-10, std::size_t max_iterations = 10'000'000);

/// Gain of a deterministic policy in a model.
double policy_gain(const MeanModel& model, std::span<const Action> policy, double tol = 1e-10);

/// Diameter: max over ordered pairs s != s' of the minimal expected hitting
/// time of s' from s. Returns 0 for single-state models. Throws
/// ConvergenceError for non-communicating models.
double diameter(const TabularMDP& mdp, double tol = 1e-9, std::size_t max_iterations = 1'000'000);

/// Minimal expected hitting times of `target` from every state.
std::vector<double> hitting_times(const TabularMDP& mdp, State target, double tol = 1e-9,
                                  std::size_t max_iterations = 1'000'000);

}  // namespace ucrlb
