#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "ucrlb/confidence.hpp"
#include "ucrlb/evi.hpp"
#include "ucrlb/mdp.hpp"
#include "ucrlb/random.hpp"

namespace ucrlb {

enum class AlgoKind { ucrlv, ucrl2, tsde };

std::string to_string(AlgoKind kind);
AlgoKind parse_algo_kind(const std::string& name);

/// Algorithm selection plus numeric overrides (`algo.params` in configs).
struct AlgoSpec {
  AlgoKind kind = AlgoKind::ucrlv;
  std::map<std::string, double> params;
};

/// Uniform interface seen by the harness. States and actions are whatever
/// indices the harness exposes (masked ones when masking is on).
class Agent {
 public:
  virtual ~Agent() = default;

  virtual std::string name() const = 0;
  virtual Action act(State s) = 0;
  /// Feeds one transition; returns true when it closed the current episode.
  virtual bool observe(State s, Action a, double reward, State next) = 0;

  /// Episodes started so far (an episode starts at its first action).
  virtual std::size_t episode_count() const = 0;
  /// Round index t_k at which every episode started.
  virtual const std::vector<std::uint64_t>& episode_starts() const = 0;
};

/// Shared episode bookkeeping for the model-based agents: counts, the
/// current policy and lazy replanning at the first action of an episode.
class EpisodicAgent : public Agent {
 public:
  EpisodicAgent(std::size_t num_states, std::size_t num_actions);

  Action act(State s) override;
  bool observe(State s, Action a, double reward, State next) override;
  std::size_t episode_count() const override { return episode_starts_.size(); }
  const std::vector<std::uint64_t>& episode_starts() const override { return episode_starts_; }

  const CountsTable& counts() const { return counts_; }
  const Policy& current_policy() const { return policy_; }
  /// Round about to be played (starts at 1).
  std::uint64_t round() const { return t_; }
  std::uint64_t episode_start_round() const { return t_k_; }
  /// N_{t_k}(s, a): visits before the current episode.
  std::uint64_t visits_at_episode_start(State s, Action a) const {
    return counts_at_start_[s * counts_.num_actions() + a];
  }
  bool planned() const { return !needs_plan_; }

  /// Starts an episode at the current round and computes its policy.
  void begin_episode();

 protected:
  virtual Policy plan() = 0;
  virtual bool episode_should_end() const = 0;
  virtual void on_observe(State /*s*/, Action /*a*/, double /*reward*/, State /*next*/) {}

  CountsTable counts_;
  std::vector<std::uint64_t> counts_at_start_;
  Policy policy_;
  std::uint64_t t_ = 1;
  std::uint64_t t_k_ = 1;
  std::vector<std::uint64_t> episode_starts_;
  bool needs_plan_ = true;
};

/// Variance-aware optimistic agent: empirical-Bernstein plausible set,
/// prefix-greedy extended value iteration with epsilon = 1/sqrt(t_k), and the
/// extended doubling trick (end the episode once
/// sum N_k(s,a) / max(1, N_{t_k}(s,a)) >= 1).
class UcrlvAgent final : public EpisodicAgent {
 public:
  UcrlvAgent(std::size_t num_states, std::size_t num_actions, double delta);

  std::string name() const override { return "ucrlv"; }

  /// Current value of sum N_k / max(1, N_{t_k}).
  double doubling_sum() const { return doubling_sum_; }
  bool episode_should_end() const override;
  Policy plan() override;

  /// Plan of the current episode (empty before the first action).
  const OptimisticPlan& last_plan() const { return last_plan_; }

 protected:
  void on_observe(State s, Action a, double reward, State next) override;

 private:
  double delta_;
  double doubling_sum_ = 0.0;
  OptimisticPlan last_plan_;
};

/// Constants of the UCRL2 plausible set.
struct Ucrl2Constants {
  double reward_const = 7.0;       // sqrt(reward_const ln(2 S A t_k / δ) / (2 max(1, N)))
  double transition_const = 14.0;  // sqrt(transition_const S ln(2 A t_k / δ) / max(1, N))
};

/// L1 (Weissman) plausible set with Hoeffding rewards.
class L1Model final : public OptimisticModel {
 public:
  L1Model(const CountsTable& table, double delta, std::uint64_t t_k, const Ucrl2Constants& constants = {});

  std::size_t num_states() const override { return table_.num_states(); }
  std::size_t num_actions() const override { return table_.num_actions(); }
  double reward_bound(State s, Action a) const override { return rewards_[s * num_actions() + a]; }
  double l1_budget(State s, Action a) const { return budgets_[s * num_actions() + a]; }
  void optimistic_transition(State s, Action a, std::span<const State> order,
                             std::span<double> out) const override;

 private:
  const CountsTable& table_;
  std::vector<double> rewards_;
  std::vector<double> budgets_;
};

/// UCRL2 baseline with the standard doubling trick (the episode ends once
/// some N_k(s,a) reaches max(1, N_{t_k}(s,a))).
class Ucrl2Agent final : public EpisodicAgent {
 public:
  Ucrl2Agent(std::size_t num_states, std::size_t num_actions, double delta, Ucrl2Constants constants = {});

  std::string name() const override { return "ucrl2"; }
  bool episode_should_end() const override;
  Policy plan() override;

 protected:
  void on_observe(State s, Action a, double reward, State next) override;

 private:
  double delta_;
  Ucrl2Constants constants_;
  bool doubled_ = false;
};

/// Beta reward posteriors and Dirichlet transition posteriors.
struct PosteriorState {
  std::size_t num_states = 0;
  std::size_t num_actions = 0;
  std::vector<double> reward_alpha;  // s * A + a
  std::vector<double> reward_beta;
  std::vector<double> dirichlet;  // (s * A + a) * S + next
  std::uint64_t previous_episode_length = 1;

  PosteriorState(std::size_t S, std::size_t A, double reward_prior, double transition_prior);
};

struct TsdeOptions {
  double reward_prior = 0.5;
  /// Dirichlet prior per next state; <= 0 selects 1/S.
  double transition_prior = 0.0;
  /// Relative value iteration budget for each sampled model.
  std::size_t max_plan_iterations = 20'000;
  /// The two stopping rules can be switched off one at a time.
  bool length_rule = true;
  bool doubling_rule = true;
};

/// Posterior-sampling baseline with dynamically sized episodes: an episode
/// ends once it is longer than the previous one or some N_t(s,a) exceeds
/// 2 N_{t_k}(s,a). Rewards are binarised by a coin of bias r so the Beta
/// posterior stays conjugate.
class TsdeAgent final : public EpisodicAgent {
 public:
  using ModelSampler = std::function<MeanModel(const PosteriorState&, Stream&)>;

  TsdeAgent(std::size_t num_states, std::size_t num_actions, Stream stream, TsdeOptions options = {},
            ModelSampler sampler = {});

  std::string name() const override { return "tsde"; }
  bool episode_should_end() const override;
  Policy plan() override;

  const PosteriorState& posterior() const { return posterior_; }
  /// Conjugate update for one observation (draws the binarisation coin).
  void tsde_step(State s, Action a, double reward, State next);

  /// One MDP drawn from the posterior: Beta draws for mean rewards and a
  /// Dirichlet draw per pair for transitions.
  static MeanModel sample_posterior(const PosteriorState& posterior, Stream& stream);

 protected:
  void on_observe(State s, Action a, double reward, State next) override;

 private:
  Stream stream_;
  TsdeOptions options_;
  ModelSampler sampler_;
  PosteriorState posterior_;
  bool doubled_ = false;
};

/// Plays a fixed policy forever. Used as an oracle or adversary in tests.
class FixedPolicyAgent final : public Agent {
 public:
  explicit FixedPolicyAgent(Policy policy, std::string label = "fixed");

  std::string name() const override { return label_; }
  Action act(State s) override { return policy_[s]; }
  bool observe(State, Action, double, State) override { return false; }
  std::size_t episode_count() const override { return 1; }
  const std::vector<std::uint64_t>& episode_starts() const override { return starts_; }

 private:
  Policy policy_;
  std::string label_;
  std::vector<std::uint64_t> starts_{1};
};

/// Builds the agent named by `spec`. Unknown parameter names throw ConfigError.
std::unique_ptr<Agent> make_agent(const AlgoSpec& spec, std::size_t num_states, std::size_t num_actions,
                                  double delta, Stream agent_stream);

}  // namespace ucrlb
