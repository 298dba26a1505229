#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "ucrlb/mdp.hpp"

namespace ucrlb {

/// Welford running mean and sum of squared deviations.
class MomentAccumulator {
 public:
  MomentAccumulator() = default;
  static MomentAccumulator from_moments(std::uint64_t count, double mean, double m2) {
    MomentAccumulator acc;
    acc.count_ = count;
    acc.mean_ = count == 0 ? 0.0 : mean;
    acc.m2_ = count == 0 ? 0.0 : m2;
    return acc;
  }

  void add(double value) {
    ++count_;
    const double delta = value - mean_;
    mean_ += delta / static_cast<double>(count_);
    m2_ += delta * (value - mean_);
  }

  std::uint64_t count() const { return count_; }
  double mean() const { return mean_; }
  double m2() const { return m2_; }
  /// Population-style variance m2 / N (0 when empty).
  double variance() const { return count_ == 0 ? 0.0 : m2_ / static_cast<double>(count_); }

 private:
  std::uint64_t count_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

/// Per-(s, a) sufficient statistics: total visits N_t, in-episode visits
/// N_k, a reward accumulator and next-state counts.
class CountsTable {
 public:
  CountsTable(std::size_t num_states, std::size_t num_actions);

  std::size_t num_states() const { return num_states_; }
  std::size_t num_actions() const { return num_actions_; }

  /// Throws DataError when the reward is outside [0,1] or an index is out of range.
  void record_transition(State s, Action a, double reward, State next);

  /// Resets every N_k(s, a) to zero.
  void start_episode();

  std::uint64_t visits(State s, Action a) const { return visits_[pair(s, a)]; }
  std::uint64_t episode_visits(State s, Action a) const { return episode_visits_[pair(s, a)]; }
  std::uint64_t transition_count(State s, Action a, State next) const {
    return transitions_[pair(s, a) * num_states_ + next];
  }
  std::span<const std::uint64_t> transition_counts(State s, Action a) const {
    return {transitions_.data() + pair(s, a) * num_states_, num_states_};
  }
  const MomentAccumulator& reward_stats(State s, Action a) const { return rewards_[pair(s, a)]; }

  /// Empirical p̄(next | s, a); 0 for an unvisited pair.
  double empirical_transition(State s, Action a, State next) const;

  /// Overwrites the statistics of one pair. Used by synthetic test corpora.
  void set_pair(State s, Action a, std::span<const std::uint64_t> next_counts, double reward_mean,
                double reward_m2);

 private:
  std::size_t pair(State s, Action a) const { return s * num_actions_ + a; }

  std::size_t num_states_;
  std::size_t num_actions_;
  std::vector<std::uint64_t> visits_;
  std::vector<std::uint64_t> episode_visits_;
  std::vector<std::uint64_t> transitions_;
  std::vector<MomentAccumulator> rewards_;
};

/// Per-episode confidence levels δ_r^k and δ_p^k.
struct ConfidenceLevels {
  double delta_r = 0.0;
  double delta_p = 0.0;
  std::uint64_t t_k = 1;
};

/// δ_r = δ / (4 S A L) and δ_p = δ / (8 S² A L) with L = max(1, ln t_k).
ConfidenceLevels episode_confidence_levels(std::uint64_t t_k, double delta, std::size_t num_states,
                                           std::size_t num_actions);

/// Same formulas with ln t_k supplied directly (still clamped at 1).
ConfidenceLevels confidence_levels_from_log(double log_t, double delta, std::size_t num_states,
                                            std::size_t num_actions);

/// Empirical Bernstein radius
///   min(1, sqrt(2 var ln(2/δ) / n) + (7/3) ln(2/δ) / (n - 1)),
/// equal to 1 for n <= 1.
double bernstein_radius(double variance, std::uint64_t n, double delta);

/// Radius with the log term ln(2/δ) precomputed.
double bernstein_radius_from_log(double variance, std::uint64_t n, double log_term);

/// p̂(X) = p̄(X) + radius(p̄(X)(1 - p̄(X)), N, δ_p) for a subset given as a
/// list of states.
double subset_upper_bound(const CountsTable& table, State s, Action a, std::span<const State> subset,
                          const ConfidenceLevels& levels);

/// Same bound for a subset encoded as a bitmask over states (S <= 64).
double subset_upper_bound_mask(const CountsTable& table, State s, Action a, std::uint64_t subset,
                               const ConfidenceLevels& levels);

/// Bound from the aggregated empirical mass of a subset.
double transition_upper_bound(double empirical_mass, std::uint64_t n, double log_term);

/// min(1, r̄ + radius(sample variance, N, δ_r)).
double reward_upper_bound(const CountsTable& table, State s, Action a, const ConfidenceLevels& levels);

}  // namespace ucrlb
