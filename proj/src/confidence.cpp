#include "ucrlb/confidence.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "ucrlb/errors.hpp"

namespace ucrlb {

CountsTable::CountsTable(std::size_t num_states, std::size_t num_actions)
    : num_states_(num_states),
      num_actions_(num_actions),
      visits_(num_states * num_actions, 0),
      episode_visits_(num_states * num_actions, 0),
      transitions_(num_states * num_actions * num_states, 0),
      rewards_(num_states * num_actions) {}

void CountsTable::record_transition(State s, Action a, double reward, State next) {
  if (s >= num_states_ || next >= num_states_ || a >= num_actions_) {
    throw DataError("record_transition: index out of range");
  }
  if (!(reward >= 0.0 && reward <= 1.0)) {
    std::ostringstream msg;
    msg << "record_transition: reward " << reward << " outside [0,1]";
    throw DataError(msg.str());
  }
  const std::size_t p = pair(s, a);
  ++visits_[p];
  ++episode_visits_[p];
  ++transitions_[p * num_states_ + next];
  rewards_[p].add(reward);
}

void CountsTable::start_episode() { std::fill(episode_visits_.begin(), episode_visits_.end(), 0); }

double CountsTable::empirical_transition(State s, Action a, State next) const {
  const std::uint64_t n = visits(s, a);
  if (n == 0) return 0.0;
  return static_cast<double>(transition_count(s, a, next)) / static_cast<double>(n);
}

void CountsTable::set_pair(State s, Action a, std::span<const std::uint64_t> next_counts, double reward_mean,
                           double reward_m2) {
  const std::size_t p = pair(s, a);
  std::copy(next_counts.begin(), next_counts.end(), transitions_.begin() + static_cast<std::ptrdiff_t>(p * num_states_));
  visits_[p] = std::accumulate(next_counts.begin(), next_counts.end(), std::uint64_t{0});
  rewards_[p] = MomentAccumulator::from_moments(visits_[p], reward_mean, reward_m2);
}

ConfidenceLevels confidence_levels_from_log(double log_t, double delta, std::size_t num_states,
                                            std::size_t num_actions) {
  const double L = std::max(1.0, log_t);
  const double S = static_cast<double>(num_states);
  const double A = static_cast<double>(num_actions);
  ConfidenceLevels levels;
  levels.delta_r = delta / (4.0 * S * A * L);
  levels.delta_p = delta / (8.0 * S * S * A * L);
  return levels;
}

ConfidenceLevels episode_confidence_levels(std::uint64_t t_k, double delta, std::size_t num_states,
                                           std::size_t num_actions) {
  ConfidenceLevels levels =
      confidence_levels_from_log(std::log(static_cast<double>(std::max<std::uint64_t>(t_k, 1))), delta,
                                 num_states, num_actions);
  levels.t_k = t_k;
  return levels;
}

double bernstein_radius_from_log(double variance, std::uint64_t n, double log_term) {
  if (n <= 1) return 1.0;
  const double count = static_cast<double>(n);
  const double radius =
      std::sqrt(2.0 * std::max(variance, 0.0) * log_term / count) + (7.0 / 3.0) * log_term / (count - 1.0);
  return std::min(1.0, radius);
}

double bernstein_radius(double variance, std::uint64_t n, double delta) {
  return bernstein_radius_from_log(variance, n, std::log(2.0 / delta));
}

double transition_upper_bound(double empirical_mass, std::uint64_t n, double log_term) {
  return empirical_mass + bernstein_radius_from_log(empirical_mass * (1.0 - empirical_mass), n, log_term);
}

double subset_upper_bound(const CountsTable& table, State s, Action a, std::span<const State> subset,
                          const ConfidenceLevels& levels) {
  const std::uint64_t n = table.visits(s, a);
  std::uint64_t hits = 0;
  for (State x : subset) hits += table.transition_count(s, a, x);
  const double mass = n == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(n);
  return transition_upper_bound(mass, n, std::log(2.0 / levels.delta_p));
}

double subset_upper_bound_mask(const CountsTable& table, State s, Action a, std::uint64_t subset,
                               const ConfidenceLevels& levels) {
  const std::uint64_t n = table.visits(s, a);
  const auto counts = table.transition_counts(s, a);
  std::uint64_t hits = 0;
  for (State x = 0; x < counts.size(); ++x) {
    if ((subset >> x) & 1U) hits += counts[x];
  }
  const double mass = n == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(n);
  return transition_upper_bound(mass, n, std::log(2.0 / levels.delta_p));
}

double reward_upper_bound(const CountsTable& table, State s, Action a, const ConfidenceLevels& levels) {
  const auto& stats = table.reward_stats(s, a);
  const double radius = bernstein_radius(stats.variance(), stats.count(), levels.delta_r);
  return std::min(1.0, stats.mean() + radius);
}

}  // namespace ucrlb
