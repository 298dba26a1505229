#include "ucrlb/evi.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <sstream>

#include "ucrlb/errors.hpp"

namespace ucrlb {

double span(std::span<const double> values) {
  if (values.empty()) return 0.0;
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  return *hi - *lo;
}

std::vector<State> descending_order(std::span<const double> values) {
  std::vector<State> order(values.size());
  std::iota(order.begin(), order.end(), State{0});
  std::stable_sort(order.begin(), order.end(), [&](State x, State y) { return values[x] > values[y]; });
  return order;
}

namespace {

void prefix_assignment(std::span<const State> order, std::span<const std::uint64_t> counts, std::uint64_t n,
                       double log_term, std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  std::uint64_t prefix_hits = 0;
  double assigned = 0.0;
  for (State next : order) {
    if (assigned >= 1.0) break;
    prefix_hits += counts[next];
    const double mass = n == 0 ? 0.0 : static_cast<double>(prefix_hits) / static_cast<double>(n);
    const double bound = transition_upper_bound(mass, n, log_term);
    const double p = std::max(0.0, std::min(bound - assigned, 1.0 - assigned));
    out[next] = p;
    assigned += p;
  }
}

}  // namespace

void optimistic_transition(std::span<const State> order, const CountsTable& table, State s, Action a,
                           const ConfidenceLevels& levels, std::span<double> out) {
  prefix_assignment(order, table.transition_counts(s, a), table.visits(s, a), std::log(2.0 / levels.delta_p), out);
}

std::vector<double> optimistic_transition(const ValueVector& u, const CountsTable& table, State s, Action a,
                                          const ConfidenceLevels& levels) {
  std::vector<double> out(table.num_states(), 0.0);
  const auto order = descending_order(u.values);
  optimistic_transition(order, table, s, a, levels, out);
  return out;
}

BernsteinModel::BernsteinModel(const CountsTable& table, const ConfidenceLevels& levels)
    : table_(table), log_term_(std::log(2.0 / levels.delta_p)) {
  rewards_.resize(table.num_states() * table.num_actions());
  for (State s = 0; s < table.num_states(); ++s) {
    for (Action a = 0; a < table.num_actions(); ++a) {
      rewards_[s * table.num_actions() + a] = reward_upper_bound(table, s, a, levels);
    }
  }
}

void BernsteinModel::optimistic_transition(State s, Action a, std::span<const State> order,
                                           std::span<double> out) const {
  prefix_assignment(order, table_.transition_counts(s, a), table_.visits(s, a), log_term_, out);
}

SweepResult extended_sweep(const ValueVector& u, const OptimisticModel& model) {
  const std::size_t S = model.num_states();
  const std::size_t A = model.num_actions();
  const auto order = descending_order(u.values);
  std::vector<double> row(S);

  SweepResult result;
  result.u.values.resize(S);
  result.u.iteration = u.iteration + 1;
  result.greedy.assign(S, 0);
  result.difference.resize(S);
  for (State s = 0; s < S; ++s) {
    double best = -std::numeric_limits<double>::infinity();
    for (Action a = 0; a < A; ++a) {
      model.optimistic_transition(s, a, order, row);
      double q = model.reward_bound(s, a);
      for (State n = 0; n < S; ++n) q += row[n] * u.values[n];
      if (q > best) {
        best = q;
        result.greedy[s] = a;
      }
    }
    result.u.values[s] = best;
    result.difference[s] = best - u.values[s];
  }
  const double base = *std::min_element(result.u.values.begin(), result.u.values.end());
  for (double& v : result.u.values) v -= base;
  return result;
}

SweepResult evi_sweep(const ValueVector& u, const CountsTable& table, const ConfidenceLevels& levels) {
  return extended_sweep(u, BernsteinModel(table, levels));
}

namespace {

/// Optimistic rows of every pair, kept sparse for the dot products.
class KernelCache {
 public:
  KernelCache(std::size_t S, std::size_t A) : S_(S), A_(A), dense_(S), offsets_(S * A + 1, 0) {}

  void rebuild(const OptimisticModel& model, std::span<const State> order) {
    indices_.clear();
    probs_.clear();
    for (State s = 0; s < S_; ++s) {
      for (Action a = 0; a < A_; ++a) {
        model.optimistic_transition(s, a, order, dense_);
        for (State n = 0; n < S_; ++n) {
          if (dense_[n] != 0.0) {
            indices_.push_back(static_cast<std::uint32_t>(n));
            probs_.push_back(dense_[n]);
          }
        }
        offsets_[s * A_ + a + 1] = indices_.size();
      }
    }
  }

  double expectation(State s, Action a, std::span<const double> u) const {
    double total = 0.0;
    for (std::size_t k = offsets_[s * A_ + a]; k < offsets_[s * A_ + a + 1]; ++k) total += probs_[k] * u[indices_[k]];
    return total;
  }

  void copy_row(State s, Action a, std::span<double> out) const {
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t k = offsets_[s * A_ + a]; k < offsets_[s * A_ + a + 1]; ++k) out[indices_[k]] = probs_[k];
  }

 private:
  std::size_t S_;
  std::size_t A_;
  std::vector<double> dense_;
  std::vector<std::size_t> offsets_;
  std::vector<std::uint32_t> indices_;
  std::vector<double> probs_;
};

}  // namespace

OptimisticPlan extended_value_iteration(const OptimisticModel& model, double epsilon, std::size_t max_iterations) {
  if (!(epsilon > 0.0)) throw ConfigError("extended value iteration requires epsilon > 0");
  const std::size_t S = model.num_states();
  const std::size_t A = model.num_actions();

  std::vector<double> rewards(S * A);
  for (State s = 0; s < S; ++s)
    for (Action a = 0; a < A; ++a) rewards[s * A + a] = model.reward_bound(s, a);

  KernelCache cache(S, A);
  std::vector<double> u(S, 0.0);
  std::vector<double> next(S, 0.0);
  Policy greedy(S, 0);
  std::vector<State> order;
  std::vector<State> cached_order;
  std::deque<double> history;

  for (std::size_t it = 1; it <= max_iterations; ++it) {
    order = descending_order(u);
    if (order != cached_order) {
      cache.rebuild(model, order);
      cached_order = order;
    }
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (State s = 0; s < S; ++s) {
      double best = -std::numeric_limits<double>::infinity();
      Action best_a = 0;
      for (Action a = 0; a < A; ++a) {
        const double q = rewards[s * A + a] + cache.expectation(s, a, u);
        if (q > best) {
          best = q;
          best_a = a;
        }
      }
      next[s] = best;
      greedy[s] = best_a;
      const double d = best - u[s];
      lo = std::min(lo, d);
      hi = std::max(hi, d);
    }
    const double base = *std::min_element(next.begin(), next.end());
    for (State s = 0; s < S; ++s) u[s] = next[s] - base;

    const double residual = hi - lo;
    history.push_back(residual);
    if (history.size() > 16) history.pop_front();

    if (residual <= epsilon) {
      OptimisticPlan plan;
      plan.policy = greedy;
      plan.u.values = u;
      plan.u.iteration = it;
      plan.gain_estimate = 0.5 * (hi + lo);
      plan.span_residual = residual;
      plan.iterations = it;
      plan.rewards = std::move(rewards);
      plan.policy_kernel.assign(S * S, 0.0);
      for (State s = 0; s < S; ++s) {
        cache.copy_row(s, greedy[s], std::span<double>(plan.policy_kernel).subspan(s * S, S));
      }
      return plan;
    }
  }
  std::ostringstream msg;
  msg << "extended value iteration did not reach span " << epsilon << " within " << max_iterations << " sweeps";
  throw ConvergenceError(msg.str(), {history.begin(), history.end()});
}

OptimisticPlan modified_extended_vi(const CountsTable& table, const ConfidenceLevels& levels, double epsilon,
                                    std::size_t max_iterations) {
  return extended_value_iteration(BernsteinModel(table, levels), epsilon, max_iterations);
}

}  // namespace ucrlb
