#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ucrlb/confidence.hpp"
#include "ucrlb/mdp.hpp"

namespace ucrlb {

/// Extended value iteration iterate u_i.
struct ValueVector {
  std::vector<double> values;
  std::size_t iteration = 0;
};

/// Output of extended value iteration.
///
/// `rewards` holds the optimistic reward of every pair and `policy_kernel`
/// the optimistic transition rows p̃(.|s, policy[s]) of the final sweep, so
/// the greedy policy can be evaluated in the optimistic MDP it was chosen in.
struct OptimisticPlan {
  Policy policy;
  ValueVector u;
  double gain_estimate = 0.0;
  double span_residual = 0.0;
  std::size_t iterations = 0;
  std::vector<double> rewards;        // s * A + a
  std::vector<double> policy_kernel;  // s * S + next
};

/// max - min of the entries (0 for an empty range).
double span(std::span<const double> values);

/// States sorted by decreasing value; ties keep ascending state index.
std::vector<State> descending_order(std::span<const double> values);

/// Plausible-set description consumed by extended value iteration.
///
/// `optimistic_transition` must depend on the value vector only through the
/// descending order of states; the solver relies on this to reuse rows
/// across sweeps whose order did not change.
class OptimisticModel {
 public:
  virtual ~OptimisticModel() = default;
  virtual std::size_t num_states() const = 0;
  virtual std::size_t num_actions() const = 0;
  virtual double reward_bound(State s, Action a) const = 0;
  virtual void optimistic_transition(State s, Action a, std::span<const State> order,
                                     std::span<double> out) const = 0;
};

/// Empirical-Bernstein plausible set: rewards within min(1, r̄ + c_r) and
/// every subset of next states within p̂(X).
class BernsteinModel final : public OptimisticModel {
 public:
  BernsteinModel(const CountsTable& table, const ConfidenceLevels& levels);

  std::size_t num_states() const override { return table_.num_states(); }
  std::size_t num_actions() const override { return table_.num_actions(); }
  double reward_bound(State s, Action a) const override { return rewards_[s * num_actions() + a]; }
  void optimistic_transition(State s, Action a, std::span<const State> order,
                             std::span<double> out) const override;

 private:
  const CountsTable& table_;
  double log_term_;
  std::vector<double> rewards_;
};

/// Greedy prefix assignment: with states in `order`, the j-th state gets
///   min(p̂(first j) - assigned, 1 - assigned).
/// Only S prefix constraints are evaluated; submodularity of p̂ makes the
/// result satisfy all 2^S subset constraints.
void optimistic_transition(std::span<const State> order, const CountsTable& table, State s, Action a,
                           const ConfidenceLevels& levels, std::span<double> out);

std::vector<double> optimistic_transition(const ValueVector& u, const CountsTable& table, State s, Action a,
                                          const ConfidenceLevels& levels);

struct SweepResult {
  ValueVector u;                   // renormalised so that min u = 0
  Policy greedy;                   // lowest action index on ties
  std::vector<double> difference;  // raw u_{i+1} - u_i before renormalisation
};

SweepResult extended_sweep(const ValueVector& u, const OptimisticModel& model);

SweepResult evi_sweep(const ValueVector& u, const CountsTable& table, const ConfidenceLevels& levels);

/// Repeats sweeps from u_0 = 0 until span(u_{i+1} - u_i) <= epsilon.
/// Throws ConvergenceError (with the recent span history) past the cap.
OptimisticPlan extended_value_iteration(const OptimisticModel& model, double epsilon,
                                        std::size_t max_iterations = 10'000'000);

OptimisticPlan modified_extended_vi(const CountsTable& table, const ConfidenceLevels& levels, double epsilon,
                                    std::size_t max_iterations = 10'000'000);

}  // namespace ucrlb
