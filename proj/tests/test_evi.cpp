#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "ucrlb/errors.hpp"
#include "ucrlb/evi.hpp"
#include "ucrlb/harness.hpp"
#include "ucrlb/verify.hpp"

using namespace ucrlb;

namespace {

ConfidenceLevels levels_with(double delta_r, double delta_p) {
  ConfidenceLevels levels;
  levels.delta_r = delta_r;
  levels.delta_p = delta_p;
  return levels;
}

ValueVector random_values(std::size_t S, Stream& stream) {
  ValueVector u;
  for (std::size_t i = 0; i < S; ++i) u.values.push_back(std::floor(stream.uniform() * 5.0) / 2.0);  // ties on purpose
  return u;
}

double dot(std::span<const double> p, std::span<const double> u) {
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) total += p[i] * u[i];
  return total;
}

// Greedy saturation of the prefixes of `order`, using only the table of
// subset bounds. Each order gives one vertex of the plausible polytope.
std::vector<double> saturate(const std::vector<State>& order, const std::vector<double>& bounds) {
  std::vector<double> p(order.size(), 0.0);
  std::uint64_t prefix = 0;
  double assigned = 0.0;
  for (State s : order) {
    prefix |= std::uint64_t{1} << s;
    p[s] = std::min(bounds[prefix] - assigned, 1.0 - assigned);
    assigned += p[s];
  }
  return p;
}

bool within_bounds(const std::vector<double>& p, const std::vector<double>& bounds) {
  for (std::uint64_t m = 0; m < bounds.size(); ++m) {
    double mass = 0.0;
    for (std::size_t s = 0; s < p.size(); ++s) {
      if (m & (std::uint64_t{1} << s)) mass += p[s];
    }
    if (mass > bounds[m] + 1e-12) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("span") {
  const std::vector<double> constant{2.5, 2.5, 2.5};
  const std::vector<double> mixed{3.0, 1.0, 2.0};
  CHECK(span(constant) == 0.0);
  CHECK(span(mixed) == 2.0);
  CHECK(span(std::vector<double>{}) == 0.0);
  Stream stream(1);
  for (int i = 0; i < 100; ++i) {
    std::vector<double> v(5);
    for (double& x : v) x = stream.uniform();
    const double c = 10.0 * stream.uniform() - 5.0;
    std::vector<double> shifted = v;
    for (double& x : shifted) x += c;
    CHECK(span(shifted) == doctest::Approx(span(v)).epsilon(1e-12));
  }
}

TEST_CASE("descending order breaks ties by state index") {
  const std::vector<double> u{1.0, 3.0, 1.0, 3.0, 2.0};
  CHECK(descending_order(u) == std::vector<State>{1, 3, 4, 0, 2});
}

TEST_CASE("optimistic transition on an unvisited pair is a point mass on the best state") {
  CountsTable table(4, 1);
  ValueVector u{{0.2, 0.9, 0.9, 0.1}, 0};
  const auto p = optimistic_transition(u, table, 0, 0, levels_with(0.05, 0.05));
  CHECK(p == std::vector<double>{0.0, 1.0, 0.0, 0.0});
}

TEST_CASE("optimistic transition two-state example") {
  CountsTable table(2, 1);
  const std::vector<std::uint64_t> counts{50, 50};
  table.set_pair(0, 0, counts, 0.5, 0.0);
  const auto p = optimistic_transition(ValueVector{{1.0, 0.0}, 0}, table, 0, 0, levels_with(0.05, 0.1));
  CHECK(p[0] == doctest::Approx(0.692993826095919).epsilon(1e-13));
  CHECK(p[1] == doctest::Approx(0.307006173904081).epsilon(1e-12));
  CHECK(p[0] + p[1] == 1.0);
}

TEST_CASE("optimistic transition approaches the empirical kernel as the radius vanishes") {
  CountsTable table(3, 1);
  const std::vector<std::uint64_t> counts{200'000'000, 300'000'000, 500'000'000};
  table.set_pair(0, 0, counts, 0.5, 0.0);
  const auto p = optimistic_transition(ValueVector{{0.0, 1.0, 2.0}, 0}, table, 0, 0, levels_with(0.5, 0.5));
  CHECK(p[0] == doctest::Approx(0.2).epsilon(1e-3));
  CHECK(p[1] == doctest::Approx(0.3).epsilon(1e-3));
  CHECK(p[2] == doctest::Approx(0.5).epsilon(1e-3));
}

TEST_CASE("property: optimistic transitions are distributions within every subset bound") {
  Stream stream(2718);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t S = 1 + trial % 6;
    const CountsTable table = random_counts_table(S, 2, stream);
    const ConfidenceLevels levels = random_levels(S, 2, stream);
    const ValueVector u = random_values(S, stream);
    for (Action a = 0; a < 2; ++a) {
      const auto p = optimistic_transition(u, table, 0, a, levels);
      double total = 0.0;
      for (double x : p) {
        CHECK(x >= -1e-12);
        total += x;
      }
      CHECK(std::abs(total - 1.0) <= 1e-12);
      CHECK(within_bounds(p, all_subset_bounds(table, 0, a, levels)));
    }
  }
}

TEST_CASE("property: the optimistic transition dominates every plausible distribution") {
  Stream stream(1618);
  std::size_t accepted_total = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t S = 2 + trial % 4;
    const CountsTable table = random_counts_table(S, 1, stream, 200);
    const ConfidenceLevels levels = random_levels(S, 1, stream);
    const auto bounds = all_subset_bounds(table, 0, 0, levels);
    ValueVector u;
    for (std::size_t i = 0; i < S; ++i) u.values.push_back(stream.uniform());
    const double best = dot(optimistic_transition(u, table, 0, 0, levels), u.values);

    std::vector<State> order(S);
    std::iota(order.begin(), order.end(), State{0});
    do {
      const auto vertex = saturate(order, bounds);
      CHECK(best >= dot(vertex, u.values) - 1e-9);
    } while (std::next_permutation(order.begin(), order.end()));

    for (int draw = 0; draw < 2000; ++draw) {
      std::vector<double> p(S);
      double total = 0.0;
      for (double& x : p) total += x = -std::log(1.0 - stream.uniform());
      for (double& x : p) x /= total;
      if (!within_bounds(p, bounds)) continue;
      ++accepted_total;
      CHECK(best >= dot(p, u.values) - 1e-9);
    }
  }
  CHECK(accepted_total > 1000);
}

TEST_CASE("sweep on a single-state model picks the best optimistic arm") {
  CountsTable table(1, 2);
  for (int i = 0; i < 100; ++i) {
    table.record_transition(0, 0, 0.2, 0);
    table.record_transition(0, 1, 0.6, 0);
  }
  const ConfidenceLevels levels = levels_with(0.05, 0.05);
  const SweepResult r = evi_sweep(ValueVector{{0.0}, 0}, table, levels);
  CHECK(r.greedy[0] == 1);
  CHECK(r.difference[0] == doctest::Approx(reward_upper_bound(table, 0, 1, levels)));
  CHECK(r.u.values[0] == 0.0);
  CHECK(r.u.iteration == 1);
}

TEST_CASE("sweep on empty counts is uniformly optimistic") {
  CountsTable table(4, 3);
  const SweepResult r = evi_sweep(ValueVector{std::vector<double>(4, 0.0), 0}, table, levels_with(0.05, 0.05));
  for (double d : r.difference) CHECK(d == 1.0);
  CHECK(span(r.difference) == 0.0);
  CHECK(r.greedy == Policy(4, 0));
}

TEST_CASE("sweep values match the brute-force inner maximum") {
  Stream stream(33);
  for (int trial = 0; trial < 40; ++trial) {
    const CountsTable table = random_counts_table(3, 2, stream, 300);
    const ConfidenceLevels levels = random_levels(3, 2, stream);
    ValueVector u;
    for (int i = 0; i < 3; ++i) u.values.push_back(stream.uniform());
    const SweepResult r = evi_sweep(u, table, levels);
    for (State s = 0; s < 3; ++s) {
      double oracle = -1.0;
      for (Action a = 0; a < 2; ++a) {
        oracle = std::max(oracle, reward_upper_bound(table, s, a, levels) + inner_max_oracle(u, table, s, a, levels));
      }
      // The grid can only underestimate, by at most a grid step per state.
      const double swept = u.values[s] + r.difference[s];
      CHECK(swept >= oracle - 1e-9);
      CHECK(swept <= oracle + 2e-3);
    }
  }
}

TEST_CASE("modified extended value iteration on simple tables") {
  CountsTable bandit(1, 2);
  for (int i = 0; i < 50; ++i) {
    bandit.record_transition(0, 0, 0.9, 0);
    bandit.record_transition(0, 1, 0.1, 0);
  }
  const ConfidenceLevels levels = levels_with(0.05, 0.05);
  const OptimisticPlan plan = modified_extended_vi(bandit, levels, 0.01);
  CHECK(plan.gain_estimate == doctest::Approx(reward_upper_bound(bandit, 0, 0, levels)));
  CHECK(plan.policy[0] == 0);
  // One sweep reaches the fixed point; iterations count sweeps.
  CHECK(plan.iterations == 1);

  const OptimisticPlan empty = modified_extended_vi(CountsTable(5, 2), levels, 0.01);
  CHECK(empty.gain_estimate == 1.0);
  CHECK(empty.span_residual == 0.0);
  CHECK(empty.policy == Policy(5, 0));

  CHECK_THROWS_AS(modified_extended_vi(bandit, levels, 0.0), ConfigError);
  CHECK_THROWS_AS(modified_extended_vi(bandit, levels, -1.0), ConfigError);
}

TEST_CASE("property: planner stops within epsilon and its gain matches the greedy policy") {
  Stream stream(4242);
  double worst_ratio = 0.0;
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t S = 2 + trial % 5;
    const std::size_t A = 1 + trial % 3;
    const CountsTable table = random_counts_table(S, A, stream);
    const ConfidenceLevels levels = random_levels(S, A, stream);
    const double eps = std::vector<double>{0.1, 0.03, 0.01}[trial % 3];
    const OptimisticPlan plan = modified_extended_vi(table, levels, eps);
    CHECK(plan.span_residual <= eps);
    CHECK(plan.gain_estimate >= 0.0);
    CHECK(plan.gain_estimate <= 1.0);
    std::vector<double> rewards(S);
    for (State s = 0; s < S; ++s) rewards[s] = plan.rewards[s * A + plan.policy[s]];
    const double gain = markov_chain_gain(plan.policy_kernel, rewards, 1e-12);
    CHECK(std::abs(gain - plan.gain_estimate) <= eps);
    worst_ratio = std::max(worst_ratio, std::abs(gain - plan.gain_estimate) / eps);
  }
  MESSAGE("largest |gain - estimate| / epsilon: " << worst_ratio);
}

TEST_CASE("planner is optimistic on riverswim counts") {
  EnvSpec spec;
  spec.kind = EnvKind::riverswim;
  const TabularMDP mdp = build_env(spec);
  const double v_star = optimal_gain(mdp, 1e-10).gain;
  const double eps = 1e-2;
  int optimistic = 0;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    TrialStreams streams = make_streams(seed, 0, 6, 2);
    CountsTable table(6, 2);
    State s = mdp.initial_state();
    for (int t = 0; t < 10000; ++t) {
      const Action a = streams.agent.uniform() < 0.5 ? 0 : 1;
      const StepResult step = env_step(mdp, s, a, streams.pair(s, a));
      table.record_transition(s, a, step.reward, step.next);
      s = step.next;
    }
    const ConfidenceLevels levels = episode_confidence_levels(10000, 0.05, 6, 2);
    if (modified_extended_vi(table, levels, eps).gain_estimate >= v_star - eps) ++optimistic;
  }
  // The confidence sets hold with probability at least 1 - delta = 0.95.
  CHECK(optimistic >= 38);
}
