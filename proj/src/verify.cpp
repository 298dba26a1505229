#include "ucrlb/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include <json.hpp>

#include "ucrlb/errors.hpp"

namespace ucrlb {

namespace {

constexpr double kSubsetTol = 1e-12;
constexpr std::size_t kMaxDumps = 20;

double mask_mass(std::span<const double> p, std::uint64_t mask) {
  double total = 0.0;
  for (std::size_t x = 0; x < p.size(); ++x) {
    if ((mask >> x) & 1U) total += p[x];
  }
  return total;
}

nlohmann::json table_json(const CountsTable& table, State s, Action a) {
  const auto counts = table.transition_counts(s, a);
  const auto& stats = table.reward_stats(s, a);
  return {{"next_counts", std::vector<std::uint64_t>(counts.begin(), counts.end())},
          {"visits", table.visits(s, a)},
          {"reward_mean", stats.mean()},
          {"reward_m2", stats.m2()}};
}

std::size_t uniform_index(Stream& stream, std::size_t n) {
  return std::min(n - 1, static_cast<std::size_t>(stream.uniform() * static_cast<double>(n)));
}

}  // namespace

std::vector<double> all_subset_bounds(const CountsTable& table, State s, Action a, const ConfidenceLevels& levels) {
  const std::size_t S = table.num_states();
  if (S > 20) throw GuardError("exhaustive subset enumeration needs S <= 20");
  std::vector<double> bounds(std::size_t{1} << S);
  for (std::uint64_t mask = 0; mask < bounds.size(); ++mask) {
    bounds[mask] = subset_upper_bound_mask(table, s, a, mask, levels);
  }
  return bounds;
}

std::optional<std::uint64_t> find_subset_violation(std::span<const double> p_tilde, const CountsTable& table,
                                                   State s, Action a, const ConfidenceLevels& levels) {
  const std::size_t S = table.num_states();
  if (S > 20) throw GuardError("exhaustive subset enumeration needs S <= 20");
  if (p_tilde.size() != S) throw std::invalid_argument("p_tilde has the wrong length");
  const std::uint64_t count = std::uint64_t{1} << S;
  // Masses of all subsets, built from the mask with the top bit removed.
  std::vector<double> mass(count, 0.0);
  for (std::uint64_t mask = 1; mask < count; ++mask) {
    const unsigned top = 63U - static_cast<unsigned>(__builtin_clzll(mask));
    mass[mask] = mass[mask ^ (std::uint64_t{1} << top)] + p_tilde[top];
  }
  for (std::uint64_t mask = 0; mask < count; ++mask) {
    if (mass[mask] > subset_upper_bound_mask(table, s, a, mask, levels) + kSubsetTol) return mask;
  }
  return std::nullopt;
}

bool check_all_subsets(std::span<const double> p_tilde, const CountsTable& table, State s, Action a,
                       const ConfidenceLevels& levels) {
  return !find_subset_violation(p_tilde, table, s, a, levels).has_value();
}

double inner_max_oracle(std::span<const double> u, std::span<const double> subset_bounds, double step) {
  const std::size_t S = u.size();
  if (S == 0 || S > 4) throw GuardError("grid oracle needs 1 <= S <= 4");
  if (subset_bounds.size() != (std::size_t{1} << S)) throw std::invalid_argument("need one bound per subset");
  if (!(step > 0.0 && step <= 1.0)) throw std::invalid_argument("grid step must lie in (0,1]");
  const auto units = static_cast<long>(std::llround(1.0 / step));
  const double unit = 1.0 / static_cast<double>(units);

  std::vector<long> mass(std::size_t{1} << S, 0);
  std::vector<long> q(S, 0);
  double best = -std::numeric_limits<double>::infinity();

  // Assign units to states in index order; after state i is fixed, every
  // subset whose largest member is i has its final mass.
  auto feasible_after = [&](std::size_t i) {
    const std::uint64_t bit = std::uint64_t{1} << i;
    for (std::uint64_t low = 0; low < bit; ++low) {
      const std::uint64_t mask = low | bit;
      mass[mask] = mass[low] + q[i];
      if (static_cast<double>(mass[mask]) * unit > subset_bounds[mask] + kSubsetTol) return false;
    }
    return true;
  };
  auto recurse = [&](auto&& self, std::size_t i, long left) -> void {
    if (i + 1 == S) {
      q[i] = left;
      if (!feasible_after(i)) return;
      double value = 0.0;
      for (std::size_t x = 0; x < S; ++x) value += static_cast<double>(q[x]) * unit * u[x];
      best = std::max(best, value);
      return;
    }
    for (long k = 0; k <= left; ++k) {
      q[i] = k;
      if (!feasible_after(i)) break;  // mass only grows with k
      self(self, i + 1, left - k);
    }
  };
  recurse(recurse, 0, units);
  return best;
}

double inner_max_oracle(const ValueVector& u, const CountsTable& table, State s, Action a,
                        const ConfidenceLevels& levels, double step) {
  if (table.num_states() > 4) throw GuardError("grid oracle needs S <= 4");
  return inner_max_oracle(u.values, all_subset_bounds(table, s, a, levels), step);
}

std::optional<SubmodularityViolation> find_submodularity_violation(std::size_t num_states, const SetFunction& f,
                                                                   double tol) {
  if (num_states > 6) throw GuardError("exhaustive submodularity check needs S <= 6");
  const std::uint64_t count = std::uint64_t{1} << num_states;
  std::vector<double> value(count);
  for (std::uint64_t m = 0; m < count; ++m) value[m] = f(m);

  std::optional<SubmodularityViolation> worst;
  for (std::uint64_t y = 0; y < count; ++y) {
    // Walk the submasks x_set of y, including y itself and the empty set.
    for (std::uint64_t x = y;; x = (x - 1) & y) {
      for (State e = 0; e < num_states; ++e) {
        const std::uint64_t bit = std::uint64_t{1} << e;
        if (!(x & bit)) continue;
        const double gap = (value[y] - value[y ^ bit]) - (value[x] - value[x ^ bit]);
        if (gap > tol && (!worst || gap > worst->gap)) worst = SubmodularityViolation{x, y, e, gap};
      }
      if (x == 0) break;
    }
  }
  return worst;
}

bool check_submodularity(const CountsTable& table, State s, Action a, const ConfidenceLevels& levels) {
  const SetFunction f = [&](std::uint64_t m) { return subset_upper_bound_mask(table, s, a, m, levels); };
  return !find_submodularity_violation(table.num_states(), f).has_value();
}

SetFunction convex_radius_bound(const CountsTable& table, State s, Action a) {
  std::vector<double> p(table.num_states());
  for (State x = 0; x < p.size(); ++x) p[x] = table.empirical_transition(s, a, x);
  return [p](std::uint64_t m) {
    const double mass = mask_mass(p, m);
    return mass + 0.5 * mass * mass;
  };
}

double episode_bound(std::size_t num_states, std::size_t num_actions, double horizon) {
  const double sa = static_cast<double>(num_states * num_actions);
  if (num_states < 1 || num_actions < 1) throw ConfigError("episode_bound: S and A must be positive");
  if (!(horizon > sa)) throw ConfigError("episode_bound: needs T > S A");
  return sa * std::log2(8.0 * horizon / sa);
}

double theoretical_regret_bound(double diameter, std::size_t num_states, std::size_t num_actions, double horizon,
                                double delta) {
  const double S = static_cast<double>(num_states);
  const double A = static_cast<double>(num_actions);
  if (!(diameter > 0.0)) throw ConfigError("theoretical_regret_bound: D must be positive");
  if (num_states < 1 || num_actions < 1) throw ConfigError("theoretical_regret_bound: S and A must be positive");
  if (!(horizon > S * A) || !(horizon > 1.0)) throw ConfigError("theoretical_regret_bound: needs T > S A");
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("theoretical_regret_bound: delta must lie in (0,1)");
  const double B = 32.0 * S * A * std::log(horizon);
  const double log_t = std::log(8.0 * horizon / (S * A));
  const double first = 1024.0 * std::sqrt(diameter * horizon * S * A * std::min(std::log(diameter + 1.0), S) *
                                          log_t * std::log(B * S / delta));
  const double second = 64.0 * diameter * S * A * log_t * std::log(B / delta);
  return first + second;
}

BoundReport bound_report(double diameter, std::size_t num_states, std::size_t num_actions, double horizon,
                         double delta) {
  BoundReport r;
  r.theoretical_regret = theoretical_regret_bound(diameter, num_states, num_actions, horizon, delta);
  r.episode_bound = episode_bound(num_states, num_actions, horizon);
  r.diameter = diameter;
  r.num_states = num_states;
  r.num_actions = num_actions;
  r.horizon = horizon;
  r.delta = delta;
  return r;
}

CountsTable random_counts_table(std::size_t num_states, std::size_t num_actions, Stream& stream,
                                std::uint64_t max_visits) {
  CountsTable table(num_states, num_actions);
  std::vector<double> weights(num_states);
  std::vector<std::uint64_t> counts(num_states);
  for (State s = 0; s < num_states; ++s) {
    for (Action a = 0; a < num_actions; ++a) {
      std::uint64_t n = 0;
      if (stream.uniform() >= 0.1) {
        const double logn = stream.uniform() * std::log(static_cast<double>(max_visits) + 1.0);
        n = std::clamp<std::uint64_t>(static_cast<std::uint64_t>(std::exp(logn)), 1, max_visits);
      }
      double total = 0.0;
      for (double& w : weights) {
        const double v = stream.uniform();
        w = stream.uniform() < 0.3 ? 0.0 : v * v;
        total += w;
      }
      if (total == 0.0) {
        weights[uniform_index(stream, num_states)] = 1.0;
        total = 1.0;
      }
      // Multinomial draw as a chain of conditional binomials.
      std::uint64_t left = n;
      double mass_left = total;
      for (State x = 0; x < num_states; ++x) {
        if (x + 1 == num_states || mass_left <= 0.0) {
          counts[x] = left;
          left = 0;
          continue;
        }
        const double p = std::clamp(weights[x] / mass_left, 0.0, 1.0);
        std::binomial_distribution<std::uint64_t> binom(left, p);
        counts[x] = left == 0 ? 0 : binom(stream);
        left -= counts[x];
        mass_left -= weights[x];
      }
      const double mean = n == 0 ? 0.0 : stream.uniform();
      const double m2 = static_cast<double>(n) * mean * (1.0 - mean) * stream.uniform();
      table.set_pair(s, a, counts, mean, m2);
    }
  }
  return table;
}

ConfidenceLevels random_levels(std::size_t num_states, std::size_t num_actions, Stream& stream) {
  const double t = std::exp(stream.uniform() * std::log(1e6));
  return episode_confidence_levels(static_cast<std::uint64_t>(std::max(1.0, t)), 0.05, num_states, num_actions);
}

// ---------------------------------------------------------------------------
// Suites

namespace {

void note_failure(SuiteOutcome& out, const nlohmann::json& example) {
  ++out.failures;
  if (out.counterexamples.size() < kMaxDumps) out.counterexamples.push_back(example.dump());
}

SuiteOutcome subsets_suite(const VerifyOptions& options) {
  SuiteOutcome out;
  out.scope = "subsets";
  Stream stream(derive_key({options.seed, 1}));
  constexpr std::size_t S = 5;
  constexpr std::size_t A = 2;
  std::vector<double> p(S);
  for (std::size_t c = 0; c < options.cases; ++c) {
    const CountsTable table = random_counts_table(S, A, stream);
    const ConfidenceLevels levels = random_levels(S, A, stream);
    ValueVector u;
    u.values.resize(S);
    for (double& v : u.values) v = stream.uniform();
    const auto order = descending_order(u.values);
    for (State s = 0; s < S; ++s) {
      for (Action a = 0; a < A; ++a) {
        ++out.cases;
        optimistic_transition(order, table, s, a, levels, p);
        if (options.corrupt) {
          // Push the state with the tightest singleton bound past it.
          State x = 0;
          double tight = std::numeric_limits<double>::infinity();
          for (State y = 0; y < S; ++y) {
            const double b = subset_upper_bound_mask(table, s, a, std::uint64_t{1} << y, levels);
            if (b < tight) {
              tight = b;
              x = y;
            }
          }
          p[x] = tight + 1e-6;
        }
        if (const auto bad = find_subset_violation(p, table, s, a, levels)) {
          note_failure(out, {{"case", c},
                             {"s", s},
                             {"a", a},
                             {"p_tilde", p},
                             {"subset_mask", *bad},
                             {"delta_p", levels.delta_p},
                             {"pair", table_json(table, s, a)}});
        }
      }
    }
  }
  return out;
}

SuiteOutcome oracle_suite(const VerifyOptions& options) {
  SuiteOutcome out;
  out.scope = "oracle";
  Stream stream(derive_key({options.seed, 2}));
  constexpr std::size_t S = 3;
  constexpr double kStep = 1e-3;
  std::vector<double> p(S);
  for (std::size_t c = 0; c < options.cases; ++c) {
    ++out.cases;
    const CountsTable table = random_counts_table(S, 1, stream);
    const ConfidenceLevels levels = random_levels(S, 1, stream);
    ValueVector u;
    u.values.resize(S);
    for (double& v : u.values) v = stream.uniform();
    const auto order = descending_order(u.values);
    optimistic_transition(order, table, 0, 0, levels, p);
    if (options.corrupt) {
      // Pessimistic choice: all mass on the lowest-valued state.
      std::fill(p.begin(), p.end(), 0.0);
      p[order.back()] = 1.0;
    }
    double value = 0.0;
    for (State x = 0; x < S; ++x) value += p[x] * u.values[x];
    const double oracle = inner_max_oracle(u, table, 0, 0, levels, kStep);
    const double tol = 2e-3 * span(u.values);
    if (value < oracle - tol) {
      note_failure(out, {{"case", c},
                         {"u", u.values},
                         {"p_tilde", p},
                         {"value", value},
                         {"oracle", oracle},
                         {"delta_p", levels.delta_p},
                         {"pair", table_json(table, 0, 0)}});
    }
  }
  return out;
}

SuiteOutcome submodularity_suite(const VerifyOptions& options) {
  SuiteOutcome out;
  out.scope = "submodularity";
  Stream stream(derive_key({options.seed, 3}));
  for (std::size_t c = 0; c < options.cases; ++c) {
    ++out.cases;
    const std::size_t S = 2 + uniform_index(stream, 5);  // 2..6
    const CountsTable table = random_counts_table(S, 1, stream);
    const ConfidenceLevels levels = random_levels(S, 1, stream);
    const SetFunction f = options.corrupt ? convex_radius_bound(table, 0, 0) : SetFunction([&](std::uint64_t m) {
      return subset_upper_bound_mask(table, 0, 0, m, levels);
    });
    if (const auto bad = find_submodularity_violation(S, f)) {
      note_failure(out, {{"case", c},
                         {"S", S},
                         {"X", bad->x_set},
                         {"Y", bad->y_set},
                         {"x", bad->element},
                         {"gap", bad->gap},
                         {"delta_p", levels.delta_p},
                         {"pair", table_json(table, 0, 0)}});
    }
  }
  return out;
}

SuiteOutcome coverage_suite(const VerifyOptions& options) {
  SuiteOutcome out;
  out.scope = "coverage";
  constexpr double kDelta = 0.05;
  const std::size_t reps = std::max<std::size_t>(options.cases * 10, 1000);
  const double q = 2.0 * kDelta;
  const double limit = q + 3.0 * std::sqrt(q * (1.0 - q) / static_cast<double>(reps));
  std::ostringstream detail;
  for (std::uint64_t n : {10U, 100U, 1000U}) {
    for (double p : {0.1, 0.5, 0.9}) {
      Stream stream(derive_key({options.seed, 4, n, static_cast<std::uint64_t>(p * 10)}));
      std::size_t misses = 0;
      for (std::size_t r = 0; r < reps; ++r) {
        std::uint64_t hits = 0;
        for (std::uint64_t i = 0; i < n; ++i) hits += stream.uniform() < p ? 1 : 0;
        const double mean = static_cast<double>(hits) / static_cast<double>(n);
        double radius = bernstein_radius(mean * (1.0 - mean), n, kDelta);
        if (options.corrupt) radius *= 0.1;
        if (std::abs(p - mean) > radius) ++misses;
      }
      ++out.cases;
      const double freq = static_cast<double>(misses) / static_cast<double>(reps);
      detail << " n=" << n << ",p=" << p << ":" << freq;
      if (freq > limit) {
        note_failure(out, {{"n", n}, {"p", p}, {"frequency", freq}, {"limit", limit}, {"repetitions", reps}});
      }
    }
  }
  out.detail = "violation frequencies" + detail.str();
  return out;
}

SuiteOutcome evi_suite(const VerifyOptions& options) {
  SuiteOutcome out;
  out.scope = "evi";
  Stream stream(derive_key({options.seed, 5}));
  const double epsilons[] = {0.1, 0.03, 0.01};
  double worst_gap = 0.0;
  for (std::size_t c = 0; c < options.cases; ++c) {
    ++out.cases;
    const std::size_t S = 2 + uniform_index(stream, 5);
    const std::size_t A = 1 + uniform_index(stream, 3);
    const CountsTable table = random_counts_table(S, A, stream);
    const ConfidenceLevels levels = random_levels(S, A, stream);
    const double eps = epsilons[c % 3];
    const OptimisticPlan plan = modified_extended_vi(table, levels, eps);

    std::vector<double> rewards(S);
    for (State s = 0; s < S; ++s) rewards[s] = plan.rewards[s * A + plan.policy[s]];
    const double greedy_gain = markov_chain_gain(plan.policy_kernel, rewards, 1e-12);
    const double estimate = plan.gain_estimate + (options.corrupt ? 2.0 * eps : 0.0);
    const double gap = std::abs(estimate - greedy_gain);
    worst_gap = std::max(worst_gap, gap / eps);

    bool rows_ok = true;
    for (State s = 0; s < S && rows_ok; ++s) {
      const std::span<const double> row(plan.policy_kernel.data() + s * S, S);
      rows_ok = check_all_subsets(row, table, s, plan.policy[s], levels);
    }
    if (plan.span_residual > eps || gap > eps || !rows_ok) {
      note_failure(out, {{"case", c},
                         {"S", S},
                         {"A", A},
                         {"epsilon", eps},
                         {"span_residual", plan.span_residual},
                         {"gain_estimate", estimate},
                         {"greedy_gain", greedy_gain},
                         {"rows_within_bounds", rows_ok}});
    }
  }
  std::ostringstream detail;
  detail << "max |gain_estimate - greedy gain| / epsilon = " << worst_gap;
  out.detail = detail.str();
  return out;
}

}  // namespace

const std::vector<std::string>& verify_scopes() {
  static const std::vector<std::string> scopes{"subsets", "oracle", "submodularity", "coverage", "evi"};
  return scopes;
}

SuiteOutcome run_verify_suite(const std::string& scope, const VerifyOptions& options) {
  if (scope == "subsets") return subsets_suite(options);
  if (scope == "oracle") return oracle_suite(options);
  if (scope == "submodularity") return submodularity_suite(options);
  if (scope == "coverage") return coverage_suite(options);
  if (scope == "evi") return evi_suite(options);
  throw ConfigError("verify: unknown scope '" + scope + "'");
}

}  // namespace ucrlb
