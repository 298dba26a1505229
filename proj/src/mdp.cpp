#include "ucrlb/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <sstream>

#include "ucrlb/errors.hpp"

namespace ucrlb {

namespace {

constexpr double kRowTolerance = 1e-12;

bool in_unit_interval(double x) { return x >= 0.0 && x <= 1.0; }

std::vector<double> trailing_history(const std::deque<double>& spans) {
  return {spans.begin(), spans.end()};
}

void push_history(std::deque<double>& spans, double value) {
  spans.push_back(value);
  if (spans.size() > 16) spans.pop_front();
}

}  // namespace

double mean(const RewardDistribution& reward) {
  return std::visit(
      [](const auto& r) -> double {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, DeterministicReward>) {
          return r.value;
        } else {
          return r.alpha / (r.alpha + r.beta);
        }
      },
      reward);
}

TabularMDP::TabularMDP(std::size_t num_states, std::size_t num_actions, std::vector<double> transitions,
                       std::vector<RewardDistribution> rewards, State initial_state)
    : num_states_(num_states),
      num_actions_(num_actions),
      transitions_(std::move(transitions)),
      rewards_(std::move(rewards)),
      initial_state_(initial_state) {
  if (num_states_ == 0) throw ConfigError("num_states must be positive");
  if (num_actions_ == 0) throw ConfigError("num_actions must be positive");
  if (transitions_.size() != num_states_ * num_actions_ * num_states_)
    throw ConfigError("transitions must hold S*A*S entries");
  if (rewards_.size() != num_states_ * num_actions_) throw ConfigError("rewards must hold S*A entries");
  if (initial_state_ >= num_states_) throw ConfigError("initial_state out of range");

  for (State s = 0; s < num_states_; ++s) {
    for (Action a = 0; a < num_actions_; ++a) {
      double total = 0.0;
      for (double p : transition_row(s, a)) {
        if (!(p >= 0.0) || !std::isfinite(p)) {
          std::ostringstream msg;
          msg << "transition probability out of range at (s=" << s << ", a=" << a << ")";
          throw ConfigError(msg.str());
        }
        total += p;
      }
      if (std::abs(total - 1.0) > kRowTolerance) {
        std::ostringstream msg;
        msg << "transition row (s=" << s << ", a=" << a << ") sums to " << total;
        throw ConfigError(msg.str());
      }
      const auto& r = reward(s, a);
      if (const auto* d = std::get_if<DeterministicReward>(&r)) {
        if (!in_unit_interval(d->value)) {
          std::ostringstream msg;
          msg << "reward at (s=" << s << ", a=" << a << ") outside [0,1]";
          throw ConfigError(msg.str());
        }
      } else {
        const auto& b = std::get<BetaReward>(r);
        if (!(b.alpha > 0.0) || !(b.beta > 0.0)) {
          std::ostringstream msg;
          msg << "Beta reward parameters at (s=" << s << ", a=" << a << ") must be positive";
          throw ConfigError(msg.str());
        }
      }
    }
  }
}

TabularMDP TabularMDP::permuted(std::span<const State> state_perm, std::span<const Action> action_perm) const {
  const std::size_t S = num_states_;
  const std::size_t A = num_actions_;
  std::vector<double> kernel(S * A * S, 0.0);
  std::vector<RewardDistribution> rewards(S * A);
  for (State s = 0; s < S; ++s) {
    for (Action a = 0; a < A; ++a) {
      const std::size_t pair = state_perm[s] * A + action_perm[a];
      rewards[pair] = reward(s, a);
      const auto row = transition_row(s, a);
      for (State n = 0; n < S; ++n) kernel[pair * S + state_perm[n]] = row[n];
    }
  }
  return TabularMDP(S, A, std::move(kernel), std::move(rewards), state_perm[initial_state_]);
}

std::string to_string(EnvKind kind) {
  switch (kind) {
    case EnvKind::riverswim:
      return "riverswim";
    case EnvKind::bandits:
      return "bandits";
    case EnvKind::game_of_skill_v1:
      return "game_of_skill_v1";
    case EnvKind::game_of_skill_v2:
      return "game_of_skill_v2";
    case EnvKind::custom:
      return "custom";
  }
  return "unknown";
}

EnvKind parse_env_kind(const std::string& name) {
  for (EnvKind k : {EnvKind::riverswim, EnvKind::bandits, EnvKind::game_of_skill_v1, EnvKind::game_of_skill_v2,
                    EnvKind::custom}) {
    if (to_string(k) == name) return k;
  }
  throw ConfigError("env.kind: unknown environment '" + name + "'");
}

std::string env_name(const EnvSpec& spec) { return to_string(spec.kind); }

namespace {

void require_reward(const char* field, double value) {
  if (!in_unit_interval(value)) throw ConfigError(std::string(field) + " must lie in [0,1]");
}

std::size_t chain_length(const EnvSpec& spec, std::size_t fallback) {
  const std::size_t length = spec.chain_length.value_or(fallback);
  if (length < 2) throw ConfigError("chain_length must be >= 2 for chain environments");
  return length;
}

TabularMDP build_riverswim(const EnvSpec& spec) {
  const std::size_t S = chain_length(spec, 6);
  const double r_left = spec.reward_left.value_or(0.208);
  const double r_right = spec.reward_right.value_or(0.5);
  require_reward("reward_left", r_left);
  require_reward("reward_right", r_right);
  const RiverSwimKernel& k = spec.riverswim;
  for (double p : {k.interior_right, k.interior_stay, k.interior_left, k.first_right, k.first_stay, k.last_stay,
                   k.last_left}) {
    if (!in_unit_interval(p)) throw ConfigError("riverswim kernel entries must lie in [0,1]");
  }

  constexpr Action left = 0;
  constexpr Action right = 1;
  std::vector<double> kernel(S * 2 * S, 0.0);
  std::vector<RewardDistribution> rewards(S * 2, DeterministicReward{0.0});
  auto at = [&](State s, Action a, State n) -> double& { return kernel[(s * 2 + a) * S + n]; };
  for (State s = 0; s < S; ++s) {
    at(s, left, s == 0 ? 0 : s - 1) = 1.0;
    if (s == 0) {
      at(s, right, 1) += k.first_right;
      at(s, right, 0) += k.first_stay;
    } else if (s == S - 1) {
      at(s, right, s) += k.last_stay;
      at(s, right, s - 1) += k.last_left;
    } else {
      at(s, right, s + 1) += k.interior_right;
      at(s, right, s) += k.interior_stay;
      at(s, right, s - 1) += k.interior_left;
    }
  }
  rewards[0 * 2 + left] = DeterministicReward{r_left};
  rewards[(S - 1) * 2 + right] = DeterministicReward{r_right};
  return TabularMDP(S, 2, std::move(kernel), std::move(rewards), 0);
}

TabularMDP build_bandits(const EnvSpec& spec) {
  if (spec.horizon_hint < 1) throw ConfigError("horizon_hint must be >= 1");
  const double gap = std::pow(static_cast<double>(spec.horizon_hint), -0.25);
  if (!(0.2 - gap > 0.0)) throw ConfigError("horizon_hint too small: Beta arm parameter 0.2 - T^{-1/4} must be > 0");
  std::vector<double> kernel(2, 1.0);
  std::vector<RewardDistribution> rewards{BetaReward{0.8 + gap, 0.2 - gap}, DeterministicReward{0.8}};
  return TabularMDP(1, 2, std::move(kernel), std::move(rewards), 0);
}

TabularMDP build_game_of_skill(const EnvSpec& spec, bool reset_on_left) {
  const std::size_t S = chain_length(spec, 20);
  const double q = spec.success_prob.value_or(1.0 / 25.0);
  if (!(q > 0.0 && q <= 1.0)) throw ConfigError("success_prob must lie in (0,1]");
  const double r_left = spec.reward_left.value_or(0.8);
  const double r_right = spec.reward_right.value_or(0.9);
  require_reward("reward_left", r_left);
  require_reward("reward_right", r_right);

  constexpr Action left = 0;
  constexpr Action right = 1;
  std::vector<double> kernel(S * 2 * S, 0.0);
  std::vector<RewardDistribution> rewards(S * 2, DeterministicReward{0.0});
  auto at = [&](State s, Action a, State n) -> double& { return kernel[(s * 2 + a) * S + n]; };
  for (State s = 0; s < S; ++s) {
    const State back = (s == 0) ? 0 : (reset_on_left ? 0 : s - 1);
    at(s, left, back) = 1.0;
    if (s == S - 1) {
      at(s, right, s) = 1.0;
    } else {
      at(s, right, s + 1) += q;
      at(s, right, s) += 1.0 - q;
    }
  }
  rewards[0 * 2 + left] = DeterministicReward{r_left};
  rewards[(S - 1) * 2 + right] = DeterministicReward{r_right};
  return TabularMDP(S, 2, std::move(kernel), std::move(rewards), 0);
}

}  // namespace

TabularMDP build_env(const EnvSpec& spec) {
  switch (spec.kind) {
    case EnvKind::riverswim:
      return build_riverswim(spec);
    case EnvKind::bandits:
      return build_bandits(spec);
    case EnvKind::game_of_skill_v1:
      return build_game_of_skill(spec, false);
    case EnvKind::game_of_skill_v2:
      return build_game_of_skill(spec, true);
    case EnvKind::custom:
      if (!spec.custom) throw ConfigError("custom environment requires a model");
      return *spec.custom;
  }
  throw ConfigError("env.kind: unsupported");
}

StepResult env_step(const TabularMDP& mdp, State s, Action a, Stream& stream) {
  StepResult out;
  const auto row = mdp.transition_row(s, a);
  const double u = stream.uniform();
  double cumulative = 0.0;
  // Rows sum to 1 only up to rounding; a draw past the final partial sum
  // falls back to the last state with positive mass.
  out.next = row.size();
  for (State n = 0; n < row.size(); ++n) {
    if (row[n] <= 0.0) continue;
    cumulative += row[n];
    out.next = n;
    if (u < cumulative) break;
  }

  const auto& reward = mdp.reward(s, a);
  if (const auto* d = std::get_if<DeterministicReward>(&reward)) {
    out.reward = d->value;
  } else {
    const auto& b = std::get<BetaReward>(reward);
    out.reward = std::clamp(sample_beta(stream, b.alpha, b.beta), 0.0, 1.0);
  }
  return out;
}

MeanModel mean_model(const TabularMDP& mdp) {
  MeanModel m;
  m.num_states = mdp.num_states();
  m.num_actions = mdp.num_actions();
  m.kernel.reserve(m.num_states * m.num_actions * m.num_states);
  m.rewards.reserve(m.num_states * m.num_actions);
  for (State s = 0; s < m.num_states; ++s) {
    for (Action a = 0; a < m.num_actions; ++a) {
      const auto row = mdp.transition_row(s, a);
      m.kernel.insert(m.kernel.end(), row.begin(), row.end());
      m.rewards.push_back(mdp.expected_reward(s, a));
    }
  }
  return m;
}

GainReport relative_value_iteration(const MeanModel& model, const RviOptions& options) {
  const std::size_t S = model.num_states;
  const std::size_t A = model.num_actions;
  const double tau = options.aperiodicity;

  GainReport report;
  std::vector<double> u(S, 0.0);
  std::vector<double> next(S, 0.0);
  report.policy.assign(S, 0);

  for (std::size_t it = 1; it <= options.max_iterations; ++it) {
    for (State s = 0; s < S; ++s) {
      double best = -std::numeric_limits<double>::infinity();
      Action best_a = 0;
      for (Action a = 0; a < A; ++a) {
        const auto row = model.row(s, a);
        double expected = 0.0;
        for (State n = 0; n < S; ++n) expected += row[n] * u[n];
        const double q = model.rewards[s * A + a] + tau * u[s] + (1.0 - tau) * expected;
        if (q > best) {
          best = q;
          best_a = a;
        }
      }
      next[s] = best;
      report.policy[s] = best_a;
    }
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (State s = 0; s < S; ++s) {
      const double d = next[s] - u[s];
      lo = std::min(lo, d);
      hi = std::max(hi, d);
    }
    const double base = *std::min_element(next.begin(), next.end());
    for (State s = 0; s < S; ++s) u[s] = next[s] - base;

    report.iterations = it;
    report.residual_span = hi - lo;
    report.gain = 0.5 * (hi + lo);
    if (report.residual_span <= options.tolerance) {
      report.converged = true;
      break;
    }
  }
  report.bias.resize(S);
  for (State s = 0; s < S; ++s) report.bias[s] = (1.0 - tau) * u[s];
  return report;
}

GainReport optimal_gain(const TabularMDP& mdp, double tol, std::size_t max_iterations) {
  if (!(tol > 0.0)) throw ConfigError("tolerance must be positive");
  RviOptions options;
  options.tolerance = tol;
  options.max_iterations = max_iterations;
  GainReport report = relative_value_iteration(mean_model(mdp), options);
  if (!report.converged) {
    throw ConvergenceError("optimal_gain: relative value iteration did not converge", {report.residual_span});
  }
  return report;
}

double markov_chain_gain(std::span<const double> kernel, std::span<const double> rewards, double tol,
                         std::size_t max_iterations) {
  MeanModel m;
  m.num_states = rewards.size();
  m.num_actions = 1;
  m.kernel.assign(kernel.begin(), kernel.end());
  m.rewards.assign(rewards.begin(), rewards.end());
  RviOptions options;
  options.tolerance = tol;
  options.max_iterations = max_iterations;
  const GainReport report = relative_value_iteration(m, options);
  if (!report.converged) {
    throw ConvergenceError("markov_chain_gain: did not converge", {report.residual_span});
  }
  return report.gain;
}

double policy_gain(const MeanModel& model, std::span<const Action> policy, double tol) {
  const std::size_t S = model.num_states;
  std::vector<double> kernel(S * S);
  std::vector<double> rewards(S);
  for (State s = 0; s < S; ++s) {
    const auto row = model.row(s, policy[s]);
    std::copy(row.begin(), row.end(), kernel.begin() + static_cast<std::ptrdiff_t>(s * S));
    rewards[s] = model.rewards[s * model.num_actions + policy[s]];
  }
  return markov_chain_gain(kernel, rewards, tol);
}

std::vector<double> hitting_times(const TabularMDP& mdp, State target, double tol, std::size_t max_iterations) {
  const std::size_t S = mdp.num_states();
  const std::size_t A = mdp.num_actions();

  // States that cannot reach the target under any policy make the fixed
  // point diverge; detect them up front.
  std::vector<bool> reaches(S, false);
  reaches[target] = true;
  for (bool changed = true; changed;) {
    changed = false;
    for (State s = 0; s < S; ++s) {
      if (reaches[s]) continue;
      for (Action a = 0; a < A && !reaches[s]; ++a) {
        const auto row = mdp.transition_row(s, a);
        for (State n = 0; n < S; ++n) {
          if (row[n] > 0.0 && reaches[n]) {
            reaches[s] = true;
            changed = true;
            break;
          }
        }
      }
    }
  }
  for (State s = 0; s < S; ++s) {
    if (!reaches[s]) {
      std::ostringstream msg;
      msg << "hitting_times: state " << s << " cannot reach state " << target << " (model not communicating)";
      throw ConvergenceError(msg.str(), {});
    }
  }

  std::vector<double> h(S, 0.0);
  std::vector<double> next(S, 0.0);
  std::deque<double> history;
  for (std::size_t it = 0; it < max_iterations; ++it) {
    double change = 0.0;
    for (State s = 0; s < S; ++s) {
      if (s == target) {
        next[s] = 0.0;
        continue;
      }
      double best = std::numeric_limits<double>::infinity();
      for (Action a = 0; a < A; ++a) {
        const auto row = mdp.transition_row(s, a);
        double expected = 0.0;
        for (State n = 0; n < S; ++n) {
          if (n != target) expected += row[n] * h[n];
        }
        best = std::min(best, 1.0 + expected);
      }
      next[s] = best;
      change = std::max(change, std::abs(best - h[s]));
    }
    h.swap(next);
    push_history(history, change);
    if (change <= tol) return h;
  }
  throw ConvergenceError("hitting_times: iteration cap exceeded", trailing_history(history));
}

double diameter(const TabularMDP& mdp, double tol, std::size_t max_iterations) {
  const std::size_t S = mdp.num_states();
  if (S < 2) return 0.0;
  double worst = 0.0;
  for (State target = 0; target < S; ++target) {
    const auto h = hitting_times(mdp, target, tol, max_iterations);
    for (State s = 0; s < S; ++s) {
      if (s != target) worst = std::max(worst, h[s]);
    }
  }
  return worst;
}

}  // namespace ucrlb
