#include "ucrlb/agents.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ucrlb/errors.hpp"

namespace ucrlb {

namespace {

// The doubling sum adds fractions 1/N; a sum that is mathematically 1 can
// land a few ulps below it.
constexpr double kDoublingSlack = 1e-12;

double planning_epsilon(std::uint64_t t_k) {
  return std::max(1.0 / std::sqrt(static_cast<double>(t_k)), 1e-9);
}

}  // namespace

std::string to_string(AlgoKind kind) {
  switch (kind) {
    case AlgoKind::ucrlv:
      return "ucrlv";
    case AlgoKind::ucrl2:
      return "ucrl2";
    case AlgoKind::tsde:
      return "tsde";
  }
  return "unknown";
}

AlgoKind parse_algo_kind(const std::string& name) {
  for (AlgoKind k : {AlgoKind::ucrlv, AlgoKind::ucrl2, AlgoKind::tsde}) {
    if (to_string(k) == name) return k;
  }
  throw ConfigError("algo.kind: unknown algorithm '" + name + "'");
}

// ---------------------------------------------------------------------------
// EpisodicAgent

EpisodicAgent::EpisodicAgent(std::size_t num_states, std::size_t num_actions)
    : counts_(num_states, num_actions), counts_at_start_(num_states * num_actions, 0), policy_(num_states, 0) {}

void EpisodicAgent::begin_episode() {
  t_k_ = t_;
  episode_starts_.push_back(t_);
  for (State s = 0; s < counts_.num_states(); ++s) {
    for (Action a = 0; a < counts_.num_actions(); ++a) {
      counts_at_start_[s * counts_.num_actions() + a] = counts_.visits(s, a);
    }
  }
  counts_.start_episode();
  policy_ = plan();
  needs_plan_ = false;
}

Action EpisodicAgent::act(State s) {
  if (needs_plan_) begin_episode();
  return policy_[s];
}

bool EpisodicAgent::observe(State s, Action a, double reward, State next) {
  counts_.record_transition(s, a, reward, next);
  on_observe(s, a, reward, next);
  ++t_;
  if (!needs_plan_ && episode_should_end()) {
    needs_plan_ = true;
    return true;
  }
  return false;
}

// ---------------------------------------------------------------------------
// UCRL-V

UcrlvAgent::UcrlvAgent(std::size_t num_states, std::size_t num_actions, double delta)
    : EpisodicAgent(num_states, num_actions), delta_(delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("delta must lie in (0,1)");
}

void UcrlvAgent::on_observe(State s, Action a, double, State) {
  const std::uint64_t before = visits_at_episode_start(s, a);
  doubling_sum_ += 1.0 / static_cast<double>(std::max<std::uint64_t>(1, before));
}

bool UcrlvAgent::episode_should_end() const { return doubling_sum_ >= 1.0 - kDoublingSlack; }

Policy UcrlvAgent::plan() {
  doubling_sum_ = 0.0;
  const ConfidenceLevels levels = episode_confidence_levels(t_k_, delta_, counts_.num_states(), counts_.num_actions());
  last_plan_ = modified_extended_vi(counts_, levels, planning_epsilon(t_k_));
  return last_plan_.policy;
}

// ---------------------------------------------------------------------------
// UCRL2

L1Model::L1Model(const CountsTable& table, double delta, std::uint64_t t_k, const Ucrl2Constants& constants)
    : table_(table) {
  const std::size_t S = table.num_states();
  const std::size_t A = table.num_actions();
  const double t = static_cast<double>(std::max<std::uint64_t>(t_k, 1));
  const double reward_log = std::log(2.0 * static_cast<double>(S * A) * t / delta);
  const double transition_log = std::log(2.0 * static_cast<double>(A) * t / delta);
  rewards_.resize(S * A);
  budgets_.resize(S * A);
  for (State s = 0; s < S; ++s) {
    for (Action a = 0; a < A; ++a) {
      const double n = static_cast<double>(std::max<std::uint64_t>(1, table.visits(s, a)));
      const auto& stats = table.reward_stats(s, a);
      const double radius = std::sqrt(constants.reward_const * reward_log / (2.0 * n));
      rewards_[s * A + a] = std::min(1.0, stats.mean() + radius);
      budgets_[s * A + a] = std::sqrt(constants.transition_const * static_cast<double>(S) * transition_log / n);
    }
  }
}

void L1Model::optimistic_transition(State s, Action a, std::span<const State> order, std::span<double> out) const {
  const std::size_t S = table_.num_states();
  const std::uint64_t n = table_.visits(s, a);
  if (n == 0) {
    std::fill(out.begin(), out.end(), 0.0);
    out[order[0]] = 1.0;
    return;
  }
  for (State x = 0; x < S; ++x) out[x] = table_.empirical_transition(s, a, x);
  const State best = order[0];
  out[best] = std::min(1.0, out[best] + 0.5 * l1_budget(s, a));
  double total = std::accumulate(out.begin(), out.end(), 0.0);
  for (std::size_t j = S; j-- > 1 && total > 1.0;) {
    const State worst = order[j];
    const double others = total - out[worst];
    out[worst] = std::max(0.0, 1.0 - others);
    total = others + out[worst];
  }
}

Ucrl2Agent::Ucrl2Agent(std::size_t num_states, std::size_t num_actions, double delta, Ucrl2Constants constants)
    : EpisodicAgent(num_states, num_actions), delta_(delta), constants_(constants) {
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("delta must lie in (0,1)");
}

void Ucrl2Agent::on_observe(State s, Action a, double, State) {
  const std::uint64_t before = std::max<std::uint64_t>(1, visits_at_episode_start(s, a));
  if (counts_.episode_visits(s, a) >= before) doubled_ = true;
}

bool Ucrl2Agent::episode_should_end() const { return doubled_; }

Policy Ucrl2Agent::plan() {
  doubled_ = false;
  const L1Model model(counts_, delta_, t_k_, constants_);
  return extended_value_iteration(model, planning_epsilon(t_k_)).policy;
}

// ---------------------------------------------------------------------------
// TSDE

PosteriorState::PosteriorState(std::size_t S, std::size_t A, double reward_prior, double transition_prior)
    : num_states(S),
      num_actions(A),
      reward_alpha(S * A, reward_prior),
      reward_beta(S * A, reward_prior),
      dirichlet(S * A * S, transition_prior) {}

namespace {

double resolve_transition_prior(const TsdeOptions& options, std::size_t S) {
  return options.transition_prior > 0.0 ? options.transition_prior : 1.0 / static_cast<double>(S);
}

}  // namespace

TsdeAgent::TsdeAgent(std::size_t num_states, std::size_t num_actions, Stream stream, TsdeOptions options,
                     ModelSampler sampler)
    : EpisodicAgent(num_states, num_actions),
      stream_(stream),
      options_(options),
      sampler_(sampler ? std::move(sampler) : ModelSampler(&TsdeAgent::sample_posterior)),
      posterior_(num_states, num_actions, options.reward_prior, resolve_transition_prior(options, num_states)) {
  if (!(options.reward_prior > 0.0)) throw ConfigError("tsde reward_prior must be positive");
}

void TsdeAgent::tsde_step(State s, Action a, double reward, State next) {
  const std::size_t pair = s * posterior_.num_actions + a;
  if (stream_.uniform() < reward) {
    posterior_.reward_alpha[pair] += 1.0;
  } else {
    posterior_.reward_beta[pair] += 1.0;
  }
  posterior_.dirichlet[pair * posterior_.num_states + next] += 1.0;
}

void TsdeAgent::on_observe(State s, Action a, double reward, State next) {
  tsde_step(s, a, reward, next);
  if (counts_.visits(s, a) > 2 * visits_at_episode_start(s, a)) doubled_ = true;
}

bool TsdeAgent::episode_should_end() const {
  return (options_.doubling_rule && doubled_) ||
         (options_.length_rule && t_ - t_k_ > posterior_.previous_episode_length);
}

MeanModel TsdeAgent::sample_posterior(const PosteriorState& posterior, Stream& stream) {
  const std::size_t S = posterior.num_states;
  const std::size_t A = posterior.num_actions;
  MeanModel model;
  model.num_states = S;
  model.num_actions = A;
  model.rewards.resize(S * A);
  model.kernel.resize(S * A * S);
  for (std::size_t pair = 0; pair < S * A; ++pair) {
    model.rewards[pair] = sample_beta(stream, posterior.reward_alpha[pair], posterior.reward_beta[pair]);
    double total = 0.0;
    for (State n = 0; n < S; ++n) {
      const double g = sample_gamma(stream, posterior.dirichlet[pair * S + n]);
      model.kernel[pair * S + n] = g;
      total += g;
    }
    if (!(total > 0.0)) {
      // Every gamma draw underflowed; use the posterior mean instead.
      total = 0.0;
      for (State n = 0; n < S; ++n) total += posterior.dirichlet[pair * S + n];
      for (State n = 0; n < S; ++n) model.kernel[pair * S + n] = posterior.dirichlet[pair * S + n];
    }
    for (State n = 0; n < S; ++n) model.kernel[pair * S + n] /= total;
  }
  return model;
}

Policy TsdeAgent::plan() {
  doubled_ = false;
  const std::size_t k = episode_starts_.size();
  if (k >= 2) posterior_.previous_episode_length = episode_starts_[k - 1] - episode_starts_[k - 2];

  const MeanModel model = sampler_(posterior_, stream_);
  RviOptions options;
  options.tolerance = planning_epsilon(t_k_);
  options.max_iterations = options_.max_plan_iterations;
  // Sampled models can be nearly disconnected; after the budget the greedy
  // policy of the last sweep is used as is.
  return relative_value_iteration(model, options).policy;
}

// ---------------------------------------------------------------------------

FixedPolicyAgent::FixedPolicyAgent(Policy policy, std::string label)
    : policy_(std::move(policy)), label_(std::move(label)) {}

namespace {

double take_param(std::map<std::string, double>& params, const std::string& key, double fallback) {
  const auto it = params.find(key);
  if (it == params.end()) return fallback;
  const double value = it->second;
  params.erase(it);
  return value;
}

}  // namespace

std::unique_ptr<Agent> make_agent(const AlgoSpec& spec, std::size_t num_states, std::size_t num_actions,
                                  double delta, Stream agent_stream) {
  auto params = spec.params;
  std::unique_ptr<Agent> agent;
  switch (spec.kind) {
    case AlgoKind::ucrlv:
      agent = std::make_unique<UcrlvAgent>(num_states, num_actions, delta);
      break;
    case AlgoKind::ucrl2: {
      Ucrl2Constants constants;
      constants.reward_const = take_param(params, "reward_const", constants.reward_const);
      constants.transition_const = take_param(params, "transition_const", constants.transition_const);
      agent = std::make_unique<Ucrl2Agent>(num_states, num_actions, delta, constants);
      break;
    }
    case AlgoKind::tsde: {
      TsdeOptions options;
      options.reward_prior = take_param(params, "reward_prior", options.reward_prior);
      options.transition_prior = take_param(params, "transition_prior", options.transition_prior);
      options.max_plan_iterations = static_cast<std::size_t>(
          take_param(params, "max_plan_iterations", static_cast<double>(options.max_plan_iterations)));
      options.length_rule = take_param(params, "length_rule", 1.0) != 0.0;
      options.doubling_rule = take_param(params, "doubling_rule", 1.0) != 0.0;
      agent = std::make_unique<TsdeAgent>(num_states, num_actions, agent_stream, options);
      break;
    }
  }
  if (!params.empty()) {
    throw ConfigError("algo.params: unknown parameter '" + params.begin()->first + "' for " + to_string(spec.kind));
  }
  return agent;
}

}  // namespace ucrlb
