#include "ucrlb/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <numeric>
#include <optional>
#include <sstream>
#include <thread>

#include "ucrlb/errors.hpp"
#include "ucrlb/verify.hpp"

namespace ucrlb {

namespace {

// Stream tags keep the pair, agent and masking keys apart.
constexpr std::uint64_t kPairTag = 0x70616972;
constexpr std::uint64_t kAgentTag = 0x6167656e;
constexpr std::uint64_t kMaskTag = 0x6d61736b;

std::size_t resolve_threads(std::size_t requested, std::size_t trials) {
  std::size_t n = requested;
  if (n == 0) {
    if (const char* env = std::getenv("UCRLB_THREADS")) {
      char* end = nullptr;
      const long v = std::strtol(env, &end, 10);
      if (end != env && v > 0) n = static_cast<std::size_t>(v);
    }
  }
  if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
  return std::max<std::size_t>(1, std::min(n, trials));
}

std::vector<std::size_t> shuffled_indices(std::size_t n, Stream& stream) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  for (std::size_t i = n; i > 1; --i) {
    const auto j = static_cast<std::size_t>(stream.uniform() * static_cast<double>(i));
    std::swap(perm[i - 1], perm[std::min(j, i - 1)]);
  }
  return perm;
}

std::vector<std::size_t> inverse_of(const std::vector<std::size_t>& perm) {
  std::vector<std::size_t> inv(perm.size());
  for (std::size_t i = 0; i < perm.size(); ++i) inv[perm[i]] = i;
  return inv;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (horizon < 1) throw ConfigError("horizon must be >= 1");
  if (trials < 1) throw ConfigError("trials must be >= 1");
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("delta must lie in (0,1)");
}

std::vector<std::uint64_t> checkpoint_rounds(std::uint64_t horizon) {
  std::vector<std::uint64_t> out;
  for (std::uint64_t t = 1; t <= horizon; t *= 2) {
    out.push_back(t);
    if (t > horizon / 2) break;
  }
  if (out.empty() || out.back() != horizon) out.push_back(horizon);
  return out;
}

MaskingMaps MaskingMaps::identity(std::size_t num_states, std::size_t num_actions) {
  MaskingMaps m;
  m.state_perm.resize(num_states);
  m.action_perm.resize(num_actions);
  std::iota(m.state_perm.begin(), m.state_perm.end(), State{0});
  std::iota(m.action_perm.begin(), m.action_perm.end(), Action{0});
  m.state_inverse = m.state_perm;
  m.action_inverse = m.action_perm;
  return m;
}

MaskingMaps MaskingMaps::draw(std::size_t num_states, std::size_t num_actions, Stream& stream) {
  MaskingMaps m;
  m.state_perm = shuffled_indices(num_states, stream);
  m.action_perm = shuffled_indices(num_actions, stream);
  m.state_inverse = inverse_of(m.state_perm);
  m.action_inverse = inverse_of(m.action_perm);
  return m;
}

TrialStreams make_streams(std::uint64_t base_seed, std::size_t trial, std::size_t num_states,
                          std::size_t num_actions) {
  TrialStreams streams;
  streams.num_actions = num_actions;
  streams.pair_streams.reserve(num_states * num_actions);
  for (State s = 0; s < num_states; ++s) {
    for (Action a = 0; a < num_actions; ++a) {
      streams.pair_streams.emplace_back(derive_key({kPairTag, base_seed, trial, s, a}));
    }
  }
  streams.agent = Stream(derive_key({kAgentTag, base_seed, trial}));
  streams.masking = Stream(derive_key({kMaskTag, base_seed, trial}));
  return streams;
}

AgentFactory default_agent_factory(const AlgoSpec& spec) {
  return [spec](std::size_t S, std::size_t A, double delta, Stream stream) {
    return make_agent(spec, S, A, delta, stream);
  };
}

RegretTrace run_trial(const ExperimentConfig& cfg, std::size_t trial) {
  return run_trial(cfg, trial, default_agent_factory(cfg.algo));
}

RegretTrace run_trial(const ExperimentConfig& cfg, std::size_t trial, const AgentFactory& factory) {
  cfg.validate();
  const TabularMDP mdp = build_env(cfg.env);
  const std::size_t S = mdp.num_states();
  const std::size_t A = mdp.num_actions();
  const double gain = optimal_gain(mdp, 1e-9).gain;

  TrialStreams streams = make_streams(cfg.base_seed, trial, S, A);
  const MaskingMaps mask = cfg.masking ? MaskingMaps::draw(S, A, streams.masking) : MaskingMaps::identity(S, A);
  std::unique_ptr<Agent> agent = factory(S, A, cfg.delta, streams.agent);

  RegretTrace trace;
  trace.trial = trial;
  trace.optimal_gain = gain;
  trace.checkpoints = checkpoint_rounds(cfg.horizon);
  trace.cumulative_regret.reserve(trace.checkpoints.size());
  trace.episodes.reserve(trace.checkpoints.size());

  long double reward_sum = 0.0L;
  std::size_t next_checkpoint = 0;
  State s = mdp.initial_state();
  for (std::uint64_t t = 1; t <= cfg.horizon; ++t) {
    const State seen = mask.state_perm[s];
    const Action masked = agent->act(seen);
    if (masked >= A) throw DataError(agent->name() + " chose an out-of-range action");
    const Action a = mask.action_inverse[masked];
    const StepResult step = env_step(mdp, s, a, streams.pair(s, a));
    agent->observe(seen, masked, step.reward, mask.state_perm[step.next]);
    reward_sum += step.reward;
    s = step.next;
    if (t == trace.checkpoints[next_checkpoint]) {
      const long double regret = static_cast<long double>(t) * gain - reward_sum;
      trace.cumulative_regret.push_back(static_cast<double>(regret));
      trace.episodes.push_back(agent->episode_count());
      ++next_checkpoint;
    }
  }
  trace.total_reward = static_cast<double>(reward_sum);
  trace.episode_starts = agent->episode_starts();
  trace.episode_count = agent->episode_count();

  if (agent->name() == "ucrlv" && cfg.horizon > S * A) {
    const double bound = episode_bound(S, A, static_cast<double>(cfg.horizon));
    if (static_cast<double>(trace.episode_count) > bound) {
      std::ostringstream msg;
      msg << "ucrlv started " << trace.episode_count << " episodes, above the bound " << bound;
      throw std::runtime_error(msg.str());
    }
  }
  return trace;
}

RegretSummary summarize(const std::vector<RegretTrace>& traces) {
  RegretSummary summary;
  if (traces.empty()) return summary;
  summary.checkpoints = traces.front().checkpoints;
  const std::size_t m = summary.checkpoints.size();
  const double n = static_cast<double>(traces.size());
  summary.mean.assign(m, 0.0);
  summary.stddev.assign(m, 0.0);
  summary.mean_episodes.assign(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    double total = 0.0;
    double episodes = 0.0;
    for (const auto& tr : traces) {
      total += tr.cumulative_regret[i];
      episodes += static_cast<double>(tr.episodes[i]);
    }
    const double mu = total / n;
    double ss = 0.0;
    for (const auto& tr : traces) ss += (tr.cumulative_regret[i] - mu) * (tr.cumulative_regret[i] - mu);
    summary.mean[i] = mu;
    summary.stddev[i] = traces.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    summary.mean_episodes[i] = episodes / n;
  }
  return summary;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  return run_experiment(cfg, default_agent_factory(cfg.algo), to_string(cfg.algo.kind));
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const AgentFactory& factory,
                                const std::string& algo_label) {
  cfg.validate();
  // Fail on a bad env or algo description before any thread starts.
  const TabularMDP probe = build_env(cfg.env);
  factory(probe.num_states(), probe.num_actions(), cfg.delta, Stream(0));

  std::vector<std::optional<RegretTrace>> slots(cfg.trials);
  std::vector<std::exception_ptr> errors(cfg.trials);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cfg.trials; i = next++) {
      try {
        slots[i] = run_trial(cfg, i, factory);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t threads = resolve_threads(cfg.threads, cfg.trials);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t k = 0; k < threads; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  ExperimentResult result;
  result.algo = algo_label;
  result.env = env_name(cfg.env);
  for (std::size_t i = 0; i < cfg.trials; ++i) {
    if (errors[i]) {
      try {
        std::rethrow_exception(errors[i]);
      } catch (const std::exception& e) {
        throw TrialError(i, e.what());
      }
    }
    result.traces.push_back(std::move(*slots[i]));
  }
  result.summary = summarize(result.traces);
  return result;
}

DsPoint tune_game_of_skill(double target_ds) {
  auto fail = [&](const std::string& why) {
    std::ostringstream msg;
    msg << "ds sweep: cannot reach DS = " << target_ds << ": " << why;
    return ConfigError(msg.str());
  };
  if (!(target_ds > 0.0) || !std::isfinite(target_ds)) throw fail("target must be positive");
  DsPoint point;
  point.target_ds = target_ds;
  point.num_states = std::max<std::size_t>(2, static_cast<std::size_t>(std::llround(std::cbrt(target_ds))));
  const double target_d = std::pow(target_ds, 2.0 / 3.0);

  auto diameter_at = [&](double q) {
    EnvSpec spec;
    spec.kind = EnvKind::game_of_skill_v2;
    spec.chain_length = point.num_states;
    spec.success_prob = q;
    return diameter(build_env(spec));
  };

  // The diameter decreases in q, and the chain's hitting time is (S-1)/q,
  // so start there and bisect in log q.
  const double d_max_q = diameter_at(1.0);
  if (d_max_q > 1.1 * target_d) throw fail("even q = 1 gives diameter " + std::to_string(d_max_q));
  double hi = 1.0;
  double lo = std::min(1.0, static_cast<double>(point.num_states - 1) / target_d);
  double d = diameter_at(lo);
  while (d < target_d) {
    if (lo < 1e-9) throw fail("success probability underflow");
    hi = lo;
    lo *= 0.5;
    d = diameter_at(lo);
  }
  double q = lo;
  for (int it = 0; it < 100 && std::abs(d - target_d) > 1e-3 * target_d; ++it) {
    const double mid = std::sqrt(lo * hi);
    const double dm = diameter_at(mid);
    if (dm >= target_d) {
      lo = mid;
    } else {
      hi = mid;
    }
    q = mid;
    d = dm;
  }
  if (std::abs(d - target_d) > 0.1 * target_d) throw fail("bisection missed the diameter target");
  point.success_prob = q;
  point.diameter = d;
  return point;
}

double regret_normaliser(std::uint64_t horizon) {
  const double t = static_cast<double>(horizon);
  return std::sqrt(t * std::log(t));
}

DsSweepResult ds_sweep(const ExperimentConfig& base, const std::vector<AlgoSpec>& algos,
                       const std::vector<double>& ds_values) {
  if (base.horizon < 2) throw ConfigError("horizon must be >= 2 for a ds sweep");
  std::vector<DsPoint> points;
  points.reserve(ds_values.size());
  for (double x : ds_values) points.push_back(tune_game_of_skill(x));

  struct Entry {
    DsSweepRow row;
    ExperimentResult experiment;
  };
  std::vector<Entry> entries;
  for (const AlgoSpec& algo : algos) {
    for (const DsPoint& point : points) {
      ExperimentConfig cfg = base;
      cfg.algo = algo;
      cfg.env = EnvSpec{};
      cfg.env.kind = EnvKind::game_of_skill_v2;
      cfg.env.chain_length = point.num_states;
      cfg.env.success_prob = point.success_prob;
      cfg.env.reward_left = base.env.reward_left;
      cfg.env.reward_right = base.env.reward_right;
      Entry e;
      e.experiment = run_experiment(cfg);
      std::ostringstream label;
      label << "game_of_skill_v2_ds" << point.target_ds;
      e.experiment.env = label.str();
      e.row.algo = to_string(algo.kind);
      e.row.point = point;
      e.row.mean_regret = e.experiment.summary.mean.back();
      e.row.norm_regret = e.row.mean_regret / regret_normaliser(base.horizon);
      entries.push_back(std::move(e));
    }
  }
  std::stable_sort(entries.begin(), entries.end(), [](const Entry& x, const Entry& y) {
    if (x.row.algo != y.row.algo) return x.row.algo < y.row.algo;
    return x.row.point.ds() < y.row.point.ds();
  });
  DsSweepResult result;
  for (auto& e : entries) {
    result.rows.push_back(e.row);
    result.experiments.push_back(std::move(e.experiment));
  }
  return result;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("loglog_slope needs two or more points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw std::invalid_argument("loglog_slope needs positive values");
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= n;
  my /= n;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  if (sxx == 0.0) throw std::invalid_argument("loglog_slope needs distinct x values");
  return sxy / sxx;
}

}  // namespace ucrlb
