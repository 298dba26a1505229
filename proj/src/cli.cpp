#include "ucrlb/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>

#include <CLI11.hpp>

#include "ucrlb/config.hpp"
#include "ucrlb/csv.hpp"
#include "ucrlb/errors.hpp"
#include "ucrlb/harness.hpp"
#include "ucrlb/verify.hpp"

namespace ucrlb {

namespace {

namespace fs = std::filesystem;

struct CommonArgs {
  std::string config;
  std::string out_dir = ".";
  std::string preset;
  std::size_t threads = 0;
};

std::ofstream open_output(const fs::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write '" + path.string() + "'");
  return f;
}

RunConfig load(const CommonArgs& args) {
  std::optional<Preset> preset;
  if (!args.preset.empty()) preset = preset_by_name(args.preset);
  RunConfig cfg = load_config(args.config, preset);
  if (args.threads > 0) cfg.base.threads = args.threads;
  return cfg;
}

std::string fixed(double v, int digits = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

void print_summary(std::ostream& out, const std::vector<ExperimentResult>& results) {
  for (const auto& r : results) {
    const auto& s = r.summary;
    out << r.algo << " on " << r.env << ": T = " << s.checkpoints.back() << ", regret " << fixed(s.mean.back())
        << " +- " << fixed(s.stddev.back()) << ", episodes " << fixed(s.mean_episodes.back(), 1) << " ("
        << r.traces.size() << " trials)\n";
  }
}

int cmd_run(const CommonArgs& args, std::ostream& out) {
  const RunConfig cfg = load(args);
  std::vector<ExperimentResult> results;
  for (const AlgoSpec& algo : cfg.algos) {
    ExperimentConfig c = cfg.base;
    c.algo = algo;
    results.push_back(run_experiment(c));
  }
  const fs::path dir(args.out_dir);
  fs::create_directories(dir);
  {
    auto f = open_output(dir / "results.csv");
    write_results_csv(f, results);
  }
  {
    auto f = open_output(dir / "summary.csv");
    write_summary_csv(f, results);
  }
  const TabularMDP mdp = build_env(cfg.base.env);
  double d = 0.0;
  try {
    d = diameter(mdp);
  } catch (const ConvergenceError&) {
    d = 0.0;  // no bound curve for a non-communicating custom model
  }
  {
    auto f = open_output(dir / "bounds.csv");
    write_bounds_csv(f, d, mdp.num_states(), mdp.num_actions(), checkpoint_rounds(cfg.base.horizon),
                     cfg.base.delta);
  }
  print_summary(out, results);
  out << "wrote " << (dir / "results.csv").string() << ", summary.csv, bounds.csv\n";
  return kExitOk;
}

int cmd_sweep(const CommonArgs& args, bool reference, std::ostream& out) {
  const RunConfig cfg = load(args);
  if (cfg.ds_values.empty()) throw ConfigError("config: sweep needs 'ds_values' in [sweep]");
  const DsSweepResult sweep = ds_sweep(cfg.base, cfg.algos, cfg.ds_values);
  const fs::path dir(args.out_dir);
  fs::create_directories(dir);
  {
    auto f = open_output(dir / "ds_sweep.csv");
    write_ds_sweep_csv(f, sweep, reference);
  }
  {
    auto f = open_output(dir / "results.csv");
    write_results_csv(f, sweep.experiments);
  }
  {
    auto f = open_output(dir / "summary.csv");
    write_summary_csv(f, sweep.experiments);
  }
  for (const auto& row : sweep.rows) {
    out << row.algo << " ds=" << fixed(row.point.ds(), 1) << " (S=" << row.point.num_states
        << ", D=" << fixed(row.point.diameter, 1) << "): regret/sqrt(T ln T) = " << fixed(row.norm_regret, 4)
        << '\n';
  }
  for (const AlgoSpec& algo : cfg.algos) {
    std::vector<double> x;
    std::vector<double> y;
    for (const auto& row : sweep.rows) {
      if (row.algo == to_string(algo.kind) && row.norm_regret > 0.0) {
        x.push_back(row.point.ds());
        y.push_back(row.norm_regret);
      }
    }
    if (x.size() >= 2) out << to_string(algo.kind) << " log-log slope: " << fixed(loglog_slope(x, y), 3) << '\n';
  }
  out << "wrote " << (dir / "ds_sweep.csv").string() << '\n';
  return kExitOk;
}

int cmd_verify(const std::string& scope, const VerifyOptions& options, const std::string& out_dir,
               std::ostream& out) {
  std::vector<std::string> scopes;
  if (scope == "all") {
    scopes = verify_scopes();
  } else if (std::find(verify_scopes().begin(), verify_scopes().end(), scope) != verify_scopes().end()) {
    scopes.push_back(scope);
  } else {
    throw ConfigError("verify: unknown scope '" + scope + "'");
  }
  bool all_passed = true;
  for (const auto& name : scopes) {
    const SuiteOutcome outcome = run_verify_suite(name, options);
    out << (outcome.passed() ? "PASS " : "FAIL ") << name << ": " << outcome.failures << " failures in "
        << outcome.cases << " cases";
    if (!outcome.detail.empty()) out << " (" << outcome.detail << ")";
    out << '\n';
    if (!outcome.passed()) {
      all_passed = false;
      const fs::path dir = fs::path(out_dir) / "verify_failures";
      fs::create_directories(dir);
      auto f = open_output(dir / (name + ".jsonl"));
      for (const auto& line : outcome.counterexamples) f << line << '\n';
      out << "  counterexamples: " << (dir / (name + ".jsonl")).string() << '\n';
    }
  }
  return all_passed ? kExitOk : kExitFailure;
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Regret benchmarks for optimistic tabular reinforcement learning", "ucrlb"};
  app.require_subcommand(1);

  CommonArgs run_args;
  auto* run = app.add_subcommand("run", "Run every configured algorithm and write results.csv and summary.csv");
  run->add_option("config", run_args.config, "Experiment config file")->required();
  run->add_option("--out", run_args.out_dir, "Output directory");
  run->add_option("--preset", run_args.preset, "Scale preset: desk or paper");
  run->add_option("--threads", run_args.threads, "Worker threads (overrides UCRLB_THREADS)");

  CommonArgs sweep_args;
  bool reference = false;
  auto* sweep = app.add_subcommand("sweep", "Run the GameOfSkill-v2 DS sweep and write ds_sweep.csv");
  sweep->add_option("config", sweep_args.config, "Experiment config file")->required();
  sweep->add_option("--out", sweep_args.out_dir, "Output directory");
  sweep->add_option("--preset", sweep_args.preset, "Scale preset: desk or paper");
  sweep->add_option("--threads", sweep_args.threads, "Worker threads (overrides UCRLB_THREADS)");
  sweep->add_flag("--reference", reference, "Add a least-squares c*sqrt(DS) column");

  std::string scope;
  std::string verify_out = ".";
  VerifyOptions verify_options;
  auto* verify = app.add_subcommand("verify", "Run the brute-force oracle suites");
  verify->add_option("--scope", scope, "subsets, oracle, submodularity, coverage, evi or all")->required();
  verify->add_flag("--corrupt", verify_options.corrupt, "Feed the oracles inputs they must reject");
  verify->add_option("--seed", verify_options.seed, "Corpus seed");
  verify->add_option("--cases", verify_options.cases, "Corpus size per suite");
  verify->add_option("--out", verify_out, "Output directory for verify_failures/");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  try {
    if (*run) return cmd_run(run_args, out);
    if (*sweep) return cmd_sweep(sweep_args, reference, out);
    if (*verify) return cmd_verify(scope, verify_options, verify_out, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ConvergenceError& e) {
    err << "error: " << e.what() << " (last span " << e.last_span() << ")\n";
    return kExitFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace ucrlb
