// Acceptance checks, one line per criterion. Usage: acceptance [N ...]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "ucrlb/cli.hpp"
#include "ucrlb/harness.hpp"
#include "ucrlb/verify.hpp"

using namespace ucrlb;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* format, double a = 0, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, format, a, b, c, d);
  return buf;
}

Verdict suite(const std::string& scope, std::size_t cases) {
  VerifyOptions options;
  options.cases = cases;
  const SuiteOutcome o = run_verify_suite(scope, options);
  std::ostringstream d;
  d << o.failures << " failures in " << o.cases << " cases";
  if (!o.detail.empty()) d << " (" << o.detail << ")";
  return {o.passed(), d.str()};
}

ExperimentConfig desk(EnvKind env, AlgoKind algo, std::uint64_t horizon, std::size_t trials) {
  ExperimentConfig cfg;
  cfg.env.kind = env;
  cfg.algo.kind = algo;
  cfg.horizon = horizon;
  cfg.trials = trials;
  return cfg;
}

Verdict criterion1() { return suite("subsets", 1000); }
Verdict criterion2() { return suite("oracle", 1000); }

Verdict criterion3() {
  Verdict v = suite("submodularity", 1000);
  VerifyOptions control;
  control.cases = 1000;
  control.corrupt = true;
  const SuiteOutcome convex = run_verify_suite("submodularity", control);
  v.pass = v.pass && !convex.passed();
  v.detail += "; convex control: " + std::to_string(convex.failures) + " of " + std::to_string(convex.cases) +
              " tables flagged";
  return v;
}

Verdict criterion4() { return suite("evi", 1000); }

Verdict criterion5() {
  const std::uint64_t T = std::uint64_t{1} << 18;
  bool pass = true;
  std::ostringstream d;
  for (EnvKind env : {EnvKind::riverswim, EnvKind::bandits, EnvKind::game_of_skill_v1, EnvKind::game_of_skill_v2}) {
    ExperimentConfig cfg = desk(env, AlgoKind::ucrlv, T, 40);
    cfg.env.horizon_hint = T;
    const TabularMDP mdp = build_env(cfg.env);
    const double bound = episode_bound(mdp.num_states(), mdp.num_actions(), static_cast<double>(T));
    std::size_t worst = 0;
    try {
      for (const auto& tr : run_experiment(cfg).traces) worst = std::max(worst, tr.episode_count);
    } catch (const std::exception& e) {
      pass = false;
      d << to_string(env) << ": " << e.what() << "; ";
      continue;
    }
    pass = pass && static_cast<double>(worst) <= bound;
    d << to_string(env) << " max " << worst << " <= " << fmt("%.1f", bound) << "; ";
  }
  return {pass, d.str()};
}

Verdict criterion6() {
  // 10 repetitions per case: 10^4 per (n, p) cell.
  return suite("coverage", 1000);
}

struct Cell {
  double mean = 0.0;
  double sd = 0.0;
};

Cell final_regret(const ExperimentResult& r) { return {r.summary.mean.back(), r.summary.stddev.back()}; }

Verdict criterion7() {
  const std::uint64_t T = std::uint64_t{1} << 18;
  bool pass = true;
  std::ostringstream d;
  struct Case {
    EnvKind env;
    std::vector<AlgoKind> rivals;
  };
  for (const Case& c : {Case{EnvKind::bandits, {AlgoKind::ucrl2}}, Case{EnvKind::riverswim, {AlgoKind::ucrl2}},
                        Case{EnvKind::game_of_skill_v2, {AlgoKind::ucrl2, AlgoKind::tsde}}}) {
    ExperimentConfig cfg = desk(c.env, AlgoKind::ucrlv, T, 40);
    cfg.env.horizon_hint = T;
    const Cell ours = final_regret(run_experiment(cfg));
    for (AlgoKind rival : c.rivals) {
      cfg.algo.kind = rival;
      const Cell theirs = final_regret(run_experiment(cfg));
      const double pooled = std::sqrt((ours.sd * ours.sd + theirs.sd * theirs.sd) / 2.0);
      const bool ok = ours.mean + pooled < theirs.mean;
      pass = pass && ok;
      d << to_string(c.env) << ": ucrlv " << fmt("%.0f", ours.mean) << " vs " << to_string(rival) << " "
        << fmt("%.0f", theirs.mean) << " (pooled sd " << fmt("%.0f", pooled) << (ok ? ")" : ", not ahead)") << "; ";
    }
  }
  return {pass, d.str()};
}

Verdict criterion8() {
  ExperimentConfig cfg = desk(EnvKind::riverswim, AlgoKind::ucrlv, std::uint64_t{1} << 18, 40);
  const ExperimentResult r = run_experiment(cfg);
  const auto& m = r.summary.mean;
  const double ratio = m[m.size() - 1] / m[m.size() - 2];
  return {ratio < 1.9, fmt("regret(2^18) / regret(2^17) = %.0f / %.0f = %.3f (< 1.9)", m[m.size() - 1],
                           m[m.size() - 2], ratio)};
}

Verdict criterion9() {
  ExperimentConfig base = desk(EnvKind::game_of_skill_v2, AlgoKind::ucrlv, std::uint64_t{1} << 20, 10);
  const std::vector<double> targets{27.0, 64.0, 125.0, 216.0};
  const DsSweepResult sweep = ds_sweep(base, {AlgoSpec{AlgoKind::ucrl2, {}}, AlgoSpec{AlgoKind::ucrlv, {}}}, targets);
  auto slope_of = [&](const std::string& algo) {
    std::vector<double> x;
    std::vector<double> y;
    for (const auto& row : sweep.rows) {
      if (row.algo != algo) continue;
      x.push_back(row.point.ds());
      y.push_back(row.norm_regret);
    }
    return loglog_slope(x, y);
  };
  const double ours = slope_of("ucrlv");
  const double theirs = slope_of("ucrl2");
  std::ostringstream d;
  d << fmt("ucrlv slope %.3f (<= 0.65), ucrl2 slope %.3f; ucrlv y:", ours, theirs);
  for (const auto& row : sweep.rows) {
    if (row.algo == "ucrlv") d << fmt(" ds=%.0f:%.2f", row.point.ds(), row.norm_regret);
  }
  return {ours <= 0.65 && ours < theirs, d.str()};
}

Verdict criterion10() {
  const fs::path dir = fs::temp_directory_path() / ("ucrlb_acceptance_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  {
    std::ofstream f(dir / "run.cfg");
    f << "[env]\nkind = game_of_skill_v2\n[algo]\nkind = ucrlv, ucrl2, tsde\n[run]\nhorizon = 2^14\ntrials = 6\n";
  }
  std::ostringstream sink;
  int codes = 0;
  for (const char* out : {"a", "b"}) {
    codes += cli_main({"run", (dir / "run.cfg").string(), "--out", (dir / out).string()}, sink, sink);
  }
  auto slurp = [](const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
  };
  bool same = codes == 0;
  std::ostringstream d;
  for (const char* name : {"results.csv", "summary.csv", "bounds.csv"}) {
    const std::string a = slurp(dir / "a" / name);
    const bool eq = !a.empty() && a == slurp(dir / "b" / name);
    same = same && eq;
    d << name << (eq ? " identical" : " DIFFERS") << " (" << a.size() << " bytes); ";
  }
  fs::remove_all(dir);
  return {same, d.str()};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::function<Verdict()>> criteria{criterion1, criterion2, criterion3, criterion4, criterion5,
                                                        criterion6, criterion7, criterion8, criterion9, criterion10};
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) {
    const int n = std::atoi(argv[i]);
    if (n < 1 || n > static_cast<int>(criteria.size())) {
      std::cerr << "usage: acceptance [1-" << criteria.size() << " ...]\n";
      return 2;
    }
    selected.push_back(n);
  }
  if (selected.empty()) {
    for (int n = 1; n <= static_cast<int>(criteria.size()); ++n) selected.push_back(n);
  }

  int failed = 0;
  for (int n : selected) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = criteria[n - 1]();
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << (v.pass ? "PASS" : "FAIL") << " criterion " << n << ": " << v.detail << " [" << fmt("%.1f", secs)
              << " s]" << std::endl;
    if (!v.pass) ++failed;
  }
  return failed == 0 ? 0 : 1;
}
