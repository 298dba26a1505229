#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "ucrlb/cli.hpp"
#include "ucrlb/config.hpp"
#include "ucrlb/csv.hpp"
#include "ucrlb/errors.hpp"
#include "ucrlb/harness.hpp"

using namespace ucrlb;
namespace fs = std::filesystem;

namespace {

const fs::path& scratch_root() {
  struct Root {
    fs::path path = fs::temp_directory_path() / ("ucrlb_test_" + std::to_string(::getpid()));
    ~Root() {
      std::error_code ec;
      fs::remove_all(path, ec);
    }
  };
  static const Root root;
  return root.path;
}

fs::path scratch(const std::string& name) {
  const fs::path dir = scratch_root() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  f << text;
}

std::string read_file(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(read_file(path));
  for (std::string line; std::getline(in, line);) {
    std::vector<std::string> cells;
    std::istringstream l(line);
    for (std::string cell; std::getline(l, cell, ',');) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome cli(const std::vector<std::string>& args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli_main(args, out, err);
  return {code, out.str(), err.str()};
}

int run_binary(const std::string& args) {
  const std::string command = std::string(UCRLB_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(command.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string error_of(const std::string& text, const std::optional<Preset>& preset = std::nullopt) {
  try {
    parse_config(text, ".", preset);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

const char* kRiverswim = R"(# small riverswim run
[env]
kind = riverswim

[algo]
kind = ucrlv

[run]
horizon = 2^10
trials = 1
threads = 1
)";

}  // namespace

TEST_CASE("config parsing") {
  const RunConfig cfg = parse_config(R"(
[run]
horizon = 4096
trials = 3
delta = 0.1
base_seed = 7
masking = off

[env]
kind = "game_of_skill_v2"
chain_length = 5
success_prob = 0.2

[algo]
kind = [ucrlv, tsde]

[algo.tsde]
length_rule = 0

[sweep]
ds_values = 8, 27
)");
  CHECK(cfg.base.horizon == 4096);
  CHECK(cfg.base.trials == 3);
  CHECK(cfg.base.delta == 0.1);
  CHECK(cfg.base.base_seed == 7);
  CHECK_FALSE(cfg.base.masking);
  CHECK(cfg.base.env.kind == EnvKind::game_of_skill_v2);
  CHECK(cfg.base.env.chain_length == 5u);
  CHECK(cfg.base.env.horizon_hint == 4096);
  REQUIRE(cfg.algos.size() == 2);
  CHECK(cfg.algos[1].kind == AlgoKind::tsde);
  CHECK(cfg.algos[1].params.at("length_rule") == 0.0);
  CHECK(cfg.ds_values == std::vector<double>{8.0, 27.0});

  const RunConfig preset = parse_config("[env]\nkind = bandits\n[algo]\nkind = ucrlv\n", ".", preset_by_name("desk"));
  CHECK(preset.base.horizon == std::uint64_t{1} << 18);
  CHECK(preset.base.trials == 10);
  CHECK(preset.algos.size() == 1);
  CHECK(preset.algos[0].kind == AlgoKind::ucrlv);
  CHECK(preset_by_name("paper").horizon == std::uint64_t{1} << 24);
  CHECK_THROWS_AS(preset_by_name("huge"), ConfigError);
}

TEST_CASE("config errors name the key") {
  // Every snippet is a complete config apart from the one defect.
  const std::string algo = "[algo]\nkind = ucrlv\n";
  const std::string env = "[env]\nkind = riverswim\n";
  const std::string run = "[run]\nhorizon = 10\n";
  CHECK(error_of(env + algo).find("horizon") != std::string::npos);
  CHECK(error_of(run + algo).find("kind") != std::string::npos);
  CHECK(error_of(run + env).find("kind") != std::string::npos);
  CHECK(error_of(run + "horizn = 3\n" + env + algo).find("run.horizn") != std::string::npos);
  CHECK(error_of(run + algo + "[env]\nkind = maze\n").find("maze") != std::string::npos);
  CHECK(error_of(run + "horizon = 11\n" + env + algo).find("run.horizon") != std::string::npos);
  CHECK(error_of("[run]\nhorizon = ten\n" + env + algo).find("run.horizon") != std::string::npos);
  CHECK(error_of(run + "delta = 2\n" + env + algo).find("delta") != std::string::npos);
  CHECK(error_of(run + env + algo + "[algo.ucrlv]\nfoo = 1\n").find("foo") != std::string::npos);
  CHECK(error_of(run + env + algo + "[plot]\nx = 1\n").find("plot") != std::string::npos);
  CHECK(error_of(run + algo + "[env]\nkind = custom\n").find("model_file") != std::string::npos);
  CHECK(error_of(run + algo + "[env]\nkind = game_of_skill_v1\nsuccess_prob = 0\n").find("success_prob") !=
        std::string::npos);
  CHECK(error_of(run + env + "[algo]\nkind = kl_ucrl\n").find("kl_ucrl") != std::string::npos);
  CHECK(error_of(run + env + "[algo]\nkind = ucrlv, tsde\n[algo.params]\nreward_prior = 1\n").find("algo.params") !=
        std::string::npos);
}

TEST_CASE("custom model from a file") {
  const fs::path dir = scratch("custom");
  write_file(dir / "flip.json", R"({
  "num_states": 2, "num_actions": 2, "initial_state": 1,
  "transitions": [[[0, 1], [1, 0]], [[1, 0], [0, 1]]],
  "rewards": [[{"value": 0.2}, 0.4], [{"alpha": 1, "beta": 1}, {"value": 1.0}]]
})");
  write_file(dir / "run.cfg", "[run]\nhorizon = 64\ntrials = 2\n[env]\nkind = custom\nmodel_file = flip.json\n[algo]\nkind = ucrl2\n");
  const RunConfig cfg = load_config(dir / "run.cfg");
  const TabularMDP mdp = build_env(cfg.base.env);
  CHECK(mdp.num_states() == 2);
  CHECK(mdp.initial_state() == 1);
  CHECK(mdp.p(0, 0, 1) == 1.0);
  CHECK(mdp.expected_reward(0, 1) == 0.4);
  CHECK(mdp.expected_reward(1, 0) == 0.5);

  const Outcome r = cli({"run", (dir / "run.cfg").string(), "--out", (dir / "out").string()});
  CHECK(r.code == kExitOk);
  CHECK(read_csv(dir / "out" / "results.csv").size() == 1 + 2 * 7);

  write_file(dir / "broken.json", R"({"num_states": 2, "num_actions": 1, "transitions": [[[0.5, 0.4]], [[1, 0]]],
  "rewards": [[0.1], [0.1]]})");
  CHECK_THROWS_AS(load_model_file(dir / "broken.json"), ConfigError);
  CHECK_THROWS_AS(load_model_file(dir / "missing.json"), ConfigError);
}

TEST_CASE("run writes one row per checkpoint and is byte-identical across runs") {
  const fs::path dir = scratch("run");
  write_file(dir / "rs.cfg", kRiverswim);
  const Outcome a = cli({"run", (dir / "rs.cfg").string(), "--out", (dir / "a").string()});
  REQUIRE(a.code == kExitOk);
  const Outcome b = cli({"run", (dir / "rs.cfg").string(), "--out", (dir / "b").string(), "--threads", "2"});
  REQUIRE(b.code == kExitOk);

  const auto rows = read_csv(dir / "a" / "results.csv");
  REQUIRE(rows.size() == 12);
  CHECK(rows[0] == std::vector<std::string>{"algo", "env", "trial", "t", "cum_regret", "episodes"});
  for (std::size_t i = 1; i < rows.size(); ++i) {
    CHECK(rows[i][0] == "ucrlv");
    CHECK(rows[i][1] == "riverswim");
    CHECK(rows[i][2] == "0");
    CHECK(rows[i][3] == std::to_string(1u << (i - 1)));
  }
  const auto summary = read_csv(dir / "a" / "summary.csv");
  CHECK(summary[0] == std::vector<std::string>{"algo", "env", "t", "mean_regret", "std_regret", "mean_episodes"});
  CHECK(summary.size() == 12);
  CHECK(read_csv(dir / "a" / "bounds.csv")[0][0] == "t");

  for (const char* name : {"results.csv", "summary.csv", "bounds.csv"}) {
    CHECK(read_file(dir / "a" / name) == read_file(dir / "b" / name));
  }
  CHECK(a.out.find("ucrlv on riverswim") != std::string::npos);
}

TEST_CASE("missing horizon is a usage error naming the key") {
  const fs::path dir = scratch("nohorizon");
  write_file(dir / "bad.cfg", "[env]\nkind = riverswim\n[algo]\nkind = ucrlv\n");
  const Outcome r = cli({"run", (dir / "bad.cfg").string(), "--out", dir.string()});
  CHECK(r.code == kExitUsage);
  CHECK(r.err.find("horizon") != std::string::npos);
  // A preset fills the horizon in.
  write_file(dir / "tiny.cfg", "[env]\nkind = bandits\n[algo]\nkind = tsde\n[run]\ntrials = 1\n");
  CHECK(parse_config(read_file(dir / "tiny.cfg"), dir, preset_by_name("desk")).base.horizon == 1u << 18);
}

TEST_CASE("verify exit codes") {
  const fs::path dir = scratch("verify");
  CHECK(cli({"verify", "--scope", "submodularity", "--out", dir.string()}).code == kExitOk);
  const Outcome corrupt = cli({"verify", "--scope", "subsets", "--corrupt", "--cases", "50", "--out", dir.string()});
  CHECK(corrupt.code == kExitFailure);
  CHECK(corrupt.out.find("FAIL subsets") != std::string::npos);
  CHECK(fs::file_size(dir / "verify_failures" / "subsets.jsonl") > 0);
  CHECK(cli({"verify", "--scope", "everything"}).code == kExitUsage);
  CHECK(cli({"verify"}).code == kExitUsage);
  CHECK(cli({}).code == kExitUsage);
  CHECK(cli({"frobnicate"}).code == kExitUsage);
}

TEST_CASE("the installed binary maps outcomes to exit codes") {
  const fs::path dir = scratch("binary");
  write_file(dir / "rs.cfg", kRiverswim);
  write_file(dir / "bad.cfg", "[env]\nkind = riverswim\n[algo]\nkind = ucrlv\n");
  CHECK(run_binary("run " + (dir / "rs.cfg").string() + " --out " + (dir / "out").string()) == 0);
  CHECK(fs::exists(dir / "out" / "results.csv"));
  CHECK(run_binary("run " + (dir / "bad.cfg").string()) == 2);
  CHECK(run_binary("verify --scope submodularity --cases 20 --out " + dir.string()) == 0);
  CHECK(run_binary("verify --scope subsets --corrupt --cases 20 --out " + dir.string()) == 1);
  CHECK(run_binary("verify --scope nope") == 2);
  CHECK(run_binary("--help") == 0);
}

TEST_CASE("sweep output") {
  const fs::path dir = scratch("sweep");
  write_file(dir / "sw.cfg", R"([env]
kind = game_of_skill_v2
[algo]
kind = ucrlv
[run]
horizon = 2^11
trials = 2
threads = 1
[sweep]
ds_values = 8, 27
)");
  const Outcome r = cli({"sweep", (dir / "sw.cfg").string(), "--out", dir.string()});
  REQUIRE(r.code == kExitOk);
  const auto rows = read_csv(dir / "ds_sweep.csv");
  REQUIRE(rows.size() == 3);
  CHECK(rows[0] == std::vector<std::string>{"algo", "ds", "s", "d", "norm_regret"});

  // Mean final regret per env label from the raw per-trial rows.
  std::map<std::string, std::pair<double, int>> finals;
  for (const auto& row : read_csv(dir / "results.csv")) {
    if (row[3] != "2048") continue;
    finals[row[1]].first += std::stod(row[4]);
    finals[row[1]].second += 1;
  }
  REQUIRE(finals.size() == 2);
  const double norm = std::sqrt(2048.0 * std::log(2048.0));
  // Each normalised value times sqrt(T ln T) gives back one raw mean.
  for (const auto& [env, acc] : finals) {
    const double raw = acc.first / acc.second;
    int matched = 0;
    for (std::size_t j = 1; j < rows.size(); ++j) {
      if (std::abs(std::stod(rows[j][4]) * norm - raw) <= 1e-9 * std::abs(raw)) ++matched;
    }
    INFO(env);
    CHECK(matched == 1);
  }

  const Outcome ref = cli({"sweep", (dir / "sw.cfg").string(), "--out", (dir / "ref").string(), "--reference"});
  REQUIRE(ref.code == kExitOk);
  const auto with_ref = read_csv(dir / "ref" / "ds_sweep.csv");
  CHECK(with_ref[0].back() == "reference");
  CHECK(with_ref[1].size() == 6);

  write_file(dir / "nosweep.cfg", kRiverswim);
  CHECK(cli({"sweep", (dir / "nosweep.cfg").string(), "--out", dir.string()}).code == kExitUsage);
}

TEST_CASE("number formatting round-trips") {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, 123456789.125, -2.5}) CHECK(std::stod(format_double(v)) == v);
}
