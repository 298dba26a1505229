#include "ucrlb/config.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "ucrlb/errors.hpp"

namespace ucrlb {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string unquote(const std::string& s) {
  if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front()) {
    return s.substr(1, s.size() - 2);
  }
  return s;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string v = trim(s);
  if (v.size() >= 2 && v.front() == '[' && v.back() == ']') v = v.substr(1, v.size() - 2);
  std::stringstream in(v);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = unquote(trim(item));
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

using Section = std::map<std::string, std::string>;

class Document {
 public:
  explicit Document(const std::string& text) {
    std::stringstream in(text);
    std::string line;
    std::string section;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line = line.substr(0, hash);
      line = trim(line);
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']') throw error(lineno, "unterminated section header");
        section = trim(line.substr(1, line.size() - 2));
        if (section.empty()) throw error(lineno, "empty section name");
        sections_[section];
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw error(lineno, "expected key = value");
      if (section.empty()) throw error(lineno, "key outside of a section");
      const std::string key = trim(line.substr(0, eq));
      const std::string value = unquote(trim(line.substr(eq + 1)));
      if (key.empty()) throw error(lineno, "empty key");
      if (!sections_[section].emplace(key, value).second) {
        throw ConfigError("config: duplicate key '" + section + "." + key + "'");
      }
    }
  }

  const std::map<std::string, Section>& sections() const { return sections_; }

  std::optional<std::string> get(const std::string& section, const std::string& key) const {
    const auto s = sections_.find(section);
    if (s == sections_.end()) return std::nullopt;
    const auto k = s->second.find(key);
    if (k == s->second.end()) return std::nullopt;
    return k->second;
  }

 private:
  static ConfigError error(int lineno, const std::string& what) {
    return ConfigError("config line " + std::to_string(lineno) + ": " + what);
  }

  std::map<std::string, Section> sections_;
};

double parse_double(const std::string& name, const std::string& text) {
  const auto caret = text.find('^');
  if (caret != std::string::npos) {
    const double base = parse_double(name, trim(text.substr(0, caret)));
    const double exponent = parse_double(name, trim(text.substr(caret + 1)));
    return std::pow(base, exponent);
  }
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (text.empty() || end != text.c_str() + text.size() || !std::isfinite(v)) {
    throw ConfigError("config: '" + name + "' expects a number, got '" + text + "'");
  }
  return v;
}

std::uint64_t parse_count(const std::string& name, const std::string& text) {
  const double v = parse_double(name, text);
  if (v < 0.0 || v != std::floor(v) || v > 1.8e19) {
    throw ConfigError("config: '" + name + "' expects a nonnegative integer, got '" + text + "'");
  }
  return static_cast<std::uint64_t>(v);
}

bool parse_bool(const std::string& name, const std::string& text) {
  if (text == "true" || text == "yes" || text == "1" || text == "on") return true;
  if (text == "false" || text == "no" || text == "0" || text == "off") return false;
  throw ConfigError("config: '" + name + "' expects true or false, got '" + text + "'");
}

void reject_unknown(const Section& section, const std::string& name, const std::set<std::string>& allowed) {
  for (const auto& [key, value] : section) {
    if (!allowed.count(key)) throw ConfigError("config: unknown key '" + name + "." + key + "'");
  }
}

std::map<std::string, double> parse_params(const Section& section, const std::string& name) {
  std::map<std::string, double> params;
  for (const auto& [key, value] : section) params[key] = parse_double(name + "." + key, value);
  return params;
}

RewardDistribution parse_reward(const nlohmann::json& j, const std::string& where) {
  if (j.is_number()) return DeterministicReward{j.get<double>()};
  if (j.is_object() && j.contains("value")) return DeterministicReward{j.at("value").get<double>()};
  if (j.is_object() && j.contains("alpha") && j.contains("beta")) {
    return BetaReward{j.at("alpha").get<double>(), j.at("beta").get<double>()};
  }
  throw ConfigError("model_file: " + where + " must be a number, {\"value\": r} or {\"alpha\": a, \"beta\": b}");
}

}  // namespace

Preset preset_by_name(const std::string& name) {
  if (name == "desk") return {std::uint64_t{1} << 18, 10};
  if (name == "paper") return {std::uint64_t{1} << 24, 40};
  throw ConfigError("unknown preset '" + name + "' (expected desk or paper)");
}

TabularMDP load_model_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("env.model_file: cannot open '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
    const auto S = j.at("num_states").get<std::size_t>();
    const auto A = j.at("num_actions").get<std::size_t>();
    const auto initial = j.value("initial_state", std::size_t{0});
    const auto& tr = j.at("transitions");
    const auto& rw = j.at("rewards");
    if (tr.size() != S || rw.size() != S) throw ConfigError("model_file: transitions and rewards need S rows");
    std::vector<double> transitions;
    std::vector<RewardDistribution> rewards;
    for (std::size_t s = 0; s < S; ++s) {
      if (tr[s].size() != A || rw[s].size() != A) throw ConfigError("model_file: every state needs A entries");
      for (std::size_t a = 0; a < A; ++a) {
        const auto row = tr[s][a].get<std::vector<double>>();
        if (row.size() != S) throw ConfigError("model_file: every transition row needs S entries");
        transitions.insert(transitions.end(), row.begin(), row.end());
        rewards.push_back(parse_reward(rw[s][a], "rewards[" + std::to_string(s) + "][" + std::to_string(a) + "]"));
      }
    }
    return TabularMDP(S, A, std::move(transitions), std::move(rewards), initial);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("model_file: ") + e.what());
  }
}

RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir,
                       const std::optional<Preset>& preset) {
  const Document doc(text);
  RunConfig cfg;
  ExperimentConfig& base = cfg.base;

  std::set<std::string> algo_sections;
  for (const auto& [name, section] : doc.sections()) {
    if (name == "env" || name == "env.riverswim" || name == "algo" || name == "algo.params" || name == "run" ||
        name == "sweep") {
      continue;
    }
    if (name.rfind("algo.", 0) == 0) {
      parse_algo_kind(name.substr(5));
      algo_sections.insert(name);
      continue;
    }
    throw ConfigError("config: unknown section [" + name + "]");
  }

  // [run]
  const auto& sections = doc.sections();
  if (const auto it = sections.find("run"); it != sections.end()) {
    reject_unknown(it->second, "run", {"horizon", "trials", "delta", "base_seed", "masking", "threads"});
  }
  if (preset) {
    base.horizon = preset->horizon;
    base.trials = preset->trials;
  }
  if (const auto v = doc.get("run", "horizon")) {
    base.horizon = parse_count("run.horizon", *v);
  } else if (!preset) {
    throw ConfigError("config: missing required key 'horizon' in [run]");
  }
  if (const auto v = doc.get("run", "trials")) base.trials = parse_count("run.trials", *v);
  if (const auto v = doc.get("run", "delta")) base.delta = parse_double("run.delta", *v);
  if (const auto v = doc.get("run", "base_seed")) base.base_seed = parse_count("run.base_seed", *v);
  if (const auto v = doc.get("run", "masking")) base.masking = parse_bool("run.masking", *v);
  if (const auto v = doc.get("run", "threads")) base.threads = parse_count("run.threads", *v);

  // [env]
  if (const auto it = sections.find("env"); it != sections.end()) {
    reject_unknown(it->second, "env",
                   {"kind", "chain_length", "success_prob", "reward_left", "reward_right", "horizon_hint",
                    "model_file"});
  }
  EnvSpec& env = base.env;
  const auto kind = doc.get("env", "kind");
  if (!kind) throw ConfigError("config: missing required key 'kind' in [env]");
  env.kind = parse_env_kind(*kind);
  if (const auto v = doc.get("env", "chain_length")) env.chain_length = parse_count("env.chain_length", *v);
  if (const auto v = doc.get("env", "success_prob")) env.success_prob = parse_double("env.success_prob", *v);
  if (const auto v = doc.get("env", "reward_left")) env.reward_left = parse_double("env.reward_left", *v);
  if (const auto v = doc.get("env", "reward_right")) env.reward_right = parse_double("env.reward_right", *v);
  env.horizon_hint = base.horizon;
  if (const auto v = doc.get("env", "horizon_hint")) env.horizon_hint = parse_count("env.horizon_hint", *v);
  const auto model_file = doc.get("env", "model_file");
  if (env.kind == EnvKind::custom) {
    if (!model_file) throw ConfigError("config: env.kind = custom needs 'model_file' in [env]");
    std::filesystem::path p(*model_file);
    if (p.is_relative()) p = base_dir / p;
    env.custom = std::make_shared<const TabularMDP>(load_model_file(p));
  } else if (model_file) {
    throw ConfigError("config: 'env.model_file' only applies to env.kind = custom");
  }
  if (const auto it = sections.find("env.riverswim"); it != sections.end()) {
    RiverSwimKernel& k = env.riverswim;
    const std::map<std::string, double*> fields{{"interior_right", &k.interior_right},
                                                {"interior_stay", &k.interior_stay},
                                                {"interior_left", &k.interior_left},
                                                {"first_right", &k.first_right},
                                                {"first_stay", &k.first_stay},
                                                {"last_stay", &k.last_stay},
                                                {"last_left", &k.last_left}};
    for (const auto& [key, value] : it->second) {
      const auto f = fields.find(key);
      if (f == fields.end()) throw ConfigError("config: unknown key 'env.riverswim." + key + "'");
      *f->second = parse_double("env.riverswim." + key, value);
    }
  }

  // [algo]
  if (const auto it = sections.find("algo"); it != sections.end()) reject_unknown(it->second, "algo", {"kind"});
  const auto algo_kind = doc.get("algo", "kind");
  if (!algo_kind) throw ConfigError("config: missing required key 'kind' in [algo]");
  for (const std::string& name : split_list(*algo_kind)) {
    AlgoSpec spec;
    spec.kind = parse_algo_kind(name);
    for (const auto& existing : cfg.algos) {
      if (existing.kind == spec.kind) throw ConfigError("config: algorithm '" + name + "' listed twice in algo.kind");
    }
    if (const auto it = sections.find("algo." + name); it != sections.end()) {
      spec.params = parse_params(it->second, "algo." + name);
    }
    cfg.algos.push_back(spec);
  }
  if (cfg.algos.empty()) throw ConfigError("config: 'algo.kind' lists no algorithm");
  for (const auto& name : algo_sections) {
    const AlgoKind k = parse_algo_kind(name.substr(5));
    bool listed = false;
    for (const auto& spec : cfg.algos) listed = listed || spec.kind == k;
    if (!listed) throw ConfigError("config: section [" + name + "] names an algorithm not in algo.kind");
  }
  if (const auto it = sections.find("algo.params"); it != sections.end()) {
    if (cfg.algos.size() != 1) {
      throw ConfigError("config: [algo.params] needs a single algorithm; use [algo.<name>] sections instead");
    }
    for (const auto& [key, value] : parse_params(it->second, "algo.params")) cfg.algos[0].params[key] = value;
  }
  // Surface unknown parameter names now rather than inside a trial.
  for (const auto& spec : cfg.algos) make_agent(spec, 2, 2, 0.5, Stream(0));
  base.algo = cfg.algos.front();

  // [sweep]
  if (const auto it = sections.find("sweep"); it != sections.end()) {
    reject_unknown(it->second, "sweep", {"ds_values"});
    if (const auto v = doc.get("sweep", "ds_values")) {
      for (const auto& item : split_list(*v)) cfg.ds_values.push_back(parse_double("sweep.ds_values", item));
    }
  }

  base.validate();
  build_env(env);
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path, const std::optional<Preset>& preset) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str(), path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path(),
                      preset);
}

}  // namespace ucrlb
