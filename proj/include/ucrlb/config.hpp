#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ucrlb/agents.hpp"
#include "ucrlb/harness.hpp"
#include "ucrlb/mdp.hpp"

namespace ucrlb {

/// Parsed experiment file. `base.algo` is the first entry of `algos`.
struct RunConfig {
  ExperimentConfig base;
  std::vector<AlgoSpec> algos;
  std::vector<double> ds_values;  // [sweep] ds_values
};

/// Scale presets: "desk" (T = 2^18, 10 trials) and "paper" (T = 2^24,
/// 40 trials). Values in the file win over the preset.
struct Preset {
  std::uint64_t horizon = 0;
  std::size_t trials = 0;
};

Preset preset_by_name(const std::string& name);

/// Parses the text format described in the README. `base_dir` resolves a
/// relative env.model_file. Throws ConfigError naming the offending key.
RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = ".",
                       const std::optional<Preset>& preset = std::nullopt);

RunConfig load_config(const std::filesystem::path& path, const std::optional<Preset>& preset = std::nullopt);

/// Reads a custom MDP from JSON:
///   {"num_states": S, "num_actions": A, "initial_state": 0,
///    "transitions": [[[p(s'|s,a) ...] per a] per s],
///    "rewards": [[{"value": r} | {"alpha": x, "beta": y} per a] per s]}
TabularMDP load_model_file(const std::filesystem::path& path);

}  // namespace ucrlb
