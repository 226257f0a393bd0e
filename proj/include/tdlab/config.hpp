#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tdlab/instances.hpp"
#include "tdlab/learners.hpp"

namespace tdlab {

enum class InstanceKind { kMinimax, kBaird, kFile };
enum class Algorithm { kTd, kAveragedTd, kOffPolicyTd, kTdc };

const char* to_string(InstanceKind kind);
const char* to_string(Algorithm algorithm);

/// Resolved experiment description. See docs/config_format.md for the file syntax.
struct ExperimentConfig {
  InstanceKind instance = InstanceKind::kMinimax;
  MinimaxSpec minimax;
  std::string instance_path;

  Algorithm algorithm = Algorithm::kAveragedTd;
  StepsizePlan stepsize;
  std::optional<Vec> theta0;  // empty: zero, or the instance's own start vector (Baird)

  std::uint64_t T = 100000;
  std::uint64_t n_trials = 100;
  std::uint64_t seed = 20240601;
  std::string checkpoint_spec = "log:50";
  std::vector<std::uint64_t> checkpoints;
  std::string output = "run";
};

/// Parses `key = value` lines (# starts a comment). Later `overrides`
/// ("key=value") replace file values. Throws ConfigError on unknown keys,
/// malformed values or violated invariants.
ExperimentConfig parse_config(const std::string& text, const std::vector<std::string>& overrides = {});
ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {});

/// Canonical text form; parse_config(render_config(c)) reproduces c.
std::string render_config(const ExperimentConfig& config);

/// `count` log-spaced integers from min(10, T) to T, rounded, deduplicated, last = T.
std::vector<std::uint64_t> log_checkpoints(std::uint64_t T, std::size_t count);

/// Named presets: "minimax-fig1", "baird-fig3".
ExperimentConfig preset_config(const std::string& name);
std::vector<std::string> preset_names();

}  // namespace tdlab
