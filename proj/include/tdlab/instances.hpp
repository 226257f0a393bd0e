#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tdlab/mdp_core.hpp"

namespace tdlab {

/// Member of the minimax lower-bound family. States are 0-based here: the
/// first d-1 states each carry their own feature coordinate and a
/// probability q_s of staying put; states d-1 .. n-1 share the last
/// coordinate.
struct MinimaxSpec {
  std::size_t n_states = 10;
  std::size_t d = 3;
  double gamma = 0.2;
  double epsilon = 0.02;
  // +1 / -1 per coordinate 0..d-2; empty means first half +, second half -.
  std::vector<int> signs;
  // Upper bound on epsilon; empty means 0.1 gamma / (1 - gamma).
  std::optional<double> epsilon_bound;
};

struct MinimaxInstance {
  MinimaxSpec spec;
  std::vector<int> signs;
  Vec q;  // length d-1
  InducedMrp mrp;
  FeatureMap features;
  Vec mu;          // closed form
  Vec theta_star;  // closed form
  // The lower-bound argument assumes gamma in (1/2, 1); the experiment uses 0.2.
  bool in_theorem_regime = false;
};

double default_epsilon_bound(double gamma);

/// Throws ConfigError for malformed specs (even d, unbalanced signs,
/// epsilon out of range, q outside (0,1)) and ModelError if a kernel row
/// fails to sum to one.
MinimaxInstance build_minimax(const MinimaxSpec& spec);

/// Single-action MDP carrying the minimax chain, for serialization.
TabularMdp minimax_as_mdp(const MinimaxInstance& instance);

/// Baird's seven-state counterexample with its 8-dimensional features.
struct BairdInstance {
  TabularMdp mdp;
  Policy target;
  Policy behavior;
  FeatureMap features;  // unnormalized and overcomplete, validation bypassed
  Vec mu_b;             // uniform
  Vec value_star;       // zero
  Vec theta0;           // (1,1,1,1,1,1,10,1)
};

BairdInstance build_baird();

/// Generic off-policy evaluation problem, as loaded from an instance file.
/// Without a behavior policy the problem is on-policy under `target`.
struct EvaluationProblem {
  TabularMdp mdp;
  Policy target;
  std::optional<Policy> behavior;
  FeatureMap features;
};

/// Random problem for property tests: dense kernel, rewards in [0,1],
/// full-rank features scaled to max row norm <= 1, full-support behavior.
EvaluationProblem random_problem(std::uint64_t seed, std::size_t n_states, std::size_t n_actions, std::size_t d);

/// JSON instance files. Keys: gamma, kernel[a][s][s'], reward[s][a],
/// target[s][a], optional behavior[s][a], features[s][k], optional
/// "unchecked_features": true. Parse problems raise ConfigError,
/// unreadable files IoError.
EvaluationProblem load_problem(const std::string& path);
void save_problem(const EvaluationProblem& problem, const std::string& path);
std::string problem_to_json(const EvaluationProblem& problem);
EvaluationProblem problem_from_json(const std::string& text);

}  // namespace tdlab
