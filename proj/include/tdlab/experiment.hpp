#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tdlab/config.hpp"
#include "tdlab/exact_solvers.hpp"
#include "tdlab/learners.hpp"
#include "tdlab/samplers.hpp"

namespace tdlab {

/// Everything a trial needs, built once and shared read-only by all workers.
struct ResolvedProblem {
  SampleMode mode = SampleMode::kOnPolicy;
  std::shared_ptr<const Sampler> sampler;
  std::shared_ptr<const FeatureMap> features;
  double gamma = 0.0;

  // error(theta) = sqrt((theta - theta_ref)^T G (theta - theta_ref)).
  // On-policy G = Sigma; off-policy G = Phi^T D_mu_b Phi = Sigma~, which turns
  // the error into ||V_theta - V_ref||_{D_mu_b} when theta~* is not unique.
  Vec theta_ref;
  Mat error_metric;
  Vec theta0;

  InstanceConstants constants;
  std::optional<OffPolicyPopulation> off_policy;
  std::vector<std::pair<std::string, std::string>> facts;  // echoed to the manifest

  double error(const Vec& theta) const;
};

/// Builds the instance, its exact solution and the sampler. For the minimax
/// family the closed-form mu and theta* are checked against the generic
/// solvers first (ModelError on disagreement).
ResolvedProblem resolve_problem(const ExperimentConfig& config);

struct TrialTrace {
  std::uint64_t trial = 0;
  std::vector<double> errors;  // one per checkpoint, +inf after divergence
  std::optional<std::uint64_t> diverged_at;
};

struct SummaryRow {
  std::uint64_t step = 0;
  double mean = 0.0;  // over finite trials; +inf when every trial diverged
  double lo95 = 0.0;  // empirical 2.5 / 97.5 percentiles, type-7 interpolation
  double hi95 = 0.0;
  std::uint64_t diverged = 0;
  std::uint64_t finite = 0;
};

struct ExperimentResult {
  PlannedStepsizes stepsizes;
  double initial_error = 0.0;
  std::vector<std::uint64_t> checkpoints;
  std::vector<TrialTrace> traces;
  std::vector<SummaryRow> summary;
  std::vector<std::pair<std::string, std::string>> manifest;
};

/// One independent trial driven by RngStream(seed, trial).
TrialTrace run_trial(const ResolvedProblem& problem, Algorithm algorithm, const PlannedStepsizes& stepsizes,
                     const std::vector<std::uint64_t>& checkpoints, std::uint64_t seed, std::uint64_t trial);

/// OpenMP trial pool; workers <= 0 means the OpenMP default. Traces are
/// stored by trial index, so the result does not depend on `workers`.
std::vector<TrialTrace> run_trials(const ResolvedProblem& problem, Algorithm algorithm,
                                   const PlannedStepsizes& stepsizes, const std::vector<std::uint64_t>& checkpoints,
                                   std::uint64_t seed, std::uint64_t n_trials, int workers = 0);

/// Serial reference for run_trials.
std::vector<TrialTrace> run_trials_serial(const ResolvedProblem& problem, Algorithm algorithm,
                                          const PlannedStepsizes& stepsizes,
                                          const std::vector<std::uint64_t>& checkpoints, std::uint64_t seed,
                                          std::uint64_t n_trials);

std::vector<SummaryRow> summarize(const std::vector<std::uint64_t>& checkpoints, const std::vector<TrialTrace>& traces);

/// Type-7 (linear interpolation) empirical quantile of unsorted values.
double percentile(std::vector<double> values, double p);

PlannedStepsizes plan_for(const ExperimentConfig& config, const ResolvedProblem& problem);

ExperimentResult run_experiment(const ExperimentConfig& config, int workers = 0);

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  std::size_t n_points = 0;
};

/// Least squares of log(mean) on log(step) over checkpoints in [lo, hi].
/// Rows whose mean is not finite and positive are dropped; fewer than five
/// remaining rows raise ConfigError.
RateFit fit_rate(const std::vector<SummaryRow>& summary, std::uint64_t lo, std::uint64_t hi);

// Output files, all prefixed by `prefix`:
//   _trace.csv       trial,step,error,diverged
//   _summary.csv     step,mean,lo95,hi95
//   _divergence.csv  step,diverged,finite
//   _manifest.txt    resolved config, derived stepsizes and constants
// Filesystem failures raise IoError carrying the OS message.
void emit(const ExperimentResult& result, const ExperimentConfig& config, const std::string& prefix);

std::string trace_csv(const ExperimentResult& result);
std::string summary_csv(const std::vector<SummaryRow>& summary);
std::string divergence_csv(const std::vector<SummaryRow>& summary);
std::string manifest_text(const ExperimentResult& result, const ExperimentConfig& config);

/// Reads a summary CSV back (diverged/finite counts are left at zero).
std::vector<SummaryRow> parse_summary_csv(const std::string& text);
std::vector<SummaryRow> load_summary_csv(const std::string& path);

/// %.17g, the number format used by every emitted file.
std::string format_number(double x);

}  // namespace tdlab
