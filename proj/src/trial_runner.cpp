#include <cstdint>
#include <limits>

#include <omp.h>

#include "tdlab/experiment.hpp"

namespace tdlab {

namespace {

void mark_diverged(TrialTrace& trace, std::size_t from, std::uint64_t step) {
  trace.diverged_at = step;
  for (std::size_t k = from; k < trace.errors.size(); ++k) trace.errors[k] = std::numeric_limits<double>::infinity();
}

TrialTrace run_td(const ResolvedProblem& problem, bool averaged, double eta,
                  const std::vector<std::uint64_t>& checkpoints, const RngStream& rng, TrialTrace trace) {
  TdState state = TdState::start(problem.theta0, eta);
  SampleFeatures f;
  std::size_t next = 0;
  const std::uint64_t T = checkpoints.empty() ? 0 : checkpoints.back();
  for (std::uint64_t t = 1; t <= T; ++t) {
    f.assign(problem.sampler->sample(rng, t - 1), *problem.features, problem.gamma, problem.mode);
    if (td_step(state, f) == StepStatus::kDiverged) {
      mark_diverged(trace, next, t);
      return trace;
    }
    if (t == checkpoints[next]) {
      trace.errors[next] = problem.error(averaged ? averaged_estimate(state) : state.theta);
      ++next;
    }
  }
  return trace;
}

TrialTrace run_tdc(const ResolvedProblem& problem, double alpha, double beta,
                   const std::vector<std::uint64_t>& checkpoints, const RngStream& rng, TrialTrace trace) {
  TdcState state = TdcState::start(problem.theta0, alpha, beta);
  SampleFeatures f;
  std::size_t next = 0;
  const std::uint64_t T = checkpoints.empty() ? 0 : checkpoints.back();
  for (std::uint64_t t = 1; t <= T; ++t) {
    f.assign(problem.sampler->sample(rng, t - 1), *problem.features, problem.gamma, problem.mode);
    if (tdc_step(state, f) == StepStatus::kDiverged) {
      mark_diverged(trace, next, t);
      return trace;
    }
    if (t == checkpoints[next]) {
      trace.errors[next] = problem.error(state.theta);
      ++next;
    }
  }
  return trace;
}

}  // namespace

TrialTrace run_trial(const ResolvedProblem& problem, Algorithm algorithm, const PlannedStepsizes& stepsizes,
                     const std::vector<std::uint64_t>& checkpoints, std::uint64_t seed, std::uint64_t trial) {
  TrialTrace trace;
  trace.trial = trial;
  trace.errors.assign(checkpoints.size(), std::numeric_limits<double>::quiet_NaN());
  const RngStream rng(seed, trial);
  switch (algorithm) {
    case Algorithm::kTd:
      return run_td(problem, false, stepsizes.eta, checkpoints, rng, std::move(trace));
    case Algorithm::kAveragedTd:
    case Algorithm::kOffPolicyTd:
      return run_td(problem, true, stepsizes.eta, checkpoints, rng, std::move(trace));
    case Algorithm::kTdc:
      return run_tdc(problem, stepsizes.alpha, stepsizes.beta, checkpoints, rng, std::move(trace));
  }
  return trace;
}

std::vector<TrialTrace> run_trials(const ResolvedProblem& problem, Algorithm algorithm,
                                   const PlannedStepsizes& stepsizes, const std::vector<std::uint64_t>& checkpoints,
                                   std::uint64_t seed, std::uint64_t n_trials, int workers) {
  std::vector<TrialTrace> traces(n_trials);
  const int threads = workers > 0 ? workers : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic) num_threads(threads)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(n_trials); ++i) {
    const auto trial = static_cast<std::uint64_t>(i);
    traces[trial] = run_trial(problem, algorithm, stepsizes, checkpoints, seed, trial);
  }
  return traces;
}

std::vector<TrialTrace> run_trials_serial(const ResolvedProblem& problem, Algorithm algorithm,
                                          const PlannedStepsizes& stepsizes,
                                          const std::vector<std::uint64_t>& checkpoints, std::uint64_t seed,
                                          std::uint64_t n_trials) {
  std::vector<TrialTrace> traces;
  traces.reserve(n_trials);
  for (std::uint64_t trial = 0; trial < n_trials; ++trial) {
    traces.push_back(run_trial(problem, algorithm, stepsizes, checkpoints, seed, trial));
  }
  return traces;
}

}  // namespace tdlab
