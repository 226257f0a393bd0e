// OpenMP kernels against their serial references, plus the dense vs rank-one
// learner step.

#include <benchmark/benchmark.h>

#include "tdlab/config.hpp"
#include "tdlab/experiment.hpp"
#include "tdlab/instances.hpp"
#include "tdlab/learners.hpp"
#include "tdlab/samplers.hpp"

namespace {

using namespace tdlab;

struct TrialSetup {
  ExperimentConfig config;
  ResolvedProblem problem;
  PlannedStepsizes stepsizes;

  explicit TrialSetup(const std::string& preset) : config(preset_config(preset)) {
    config.T = 20000;
    config.n_trials = 16;
    config.checkpoints = log_checkpoints(config.T, 20);
    problem = resolve_problem(config);
    stepsizes = plan_for(config, problem);
  }
};

void BM_TrialsSerial(benchmark::State& state, const char* preset) {
  const TrialSetup s(preset);
  for (auto _ : state) {
    auto traces = run_trials_serial(s.problem, s.config.algorithm, s.stepsizes, s.config.checkpoints, s.config.seed,
                                    s.config.n_trials);
    benchmark::DoNotOptimize(traces);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(s.config.n_trials * s.config.T));
}

void BM_TrialsParallel(benchmark::State& state, const char* preset) {
  const TrialSetup s(preset);
  const int workers = static_cast<int>(state.range(0));
  for (auto _ : state) {
    auto traces = run_trials(s.problem, s.config.algorithm, s.stepsizes, s.config.checkpoints, s.config.seed,
                             s.config.n_trials, workers);
    benchmark::DoNotOptimize(traces);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(s.config.n_trials * s.config.T));
}

BENCHMARK_CAPTURE(BM_TrialsSerial, minimax, "minimax-fig1")->UseRealTime()->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_TrialsParallel, minimax, "minimax-fig1")
    ->Arg(1)
    ->Arg(2)
    ->Arg(4)
    ->UseRealTime()
    ->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_TrialsSerial, baird, "baird-fig3")->UseRealTime()->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_TrialsParallel, baird, "baird-fig3")
    ->Arg(1)
    ->Arg(2)
    ->Arg(4)
    ->UseRealTime()
    ->Unit(benchmark::kMillisecond);

struct MomentSetup {
  BairdInstance baird = build_baird();
  OffPolicySampler sampler{baird.mdp, baird.target, baird.behavior, baird.mu_b};
};

void BM_MomentsSerial(benchmark::State& state) {
  const MomentSetup s;
  for (auto _ : state) {
    benchmark::DoNotOptimize(estimate_term_moments_serial(s.sampler, s.baird.features, 0.9, 200000, 1));
  }
}

void BM_MomentsParallel(benchmark::State& state) {
  const MomentSetup s;
  const int workers = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(estimate_term_moments(s.sampler, s.baird.features, 0.9, 200000, 1, workers));
  }
}

BENCHMARK(BM_MomentsSerial)->UseRealTime()->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MomentsParallel)->Arg(1)->Arg(2)->Arg(4)->UseRealTime()->Unit(benchmark::kMillisecond);

void BM_TdcStepDense(benchmark::State& state) {
  const BairdInstance b = build_baird();
  const EmpiricalTerms e = empirical_terms(SampleTuple{0, 1, 6, 0.0, 7.0}, b.features, 0.9, SampleMode::kOffPolicy);
  TdcState x = TdcState::start(b.theta0, 1e-6, 1e-6);
  for (auto _ : state) benchmark::DoNotOptimize(tdc_step(x, e, 0.9));
}

void BM_TdcStepRankOne(benchmark::State& state) {
  const BairdInstance b = build_baird();
  SampleFeatures f;
  f.assign(SampleTuple{0, 1, 6, 0.0, 7.0}, b.features, 0.9, SampleMode::kOffPolicy);
  TdcState x = TdcState::start(b.theta0, 1e-6, 1e-6);
  for (auto _ : state) benchmark::DoNotOptimize(tdc_step(x, f));
}

BENCHMARK(BM_TdcStepDense);
BENCHMARK(BM_TdcStepRankOne);

}  // namespace

BENCHMARK_MAIN();
