#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tdlab/mdp_core.hpp"
#include "tdlab/samplers.hpp"

namespace tdlab {

/// Iterate norm beyond which a run is declared diverged.
inline constexpr double kDivergenceNorm = 1e12;

enum class StepStatus { kOk, kDiverged };

/// TD iterate with the running sum needed for Polyak-Ruppert averaging.
struct TdState {
  Vec theta;
  Vec theta_sum;
  std::uint64_t t = 0;
  double eta = 0.0;

  static TdState start(Vec theta0, double eta);
};

/// Two-timescale TDC iterate (theta, w) with constant stepsizes.
struct TdcState {
  Vec theta;
  Vec w;
  std::uint64_t t = 0;
  double alpha = 0.0;
  double beta = 0.0;

  static TdcState start(Vec theta0, double alpha, double beta);
};

bool is_diverged(const Vec& theta);

// TD: theta <- theta - eta (A_t theta - b_t); theta_sum += theta; t += 1.
// The dense overloads are the reference path; the SampleFeatures overloads
// apply the same update through the rank-one structure of A_t.
StepStatus td_step(TdState& state, const EmpiricalTerms& terms);
StepStatus td_step(TdState& state, const SampleFeatures& terms);

/// Off-policy TD: the same update driven by rho-weighted terms A~_t, b~_t.
StepStatus off_policy_td_step(TdState& state, const EmpiricalTerms& terms);
StepStatus off_policy_td_step(TdState& state, const SampleFeatures& terms);

/// (1/t) sum_{i=1..t} theta_i. Throws std::logic_error when t = 0.
Vec averaged_estimate(const TdState& state);

// TDC; both updates read the pre-step (theta, w):
//   theta <- theta - alpha (A~_t theta - b~_t + gamma Pi_t^T w)
//   w     <- w     - beta  (A~_t theta - b~_t + Sigma~_t w)
StepStatus tdc_step(TdcState& state, const EmpiricalTerms& terms, double gamma);
StepStatus tdc_step(TdcState& state, const SampleFeatures& terms);

enum class StepsizeMode { kFixed, kTheorem1, kCorollary2 };

struct StepsizePlan {
  StepsizeMode mode = StepsizeMode::kFixed;
  double eta = 0.0;    // fixed mode, TD-type algorithms
  double alpha = 0.0;  // fixed mode, TDC
  double beta = 0.0;   // fixed mode, TDC
  double c0 = 1.0;     // theorem1: eta = c0 (1 - gamma) / (kappa log(T d / delta))
  double c1 = 1.0;     // burn-in constants (theorem1 and corollary2 diagnostics)
  double delta = 0.01;
  std::optional<double> theta_norm_estimate;  // replaces ||theta~*||_Sigma~ in corollary2
};

/// Instance constants the schedules depend on. Fields that do not apply to
/// a setting are left at NaN.
struct InstanceConstants {
  double gamma = 0.0;
  std::size_t d = 0;
  // on-policy
  double kappa = 0.0;
  double lambda_min_Sigma = 0.0;
  double theta_star_sigma_norm = 0.0;
  double theta_star_l2_norm = 0.0;
  // off-policy
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double lambda_Sigma = 0.0;
  double kappa_tilde = 0.0;
  double rho_max = 1.0;
  double sigma_tilde_norm = 0.0;
  double theta_tilde_sigma_norm = 0.0;
  double theta_tilde_l2_norm = 0.0;
};

struct PlannedStepsizes {
  double eta = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double beta_over_alpha = 0.0;
  double varkappa = 0.0;       // corollary2 only
  double burn_in_steps = 0.0;  // required T from the cited burn-in inequality (may be negative)
  bool burn_in_satisfied = true;
  std::vector<std::string> warnings;
};

/// Throws ConfigError when a plan cannot produce positive stepsizes.
PlannedStepsizes plan_stepsizes(const StepsizePlan& plan, const InstanceConstants& constants, std::uint64_t T);

/// 128 rho_max^2 (1 + lambda_Sigma rho_max) / (lambda1 lambda2).
double corollary2_beta_over_alpha(const InstanceConstants& constants);

const char* to_string(StepsizeMode mode);

}  // namespace tdlab
