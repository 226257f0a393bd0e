#include "tdlab/learners.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "tdlab/errors.hpp"

namespace tdlab {

TdState TdState::start(Vec theta0, double eta) {
  TdState s;
  s.theta_sum = Vec::Zero(theta0.size());
  s.theta = std::move(theta0);
  s.eta = eta;
  return s;
}

TdcState TdcState::start(Vec theta0, double alpha, double beta) {
  TdcState s;
  s.w = Vec::Zero(theta0.size());
  s.theta = std::move(theta0);
  s.alpha = alpha;
  s.beta = beta;
  return s;
}

bool is_diverged(const Vec& theta) {
  const double sq = theta.squaredNorm();
  return !std::isfinite(sq) || sq > kDivergenceNorm * kDivergenceNorm;
}

namespace {

StepStatus finish_td(TdState& state) {
  state.theta_sum += state.theta;
  ++state.t;
  return is_diverged(state.theta) ? StepStatus::kDiverged : StepStatus::kOk;
}

}  // namespace

StepStatus td_step(TdState& state, const EmpiricalTerms& terms) {
  state.theta -= state.eta * (terms.A * state.theta - terms.b);
  return finish_td(state);
}

StepStatus td_step(TdState& state, const SampleFeatures& terms) {
  // A_t theta - b_t = -rho delta phi(s), delta = r + gamma phi(s')^T theta - phi(s)^T theta
  const double delta =
      terms.reward + terms.gamma * terms.phi_next.dot(state.theta) - terms.phi_s.dot(state.theta);
  state.theta += (state.eta * terms.rho * delta) * terms.phi_s;
  return finish_td(state);
}

StepStatus off_policy_td_step(TdState& state, const EmpiricalTerms& terms) { return td_step(state, terms); }

StepStatus off_policy_td_step(TdState& state, const SampleFeatures& terms) { return td_step(state, terms); }

Vec averaged_estimate(const TdState& state) {
  if (state.t == 0) throw std::logic_error("averaged_estimate: no iterates yet");
  return state.theta_sum / static_cast<double>(state.t);
}

StepStatus tdc_step(TdcState& state, const EmpiricalTerms& terms, double gamma) {
  const Vec residual = terms.A * state.theta - terms.b;
  const Vec theta_next = state.theta - state.alpha * (residual + gamma * (terms.Pi.transpose() * state.w));
  state.w -= state.beta * (residual + terms.Sigma * state.w);
  state.theta = theta_next;
  ++state.t;
  return is_diverged(state.theta) || is_diverged(state.w) ? StepStatus::kDiverged : StepStatus::kOk;
}

StepStatus tdc_step(TdcState& state, const SampleFeatures& terms) {
  const double delta =
      terms.reward + terms.gamma * terms.phi_next.dot(state.theta) - terms.phi_s.dot(state.theta);
  const double phi_w = terms.phi_s.dot(state.w);
  const double rho_delta = terms.rho * delta;
  state.theta += state.alpha * (rho_delta * terms.phi_s - (terms.gamma * terms.rho * phi_w) * terms.phi_next);
  state.w += state.beta * (rho_delta - phi_w) * terms.phi_s;
  ++state.t;
  return is_diverged(state.theta) || is_diverged(state.w) ? StepStatus::kDiverged : StepStatus::kOk;
}

double corollary2_beta_over_alpha(const InstanceConstants& c) {
  return 128.0 * c.rho_max * c.rho_max * (1.0 + c.lambda_Sigma * c.rho_max) / (c.lambda1 * c.lambda2);
}

const char* to_string(StepsizeMode mode) {
  switch (mode) {
    case StepsizeMode::kFixed:
      return "fixed";
    case StepsizeMode::kTheorem1:
      return "theorem1";
    case StepsizeMode::kCorollary2:
      return "corollary2";
  }
  return "unknown";
}

namespace {

PlannedStepsizes plan_theorem1(const StepsizePlan& plan, const InstanceConstants& c, std::uint64_t T) {
  const double n_steps = static_cast<double>(T);
  const double log_term = std::log(n_steps * static_cast<double>(c.d) / plan.delta);
  if (!(log_term > 0.0)) throw ConfigError("theorem1 stepsize: log(T d / delta) must be positive");
  if (!(c.kappa >= 1.0) || !(c.lambda_min_Sigma > 0.0)) {
    throw ConfigError("theorem1 stepsize needs kappa >= 1 and lambda_min(Sigma) > 0");
  }
  PlannedStepsizes out;
  const double one_minus_gamma = 1.0 - c.gamma;
  out.eta = plan.c0 * one_minus_gamma / (c.kappa * log_term);

  const double theta_factor = c.theta_star_sigma_norm + 1.0;
  const double inner = c.kappa * static_cast<double>(c.d) * n_steps * (c.theta_star_l2_norm + 1.0) /
                       (one_minus_gamma * plan.delta);
  const double log_inner = std::log(inner);
  out.burn_in_steps = plan.c1 * c.kappa * theta_factor * theta_factor * log_inner * log_inner /
                      (out.eta * one_minus_gamma * c.lambda_min_Sigma);
  out.burn_in_satisfied = n_steps >= out.burn_in_steps;
  if (!out.burn_in_satisfied) {
    std::ostringstream msg;
    msg << "T = " << T << " is below the theorem1 burn-in requirement " << out.burn_in_steps;
    out.warnings.push_back(msg.str());
  }
  return out;
}

PlannedStepsizes plan_corollary2(const StepsizePlan& plan, const InstanceConstants& c, std::uint64_t T) {
  if (!(c.lambda1 > 0.0) || !(c.lambda2 > 0.0)) {
    throw ConfigError("corollary2 stepsize needs lambda1 > 0 and lambda2 > 0 (Sigma~ must be invertible)");
  }
  const double norm = plan.theta_norm_estimate.value_or(c.theta_tilde_sigma_norm);
  if (!(norm > 1.0)) {
    throw ConfigError("corollary2 stepsize: alpha = log||theta~*||/(T lambda1) is not positive for ||theta~*|| = " +
                      std::to_string(norm) + "; supply stepsize.theta_norm_estimate > 1 or use fixed stepsizes");
  }
  const double n_steps = static_cast<double>(T);
  PlannedStepsizes out;
  out.alpha = std::log(norm) / (n_steps * c.lambda1);
  out.beta_over_alpha = corollary2_beta_over_alpha(c);
  out.beta = out.beta_over_alpha * out.alpha;
  out.varkappa = 8.0 * c.rho_max * std::sqrt(out.alpha / (c.lambda1 * out.beta * c.lambda2));

  const double log_2dt = std::log(2.0 * static_cast<double>(c.d) * n_steps / plan.delta);
  const double alpha_cap = 1.0 / (c.lambda1 * c.lambda_Sigma * c.lambda_Sigma * c.sigma_tilde_norm * log_2dt);
  if (!(out.alpha < alpha_cap)) {
    std::ostringstream msg;
    msg << "alpha = " << out.alpha << " violates alpha < " << alpha_cap;
    out.warnings.push_back(msg.str());
  }
  // Burn-in inequality reported as written; log||theta~*||_2 may be negative.
  const double l2 = plan.theta_norm_estimate.value_or(c.theta_tilde_l2_norm);
  const double inner = std::max(std::sqrt(c.kappa_tilde), norm * std::sqrt(out.alpha * c.lambda1 / log_2dt));
  out.burn_in_steps = plan.c1 * std::log(l2) / (out.alpha * c.lambda1) * std::log(inner);
  out.burn_in_satisfied = n_steps >= out.burn_in_steps;
  if (!out.burn_in_satisfied) {
    std::ostringstream msg;
    msg << "T = " << T << " is below the corollary2 burn-in requirement " << out.burn_in_steps;
    out.warnings.push_back(msg.str());
  }
  return out;
}

}  // namespace

PlannedStepsizes plan_stepsizes(const StepsizePlan& plan, const InstanceConstants& constants, std::uint64_t T) {
  if (T == 0) throw ConfigError("plan_stepsizes: T must be at least 1");
  switch (plan.mode) {
    case StepsizeMode::kFixed: {
      if (plan.eta < 0.0 || plan.alpha < 0.0 || plan.beta < 0.0) {
        throw ConfigError("fixed stepsizes must be nonnegative");
      }
      PlannedStepsizes out;
      out.eta = plan.eta;
      out.alpha = plan.alpha;
      out.beta = plan.beta;
      out.beta_over_alpha = plan.alpha > 0.0 ? plan.beta / plan.alpha : std::numeric_limits<double>::quiet_NaN();
      return out;
    }
    case StepsizeMode::kTheorem1:
      return plan_theorem1(plan, constants, T);
    case StepsizeMode::kCorollary2:
      return plan_corollary2(plan, constants, T);
  }
  throw ConfigError("unknown stepsize mode");
}

}  // namespace tdlab
