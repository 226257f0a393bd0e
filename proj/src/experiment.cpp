#include "tdlab/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "tdlab/errors.hpp"

namespace tdlab {

namespace {

constexpr double kClosedFormMuTol = 1e-10;
constexpr double kClosedFormThetaTol = 1e-9;

bool is_off_policy(Algorithm a) { return a == Algorithm::kOffPolicyTd || a == Algorithm::kTdc; }

void fill_on_policy(ResolvedProblem& out, const InducedMrp& mrp, const FeatureMap& features,
                    const StationaryGeometry& geometry, const Vec& theta_star) {
  out.mode = SampleMode::kOnPolicy;
  out.sampler = std::make_shared<OnPolicySampler>(mrp, geometry.mu);
  out.features = std::make_shared<FeatureMap>(features);
  out.gamma = mrp.gamma();
  out.theta_ref = theta_star;
  out.error_metric = geometry.Sigma;

  InstanceConstants& c = out.constants;
  c.gamma = mrp.gamma();
  c.d = features.dim();
  c.kappa = geometry.kappa;
  c.lambda_min_Sigma = geometry.lambda_min_Sigma;
  c.theta_star_sigma_norm = sigma_norm(theta_star, geometry.Sigma);
  c.theta_star_l2_norm = theta_star.norm();
  out.facts.emplace_back("lambda_min_Sigma", format_number(geometry.lambda_min_Sigma));
  out.facts.emplace_back("lambda_max_Sigma", format_number(geometry.lambda_max_Sigma));
  out.facts.emplace_back("kappa", format_number(geometry.kappa));
}

void fill_generic_on_policy(ResolvedProblem& out, const TabularMdp& mdp, const Policy& policy,
                            const FeatureMap& features) {
  const InducedMrp mrp = induce_mrp(mdp, policy);
  const StationaryGeometry geometry = build_geometry(mrp, features);
  const OnPolicyPopulation pop = on_policy_population(mrp, features, geometry);
  fill_on_policy(out, mrp, features, geometry, pop.theta_star);
}

void fill_off_policy(ResolvedProblem& out, const TabularMdp& mdp, const Policy& target, const Policy& behavior,
                     const FeatureMap& features) {
  OffPolicyPopulation pop = off_policy_population(mdp, target, behavior, features);
  out.mode = SampleMode::kOffPolicy;
  out.sampler = std::make_shared<OffPolicySampler>(mdp, target, behavior, pop.mu_b);
  out.features = std::make_shared<FeatureMap>(features);
  out.gamma = mdp.gamma();
  out.theta_ref = pop.theta_ref;
  out.error_metric = pop.Sigma_tilde;

  InstanceConstants& c = out.constants;
  c.gamma = mdp.gamma();
  c.d = features.dim();
  c.lambda1 = pop.lambda1;
  c.lambda2 = pop.lambda2;
  c.lambda_Sigma = pop.lambda_Sigma;
  c.kappa_tilde = pop.kappa_tilde;
  c.rho_max = pop.rho_max;
  c.sigma_tilde_norm = spectral_norm(pop.Sigma_tilde);
  c.theta_tilde_sigma_norm = sigma_norm(pop.theta_ref, pop.Sigma_tilde);
  c.theta_tilde_l2_norm = pop.theta_ref.norm();

  out.facts.emplace_back("theta_tilde_unique", pop.theta_unique ? "true" : "false");
  out.facts.emplace_back("error_metric",
                         pop.theta_unique ? "||theta - theta~*||_Sigma~" : "||V_theta - V*||_{D_mu_b} (min-norm theta_ref)");
  out.facts.emplace_back("rho_max", format_number(pop.rho_max));
  out.facts.emplace_back("lambda1", format_number(pop.lambda1));
  out.facts.emplace_back("lambda2", format_number(pop.lambda2));
  out.facts.emplace_back("lambda_Sigma", format_number(pop.lambda_Sigma));
  out.off_policy = std::move(pop);
}

}  // namespace

double ResolvedProblem::error(const Vec& theta) const {
  const Vec diff = theta - theta_ref;
  return std::sqrt(std::max(0.0, diff.dot(error_metric * diff)));
}

ResolvedProblem resolve_problem(const ExperimentConfig& config) {
  ResolvedProblem out;
  const bool off = is_off_policy(config.algorithm);
  std::optional<Vec> instance_theta0;

  switch (config.instance) {
    case InstanceKind::kMinimax: {
      const MinimaxInstance inst = build_minimax(config.minimax);
      if (off) {
        const TabularMdp mdp = minimax_as_mdp(inst);
        const Policy only = Policy::deterministic(mdp.n_states(), 1, 0);
        fill_off_policy(out, mdp, only, only, inst.features);
        break;
      }
      const StationaryGeometry geometry = build_geometry(inst.mrp, inst.features);
      const double mu_gap = (geometry.mu - inst.mu).cwiseAbs().maxCoeff();
      if (mu_gap > kClosedFormMuTol) {
        throw ModelError("minimax: closed-form mu disagrees with the stationary solve by " + format_number(mu_gap));
      }
      const OnPolicyPopulation pop = on_policy_population(inst.mrp, inst.features, geometry);
      const double theta_gap = (pop.theta_star - inst.theta_star).cwiseAbs().maxCoeff();
      if (theta_gap > kClosedFormThetaTol) {
        throw ModelError("minimax: closed-form theta* disagrees with the LSTD solve by " + format_number(theta_gap));
      }
      fill_on_policy(out, inst.mrp, inst.features, geometry, inst.theta_star);
      out.facts.emplace_back("theta_star_source", "closed form (LSTD cross-check gap " + format_number(theta_gap) + ")");
      out.facts.emplace_back("in_theorem_regime", inst.in_theorem_regime ? "true" : "false");
      break;
    }
    case InstanceKind::kBaird: {
      const BairdInstance inst = build_baird();
      if (off) {
        fill_off_policy(out, inst.mdp, inst.target, inst.behavior, inst.features);
      } else {
        fill_generic_on_policy(out, inst.mdp, inst.target, inst.features);
      }
      instance_theta0 = inst.theta0;
      break;
    }
    case InstanceKind::kFile: {
      const EvaluationProblem p = load_problem(config.instance_path);
      if (off) {
        fill_off_policy(out, p.mdp, p.target, p.behavior ? *p.behavior : p.target, p.features);
      } else {
        fill_generic_on_policy(out, p.mdp, p.target, p.features);
      }
      break;
    }
  }

  const auto d = static_cast<Eigen::Index>(out.features->dim());
  if (config.theta0) {
    if (config.theta0->size() != d) {
      throw ConfigError("theta0 has " + std::to_string(config.theta0->size()) + " entries, features have " +
                        std::to_string(d));
    }
    out.theta0 = *config.theta0;
  } else if (instance_theta0) {
    out.theta0 = *instance_theta0;
  } else {
    out.theta0 = Vec::Zero(d);
  }
  return out;
}

PlannedStepsizes plan_for(const ExperimentConfig& config, const ResolvedProblem& problem) {
  return plan_stepsizes(config.stepsize, problem.constants, config.T);
}

double percentile(std::vector<double> values, double p) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

std::vector<SummaryRow> summarize(const std::vector<std::uint64_t>& checkpoints,
                                  const std::vector<TrialTrace>& traces) {
  std::vector<SummaryRow> rows;
  rows.reserve(checkpoints.size());
  std::vector<double> finite;
  for (std::size_t k = 0; k < checkpoints.size(); ++k) {
    finite.clear();
    SummaryRow row;
    row.step = checkpoints[k];
    for (const auto& tr : traces) {
      const double e = tr.errors[k];
      if (std::isfinite(e)) {
        finite.push_back(e);
      } else {
        ++row.diverged;
      }
    }
    row.finite = finite.size();
    if (finite.empty()) {
      const double inf = std::numeric_limits<double>::infinity();
      row.mean = row.lo95 = row.hi95 = traces.empty() ? std::numeric_limits<double>::quiet_NaN() : inf;
    } else {
      // Summed in trial order so the result is reproducible bit for bit.
      double sum = 0.0;
      for (double e : finite) sum += e;
      row.mean = sum / static_cast<double>(finite.size());
      row.lo95 = percentile(finite, 0.025);
      row.hi95 = percentile(finite, 0.975);
    }
    rows.push_back(row);
  }
  return rows;
}

ExperimentResult run_experiment(const ExperimentConfig& config, int workers) {
  const ResolvedProblem problem = resolve_problem(config);
  ExperimentResult result;
  result.stepsizes = plan_for(config, problem);
  result.checkpoints = config.checkpoints;
  result.initial_error = problem.error(problem.theta0);
  result.traces = run_trials(problem, config.algorithm, result.stepsizes, config.checkpoints, config.seed,
                             config.n_trials, workers);
  result.summary = summarize(config.checkpoints, result.traces);

  auto& m = result.manifest;
  const PlannedStepsizes& s = result.stepsizes;
  m.emplace_back("stepsize.resolved_eta", format_number(s.eta));
  m.emplace_back("stepsize.resolved_alpha", format_number(s.alpha));
  m.emplace_back("stepsize.resolved_beta", format_number(s.beta));
  m.emplace_back("stepsize.c0", format_number(config.stepsize.c0));
  m.emplace_back("stepsize.c1", format_number(config.stepsize.c1));
  if (config.stepsize.mode != StepsizeMode::kFixed) {
    m.emplace_back("stepsize.burn_in_steps", format_number(s.burn_in_steps));
    m.emplace_back("stepsize.burn_in_satisfied", s.burn_in_satisfied ? "true" : "false");
  }
  if (config.algorithm == Algorithm::kTdc) {
    m.emplace_back("tdc.beta_over_alpha", format_number(s.beta / s.alpha));
    if (problem.off_policy && problem.off_policy->sigma_invertible) {
      const double kappa = config.stepsize.mode == StepsizeMode::kCorollary2
                               ? s.varkappa
                               : default_varkappa(*problem.off_policy, s.alpha, s.beta);
      m.emplace_back("tdc.corollary2_beta_over_alpha", format_number(corollary2_beta_over_alpha(problem.constants)));
      m.emplace_back("tdc.varkappa", format_number(kappa));
      if (kappa > 0.0 && kappa < 1.0 && s.alpha > 0.0) {
        const PsiCertificate cert = psi_contraction_certificate(*problem.off_policy, s.alpha, s.beta, kappa);
        m.emplace_back("tdc.psi_norm", format_number(cert.norm));
        m.emplace_back("tdc.psi_bound", format_number(cert.bound));
        m.emplace_back("tdc.psi_conditions_met", cert.conditions_met ? "true" : "false");
      }
    } else {
      m.emplace_back("tdc.varkappa", "undefined (Sigma~ singular)");
    }
  }
  for (std::size_t i = 0; i < s.warnings.size(); ++i) m.emplace_back("warning." + std::to_string(i), s.warnings[i]);
  for (const auto& f : problem.facts) m.emplace_back("instance." + f.first, f.second);
  m.emplace_back("theta_ref", [&] {
    std::string v;
    for (Eigen::Index i = 0; i < problem.theta_ref.size(); ++i) v += (i ? "," : "") + format_number(problem.theta_ref(i));
    return v;
  }());
  m.emplace_back("initial_error", format_number(result.initial_error));
  m.emplace_back("error_iterate", config.algorithm == Algorithm::kAveragedTd || config.algorithm == Algorithm::kOffPolicyTd
                                      ? "averaged"
                                      : "last");
  m.emplace_back("divergence_threshold", format_number(kDivergenceNorm));
  m.emplace_back("band_method", "empirical 2.5/97.5 percentiles over finite trials, linear interpolation (type 7)");
  m.emplace_back("rng", "SplitMix64 counter streams keyed by (seed, trial)");
  std::uint64_t diverged = 0;
  for (const auto& t : result.traces) diverged += t.diverged_at ? 1 : 0;
  m.emplace_back("trials_diverged", std::to_string(diverged));
  return result;
}

RateFit fit_rate(const std::vector<SummaryRow>& summary, std::uint64_t lo, std::uint64_t hi) {
  if (lo > hi) throw ConfigError("fit_rate: empty window");
  std::vector<double> xs, ys;
  for (const auto& row : summary) {
    if (row.step < lo || row.step > hi) continue;
    if (!std::isfinite(row.mean) || !(row.mean > 0.0)) continue;
    xs.push_back(std::log(static_cast<double>(row.step)));
    ys.push_back(std::log(row.mean));
  }
  if (xs.size() < 5) {
    throw ConfigError("fit_rate: need at least 5 finite checkpoints in the window, found " + std::to_string(xs.size()));
  }
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (sxx == 0.0) throw ConfigError("fit_rate: window has a single distinct step");
  RateFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r2 = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  fit.n_points = xs.size();
  return fit;
}

}  // namespace tdlab
