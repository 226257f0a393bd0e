#pragma once

#include "tdlab/mdp_core.hpp"

namespace tdlab {

/// A = Phi^T D_mu (I - gamma P) Phi, b = Phi^T D_mu r, theta* = A^{-1} b.
struct OnPolicyPopulation {
  Mat A;
  Vec b;
  Vec theta_star;
};

/// Population quantities of off-policy evaluation under behavior samples.
///
/// All expectations are taken with s ~ mu_b, a ~ pi_b(.|s), s' ~ P(.|s,a) and
/// the importance ratio rho = pi(a|s) / pi_b(a|s). When A~ is singular (e.g.
/// Baird's overcomplete features) theta~* is only an affine family;
/// `theta_ref` is then the minimum-norm member and `value_star = Phi theta_ref`
/// is the unique value-space optimum.
struct OffPolicyPopulation {
  Mat A_tilde;
  Vec b_tilde;
  Mat Pi;
  Mat Sigma_tilde;

  Vec theta_ref;
  Vec value_star;
  bool theta_unique = false;
  bool sigma_invertible = false;

  double lambda1 = 0.0;       // lambda_min(A~^T Sigma~^{-1} A~); NaN when Sigma~ is singular
  double lambda2 = 0.0;       // lambda_min(Sigma~)
  double lambda_Sigma = 0.0;  // 1 / lambda2
  double kappa_tilde = 0.0;   // lambda_Sigma * ||Sigma~||
  double rho_max = 1.0;

  // Data needed by the definition form of the MSPBE.
  double gamma = 0.0;
  Vec mu_b;
  Mat phi;
  Mat P_target;
  Vec r_target;

  std::size_t dim() const { return static_cast<std::size_t>(A_tilde.rows()); }

  /// Throws NonUniqueSolution when A~ is singular.
  const Vec& unique_theta_star() const;
};

OnPolicyPopulation on_policy_population(const InducedMrp& mrp, const FeatureMap& features,
                                        const StationaryGeometry& geometry);

/// ||Phi theta - Pi_D (r + gamma P Phi theta)||_{D_mu}, Pi_D the D_mu-orthogonal
/// projection onto col(Phi).
double projected_bellman_residual(const Vec& theta, const InducedMrp& mrp, const FeatureMap& features,
                                  const StationaryGeometry& geometry);

/// Throws CoverageViolation if pi(a|s) > 0 = pi_b(a|s) at a state with mu_b(s) > 0,
/// SingularSystem if theta~* is not identified even in value space.
OffPolicyPopulation off_policy_population(const TabularMdp& mdp, const Policy& target, const Policy& behavior,
                                          const FeatureMap& features);

/// MSPBE(theta) = 1/2 ||V_theta - Pi T V_theta||^2_{D_mu_b}, computed from the definition.
double mspbe(const Vec& theta, const OffPolicyPopulation& pop);

/// Same quantity through 1/2 g^T Sigma~^{-1} g with g = b~ - A~ theta.
double mspbe_quadratic_form(const Vec& theta, const OffPolicyPopulation& pop);

/// -(b~ - A~ theta) + gamma Pi^T w(theta).
Vec mspbe_gradient(const Vec& theta, const OffPolicyPopulation& pop);

/// w(theta) = Sigma~^{-1} (b~ - A~ theta).
Vec auxiliary_w(const Vec& theta, const OffPolicyPopulation& pop);

/// 2d x 2d map x_t = Psi x_{t-1} of the population TDC error dynamics in
/// x = (theta - theta~*, varkappa (w + Sigma~^{-1} A~ (theta - theta~*))).
Mat psi_matrix(const OffPolicyPopulation& pop, double alpha, double beta, double varkappa);

struct PsiCertificate {
  double norm = 0.0;   // ||Psi||_2
  double bound = 0.0;  // 1 - alpha lambda1 / 2
  bool conditions_met = false;

  // Left/right-hand sides of each stepsize condition, before the 10x margin.
  double beta_vs_alpha_lhs = 0.0, beta_vs_alpha_rhs = 0.0;      // lambda_Sigma rho_max alpha  <~ beta
  double kappa_beta_lhs = 0.0, kappa_beta_rhs = 0.0;            // alpha <~ varkappa beta
  double coupling_lhs = 0.0, coupling_rhs = 0.0;                // alpha gamma (rho + gamma lambda_Sigma rho^2) << beta lambda2
  double cross_lhs = 0.0, cross_rhs = 0.0;                      // off-diagonal blocks << sqrt(alpha lambda1 beta lambda2)
  double alpha_smallness = 0.0;                                 // alpha ||A~^T Sigma~^{-1} A~|| <= 1
  double beta_smallness = 0.0;                                  // beta ||Sigma~|| <= 1
};

inline constexpr double kStepConditionMargin = 10.0;

PsiCertificate psi_contraction_certificate(const OffPolicyPopulation& pop, double alpha, double beta,
                                           double varkappa);

/// varkappa = 8 rho_max sqrt(alpha / (lambda1 beta lambda2)).
double default_varkappa(const OffPolicyPopulation& pop, double alpha, double beta);

/// One step of the noise-free TDC recursion with population matrices.
void population_tdc_step(const OffPolicyPopulation& pop, double alpha, double beta, Vec& theta, Vec& w);

}  // namespace tdlab
