#include "tdlab/exact_solvers.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "tdlab/errors.hpp"

namespace tdlab {

namespace {

// D_mu-orthogonal projection of v onto col(Phi), via weighted least squares.
// Works for rank-deficient Phi as well.
Vec weighted_projection(const Mat& phi, const Vec& mu, const Vec& v) {
  const Vec sqrt_mu = mu.cwiseSqrt();
  const Mat weighted_phi = sqrt_mu.asDiagonal() * phi;
  Eigen::CompleteOrthogonalDecomposition<Mat> cod(weighted_phi);
  const Vec coeffs = cod.solve(sqrt_mu.cwiseProduct(v));
  return phi * coeffs;
}

Mat symmetrized(const Mat& M) { return 0.5 * (M + M.transpose()); }

double min_eigenvalue(const Mat& symmetric) {
  Eigen::SelfAdjointEigenSolver<Mat> eig(symmetrized(symmetric), Eigen::EigenvaluesOnly);
  return eig.eigenvalues()(0);
}

void require_dim(const Vec& theta, std::size_t d, const char* what) {
  if (static_cast<std::size_t>(theta.size()) != d) {
    throw DimensionMismatch(std::string(what) + ": expected a vector of length " + std::to_string(d));
  }
}

Eigen::LLT<Mat> sigma_factor(const OffPolicyPopulation& pop) {
  if (!pop.sigma_invertible) throw SingularSystem("Sigma~ is singular; w(theta) and Psi are undefined");
  Eigen::LLT<Mat> llt(pop.Sigma_tilde);
  if (llt.info() != Eigen::Success) throw SingularSystem("Sigma~ Cholesky factorization failed");
  return llt;
}

}  // namespace

const Vec& OffPolicyPopulation::unique_theta_star() const {
  if (!theta_unique) {
    throw NonUniqueSolution("A~ is singular: theta~* is a family; only Phi theta~* is unique");
  }
  return theta_ref;
}

OnPolicyPopulation on_policy_population(const InducedMrp& mrp, const FeatureMap& features,
                                        const StationaryGeometry& geometry) {
  if (mrp.n_states() != features.n_states() || static_cast<std::size_t>(geometry.mu.size()) != mrp.n_states()) {
    throw DimensionMismatch("on_policy_population: inconsistent |S|");
  }
  const Mat& phi = features.phi();
  const auto n = static_cast<Eigen::Index>(mrp.n_states());
  OnPolicyPopulation pop;
  pop.A = phi.transpose() * geometry.mu.asDiagonal() * (Mat::Identity(n, n) - mrp.gamma() * mrp.P()) * phi;
  pop.b = phi.transpose() * geometry.mu.cwiseProduct(mrp.r());

  Eigen::FullPivLU<Mat> lu(pop.A);
  if (!lu.isInvertible()) throw SingularSystem("A is singular");
  pop.theta_star = lu.solve(pop.b);
  return pop;
}

double projected_bellman_residual(const Vec& theta, const InducedMrp& mrp, const FeatureMap& features,
                                  const StationaryGeometry& geometry) {
  require_dim(theta, features.dim(), "projected_bellman_residual");
  const Mat& phi = features.phi();
  const Vec V = phi * theta;
  const Vec backup = mrp.r() + mrp.gamma() * (mrp.P() * V);
  return weighted_norm(V - weighted_projection(phi, geometry.mu, backup), geometry.mu);
}

OffPolicyPopulation off_policy_population(const TabularMdp& mdp, const Policy& target, const Policy& behavior,
                                          const FeatureMap& features) {
  if (target.n_states() != mdp.n_states() || behavior.n_states() != mdp.n_states() ||
      target.n_actions() != mdp.n_actions() || behavior.n_actions() != mdp.n_actions() ||
      features.n_states() != mdp.n_states()) {
    throw DimensionMismatch("off_policy_population: policy/feature shapes do not match the MDP");
  }
  const InducedMrp behavior_mrp = induce_mrp(mdp, behavior);
  const InducedMrp target_mrp = induce_mrp(mdp, target);
  const Vec mu_b = stationary_distribution(behavior_mrp.P());

  const Mat& phi = features.phi();
  const auto d = static_cast<Eigen::Index>(features.dim());
  const double gamma = mdp.gamma();

  OffPolicyPopulation pop;
  pop.A_tilde = Mat::Zero(d, d);
  pop.b_tilde = Vec::Zero(d);
  pop.Pi = Mat::Zero(d, d);
  pop.rho_max = 0.0;

  for (std::size_t s = 0; s < mdp.n_states(); ++s) {
    const auto si = static_cast<Eigen::Index>(s);
    const Vec phi_s = phi.row(si).transpose();
    for (std::size_t a = 0; a < mdp.n_actions(); ++a) {
      const double pb = behavior(s, a);
      const double pt = target(s, a);
      if (pb == 0.0) {
        if (pt > 0.0 && mu_b(si) > 0.0) {
          throw CoverageViolation("pi(" + std::to_string(a) + "|" + std::to_string(s) +
                                  ") > 0 but the behavior policy never takes it");
        }
        continue;
      }
      const double rho = pt / pb;
      pop.rho_max = std::max(pop.rho_max, rho);
      // mu_b(s) pi_b(a|s) rho = mu_b(s) pi(a|s)
      const double weight = mu_b(si) * pb * rho;
      if (weight == 0.0) continue;
      const Vec next = (mdp.kernel(a).row(si) * phi).transpose();
      pop.A_tilde.noalias() += weight * phi_s * (phi_s - gamma * next).transpose();
      pop.b_tilde += weight * mdp.reward()(si, static_cast<Eigen::Index>(a)) * phi_s;
      pop.Pi.noalias() += weight * phi_s * next.transpose();
    }
  }
  pop.Sigma_tilde = symmetrized(phi.transpose() * mu_b.asDiagonal() * phi);

  Eigen::SelfAdjointEigenSolver<Mat> sig_eig(pop.Sigma_tilde, Eigen::EigenvaluesOnly);
  const double sigma_max = sig_eig.eigenvalues()(d - 1);
  pop.lambda2 = std::max(0.0, sig_eig.eigenvalues()(0));
  pop.sigma_invertible = pop.lambda2 > 1e-12 * std::max(1.0, sigma_max);
  pop.lambda_Sigma = pop.sigma_invertible ? 1.0 / pop.lambda2 : std::numeric_limits<double>::infinity();
  pop.kappa_tilde = pop.lambda_Sigma * sigma_max;

  Eigen::FullPivLU<Mat> lu(pop.A_tilde);
  lu.setThreshold(1e-10);
  if (lu.isInvertible()) {
    pop.theta_ref = lu.solve(pop.b_tilde);
    pop.theta_unique = true;
  } else {
    Eigen::CompleteOrthogonalDecomposition<Mat> cod(pop.A_tilde);
    cod.setThreshold(1e-10);
    pop.theta_ref = cod.solve(pop.b_tilde);
    const double residual = (pop.A_tilde * pop.theta_ref - pop.b_tilde).norm();
    if (residual > 1e-9 * (1.0 + pop.b_tilde.norm())) {
      throw SingularSystem("A~ theta = b~ has no solution");
    }
    Eigen::CompleteOrthogonalDecomposition<Mat> phi_cod(phi);
    phi_cod.setThreshold(1e-10);
    if (cod.rank() != phi_cod.rank()) {
      throw SingularSystem("A~ is singular beyond the null space of Phi: value-space optimum not identified");
    }
    pop.theta_unique = false;
  }
  pop.value_star = phi * pop.theta_ref;

  if (pop.sigma_invertible) {
    Eigen::LLT<Mat> llt(pop.Sigma_tilde);
    const Mat M = pop.A_tilde.transpose() * llt.solve(pop.A_tilde);
    pop.lambda1 = min_eigenvalue(M);
  } else {
    pop.lambda1 = std::numeric_limits<double>::quiet_NaN();
  }

  pop.gamma = gamma;
  pop.mu_b = mu_b;
  pop.phi = phi;
  pop.P_target = target_mrp.P();
  pop.r_target = target_mrp.r();
  return pop;
}

double mspbe(const Vec& theta, const OffPolicyPopulation& pop) {
  require_dim(theta, pop.dim(), "mspbe");
  const Vec V = pop.phi * theta;
  const Vec backup = pop.r_target + pop.gamma * (pop.P_target * V);
  const double err = weighted_norm(V - weighted_projection(pop.phi, pop.mu_b, backup), pop.mu_b);
  return 0.5 * err * err;
}

double mspbe_quadratic_form(const Vec& theta, const OffPolicyPopulation& pop) {
  require_dim(theta, pop.dim(), "mspbe_quadratic_form");
  const auto llt = sigma_factor(pop);
  const Vec g = pop.b_tilde - pop.A_tilde * theta;
  return 0.5 * g.dot(llt.solve(g));
}

Vec auxiliary_w(const Vec& theta, const OffPolicyPopulation& pop) {
  require_dim(theta, pop.dim(), "auxiliary_w");
  const auto llt = sigma_factor(pop);
  return llt.solve(pop.b_tilde - pop.A_tilde * theta);
}

Vec mspbe_gradient(const Vec& theta, const OffPolicyPopulation& pop) {
  const Vec w = auxiliary_w(theta, pop);
  return -(pop.b_tilde - pop.A_tilde * theta) + pop.gamma * (pop.Pi.transpose() * w);
}

Mat psi_matrix(const OffPolicyPopulation& pop, double alpha, double beta, double varkappa) {
  if (alpha < 0.0 || beta < 0.0) throw std::invalid_argument("psi_matrix: stepsizes must be nonnegative");
  if (!(varkappa > 0.0 && varkappa < 1.0)) throw std::invalid_argument("psi_matrix: varkappa must lie in (0, 1)");
  const auto llt = sigma_factor(pop);
  const auto d = static_cast<Eigen::Index>(pop.dim());
  const double gamma = pop.gamma;
  const Mat I = Mat::Identity(d, d);

  // Sigma~^{-1} applied column by column.
  const Mat M = pop.A_tilde.transpose() * llt.solve(pop.A_tilde);
  const Mat X = I - gamma * llt.solve(pop.Pi);

  Mat psi(2 * d, 2 * d);
  psi.topLeftCorner(d, d) = I - alpha * M;
  psi.topRightCorner(d, d) = -(alpha * gamma / varkappa) * pop.Pi.transpose();
  psi.bottomLeftCorner(d, d) = -varkappa * alpha * X * M;
  psi.bottomRightCorner(d, d) = I - beta * pop.Sigma_tilde - alpha * gamma * X * pop.Pi.transpose();
  return psi;
}

double default_varkappa(const OffPolicyPopulation& pop, double alpha, double beta) {
  return 8.0 * pop.rho_max * std::sqrt(alpha / (pop.lambda1 * beta * pop.lambda2));
}

PsiCertificate psi_contraction_certificate(const OffPolicyPopulation& pop, double alpha, double beta,
                                           double varkappa) {
  PsiCertificate cert;
  const Mat psi = psi_matrix(pop, alpha, beta, varkappa);
  cert.norm = spectral_norm(psi);
  cert.bound = 1.0 - 0.5 * alpha * pop.lambda1;

  const double gamma = pop.gamma;
  const double rho = pop.rho_max;
  const double lam_sigma = pop.lambda_Sigma;
  const double lam2 = pop.lambda2;  // plays the role of lambda_w in the stepsize conditions

  cert.beta_vs_alpha_lhs = lam_sigma * rho * alpha;
  cert.beta_vs_alpha_rhs = beta;
  cert.kappa_beta_lhs = alpha;
  cert.kappa_beta_rhs = varkappa * beta;
  cert.coupling_lhs = alpha * gamma * (rho + gamma * lam_sigma * rho * rho);
  cert.coupling_rhs = beta * lam2;
  cert.cross_lhs = alpha * gamma * rho / varkappa +
                   varkappa * alpha * (1.0 + gamma * lam_sigma * rho) * lam_sigma * (2.0 * rho) * (2.0 * rho);
  cert.cross_rhs = std::sqrt(alpha * pop.lambda1 * beta * lam2);

  const auto llt = sigma_factor(pop);
  const Mat M = pop.A_tilde.transpose() * llt.solve(pop.A_tilde);
  cert.alpha_smallness = alpha * spectral_norm(M);
  cert.beta_smallness = beta * spectral_norm(pop.Sigma_tilde);

  const double m = kStepConditionMargin;
  cert.conditions_met = m * cert.beta_vs_alpha_lhs <= cert.beta_vs_alpha_rhs &&
                        m * cert.kappa_beta_lhs <= cert.kappa_beta_rhs &&
                        m * cert.coupling_lhs <= cert.coupling_rhs && m * cert.cross_lhs <= cert.cross_rhs &&
                        cert.alpha_smallness <= 1.0 && cert.beta_smallness <= 1.0;
  return cert;
}

void population_tdc_step(const OffPolicyPopulation& pop, double alpha, double beta, Vec& theta, Vec& w) {
  const Vec residual = pop.A_tilde * theta - pop.b_tilde;
  const Vec theta_next = theta - alpha * (residual + pop.gamma * (pop.Pi.transpose() * w));
  w -= beta * (residual + pop.Sigma_tilde * w);
  theta = theta_next;
}

}  // namespace tdlab
