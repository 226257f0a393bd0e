#pragma once

// Independent reference computations used by the test suites. Everything here
// is written with plain index loops so that it shares no assembly code with
// the library.

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "tdlab/exact_solvers.hpp"
#include "tdlab/instances.hpp"
#include "tdlab/mdp_core.hpp"
#include "tdlab/samplers.hpp"

namespace oracle {

using tdlab::Mat;
using tdlab::Vec;

inline Mat induced_P(const tdlab::TabularMdp& mdp, const tdlab::Policy& pi) {
  const auto n = static_cast<Eigen::Index>(mdp.n_states());
  Mat P = Mat::Zero(n, n);
  for (std::size_t s = 0; s < mdp.n_states(); ++s)
    for (std::size_t a = 0; a < mdp.n_actions(); ++a)
      for (std::size_t t = 0; t < mdp.n_states(); ++t)
        P(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(t)) += pi(s, a) * mdp.transition(s, a, t);
  return P;
}

inline Vec induced_r(const tdlab::TabularMdp& mdp, const tdlab::Policy& pi) {
  Vec r = Vec::Zero(static_cast<Eigen::Index>(mdp.n_states()));
  for (std::size_t s = 0; s < mdp.n_states(); ++s)
    for (std::size_t a = 0; a < mdp.n_actions(); ++a)
      r(static_cast<Eigen::Index>(s)) += pi(s, a) * mdp.reward()(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(a));
  return r;
}

// Lazy power iteration mu <- (mu + mu P) / 2, which also converges on periodic chains.
inline Vec power_stationary(const Mat& P, double tol = 1e-12, int max_sweeps = 1000000) {
  const auto n = P.rows();
  Vec mu = Vec::Constant(n, 1.0 / static_cast<double>(n));
  for (int it = 0; it < max_sweeps; ++it) {
    Vec next = Vec::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) next(j) += mu(i) * P(i, j);
    next = 0.5 * (next + mu);
    const double diff = (next - mu).cwiseAbs().sum();
    mu = next;
    if (diff < tol) break;
  }
  return mu / mu.sum();
}

inline Vec neumann_value(const Mat& P, const Vec& r, double gamma, int terms) {
  Vec term = r;
  Vec V = r;
  for (int t = 1; t <= terms; ++t) {
    term = gamma * (P * term);
    V += term;
  }
  return V;
}

// sqrt(v^T Sigma v) through ||Sigma^{1/2} v|| with Sigma^{1/2} from an eigendecomposition.
inline double eig_sigma_norm(const Vec& v, const Mat& Sigma) {
  Eigen::SelfAdjointEigenSolver<Mat> eig(Sigma);
  const Vec root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  const Mat half = eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().transpose();
  return (half * v).norm();
}

struct OnPolicyTerms {
  Mat A;
  Vec b;
  Mat Sigma;
};

inline OnPolicyTerms on_policy_loops(const Mat& P, const Vec& r, double gamma, const Mat& phi, const Vec& mu) {
  const auto n = phi.rows();
  const auto d = phi.cols();
  OnPolicyTerms out{Mat::Zero(d, d), Vec::Zero(d), Mat::Zero(d, d)};
  for (Eigen::Index s = 0; s < n; ++s) {
    for (Eigen::Index t = 0; t < n; ++t) {
      const double w = mu(s) * P(s, t);
      for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j) out.A(i, j) += w * phi(s, i) * (phi(s, j) - gamma * phi(t, j));
    }
    for (Eigen::Index i = 0; i < d; ++i) {
      out.b(i) += mu(s) * r(s) * phi(s, i);
      for (Eigen::Index j = 0; j < d; ++j) out.Sigma(i, j) += mu(s) * phi(s, i) * phi(s, j);
    }
  }
  return out;
}

struct OffPolicyTerms {
  Mat A;
  Vec b;
  Mat Pi;
  Mat Sigma;
};

// Expectations over s ~ mu_b, a ~ pi_b, s' ~ P(.|s,a) with rho = pi / pi_b.
inline OffPolicyTerms off_policy_loops(const tdlab::TabularMdp& mdp, const tdlab::Policy& target,
                                       const tdlab::Policy& behavior, const Mat& phi, const Vec& mu_b) {
  const auto d = phi.cols();
  const double gamma = mdp.gamma();
  OffPolicyTerms out{Mat::Zero(d, d), Vec::Zero(d), Mat::Zero(d, d), Mat::Zero(d, d)};
  for (std::size_t s = 0; s < mdp.n_states(); ++s) {
    const auto si = static_cast<Eigen::Index>(s);
    for (Eigen::Index i = 0; i < d; ++i)
      for (Eigen::Index j = 0; j < d; ++j) out.Sigma(i, j) += mu_b(si) * phi(si, i) * phi(si, j);
    for (std::size_t a = 0; a < mdp.n_actions(); ++a) {
      if (behavior(s, a) == 0.0) continue;
      const double rho = target(s, a) / behavior(s, a);
      const double r = mdp.reward()(si, static_cast<Eigen::Index>(a));
      for (std::size_t t = 0; t < mdp.n_states(); ++t) {
        const auto ti = static_cast<Eigen::Index>(t);
        const double w = mu_b(si) * behavior(s, a) * mdp.transition(s, a, t) * rho;
        for (Eigen::Index i = 0; i < d; ++i) {
          out.b(i) += w * r * phi(si, i);
          for (Eigen::Index j = 0; j < d; ++j) {
            out.A(i, j) += w * phi(si, i) * (phi(si, j) - gamma * phi(ti, j));
            out.Pi(i, j) += w * phi(si, i) * phi(ti, j);
          }
        }
      }
    }
  }
  return out;
}

inline Vec central_difference(const std::function<double(const Vec&)>& f, const Vec& x, double h) {
  Vec g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Vec xp = x, xm = x;
    xp(i) += h;
    xm(i) -= h;
    g(i) = (f(xp) - f(xm)) / (2.0 * h);
  }
  return g;
}

// theta_{i+1} = theta_i - eta (A_i theta_i - b_i) written with std::vector and loops.
inline std::vector<std::vector<double>> td_reference(std::vector<double> theta, double eta,
                                                     const std::vector<tdlab::EmpiricalTerms>& samples) {
  const std::size_t d = theta.size();
  std::vector<std::vector<double>> history;
  for (const auto& s : samples) {
    std::vector<double> next(d);
    for (std::size_t i = 0; i < d; ++i) {
      double g = -s.b(static_cast<Eigen::Index>(i));
      for (std::size_t j = 0; j < d; ++j) g += s.A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * theta[j];
      next[i] = theta[i] - eta * g;
    }
    theta = next;
    history.push_back(theta);
  }
  return history;
}

struct TdcPair {
  std::vector<double> theta;
  std::vector<double> w;
};

// Simultaneous TDC update, loops only. With `sequential` the w-update reads the
// already-updated theta, which is the variant the library must not implement.
inline TdcPair tdc_reference(TdcPair x, double alpha, double beta, double gamma,
                             const std::vector<tdlab::EmpiricalTerms>& samples, bool sequential = false) {
  const std::size_t d = x.theta.size();
  for (const auto& s : samples) {
    auto at = [&](const Mat& M, std::size_t i, std::size_t j) {
      return M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    };
    std::vector<double> theta_new(d), w_new(d);
    for (std::size_t i = 0; i < d; ++i) {
      double g = -s.b(static_cast<Eigen::Index>(i));
      for (std::size_t j = 0; j < d; ++j) g += at(s.A, i, j) * x.theta[j] + gamma * at(s.Pi, j, i) * x.w[j];
      theta_new[i] = x.theta[i] - alpha * g;
    }
    const std::vector<double>& theta_for_w = sequential ? theta_new : x.theta;
    for (std::size_t i = 0; i < d; ++i) {
      double h = -s.b(static_cast<Eigen::Index>(i));
      for (std::size_t j = 0; j < d; ++j) h += at(s.A, i, j) * theta_for_w[j] + at(s.Sigma, i, j) * x.w[j];
      w_new[i] = x.w[i] - beta * h;
    }
    x.theta = theta_new;
    x.w = w_new;
  }
  return x;
}

inline std::vector<double> to_std(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

inline double max_abs_diff(const std::vector<double>& a, const Vec& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b(static_cast<Eigen::Index>(i))));
  return m;
}

// The random instance family used by the property suites: 3..30 states, d <= |S|.
inline tdlab::EvaluationProblem random_instance(int index) {
  const std::size_t n = 3 + static_cast<std::size_t>(index * 7) % 28;
  const std::size_t d = 1 + static_cast<std::size_t>(index * 5) % n;
  const std::size_t m = 2 + static_cast<std::size_t>(index) % 2;
  return tdlab::random_problem(1000 + static_cast<std::uint64_t>(index), n, m, d);
}

}  // namespace oracle

namespace oracle {

struct CertifiedPair {
  bool feasible = false;
  double alpha = 0.0;
  double beta = 0.0;
  double varkappa = 0.0;
};

// Stepsizes that satisfy every stepsize condition of the Psi certificate with the
// default varkappa = 8 rho sqrt(alpha / (lambda1 beta lambda2)). Writing
// r = beta / alpha and u^2 = r lambda1 lambda2, the cross condition becomes
// u^2 (1 - 1.25 gamma) >= 80 rho C, so a solution exists only for gamma < 0.8.
inline CertifiedPair certified_pair(const tdlab::OffPolicyPopulation& pop) {
  CertifiedPair out;
  const double g = pop.gamma;
  if (!pop.sigma_invertible || g >= 0.8) return out;
  const double rho = pop.rho_max;
  const double ls = pop.lambda_Sigma;
  const double l1 = pop.lambda1;
  const double l2 = pop.lambda2;
  const double C = (1.0 + g * ls * rho) * ls * 4.0 * rho * rho;
  double r = 10.0 * ls * rho;
  r = std::max(r, (10.0 / (8.0 * rho)) * (10.0 / (8.0 * rho)) * l1 * l2);
  r = std::max(r, 10.0 * g * (rho + g * ls * rho * rho) / l2);
  r = std::max(r, 80.0 * rho * C / ((1.0 - 1.25 * g) * l1 * l2));
  r = std::max(r, 64.0 * rho * rho / (l1 * l2));
  r *= 1.01;
  Eigen::LLT<Mat> llt(pop.Sigma_tilde);
  const Mat M = pop.A_tilde.transpose() * llt.solve(pop.A_tilde);
  const double sig = tdlab::spectral_norm(pop.Sigma_tilde);
  out.alpha = 0.99 * std::min(1.0 / (r * sig), 1.0 / tdlab::spectral_norm(M));
  out.beta = r * out.alpha;
  out.varkappa = tdlab::default_varkappa(pop, out.alpha, out.beta);
  out.feasible = true;
  return out;
}

}  // namespace oracle
