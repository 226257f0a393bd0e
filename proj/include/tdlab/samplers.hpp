#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "tdlab/mdp_core.hpp"
#include "tdlab/rng.hpp"

namespace tdlab {

/// One i.i.d. transition. `a` is 0 for MRP samples, which carry no action.
struct SampleTuple {
  std::size_t s = 0;
  std::size_t a = 0;
  std::size_t s_next = 0;
  double r = 0.0;
  double rho = 1.0;

  bool operator==(const SampleTuple&) const = default;
};

enum class SampleMode { kOnPolicy, kOffPolicy };

/// Inverse-CDF sampling over the rows of a row-stochastic matrix.
class CategoricalTable {
 public:
  CategoricalTable() = default;
  explicit CategoricalTable(const Mat& rows);

  /// Smallest j with u < cdf(row, j). If roundoff leaves u above the final
  /// cumulative sum, the last column with positive mass is returned.
  std::size_t draw(std::size_t row, double u) const;

 private:
  std::size_t n_cols_ = 0;
  std::vector<double> cdf_;
  std::vector<std::size_t> last_positive_;
};

class Sampler {
 public:
  virtual ~Sampler() = default;
  /// Deterministic in (stream seed, stream trial, step).
  virtual SampleTuple sample(const RngStream& rng, std::uint64_t step) const = 0;
  virtual SampleMode mode() const = 0;
};

/// s ~ mu, s' ~ P(.|s), r = r(s), rho = 1.
class OnPolicySampler final : public Sampler {
 public:
  OnPolicySampler(const InducedMrp& mrp, const Vec& mu);
  SampleTuple sample(const RngStream& rng, std::uint64_t step) const override;
  SampleMode mode() const override { return SampleMode::kOnPolicy; }

 private:
  CategoricalTable state_;
  CategoricalTable next_;
  Vec reward_;
};

/// s ~ mu_b, a ~ pi_b(.|s), s' ~ P(.|s,a), rho = pi(a|s) / pi_b(a|s).
///
/// Throws CoverageViolation on construction if the target policy puts mass
/// on an action the behavior policy never takes at a state in supp(mu_b).
class OffPolicySampler final : public Sampler {
 public:
  OffPolicySampler(const TabularMdp& mdp, const Policy& target, const Policy& behavior, const Vec& mu_b);
  SampleTuple sample(const RngStream& rng, std::uint64_t step) const override;
  SampleMode mode() const override { return SampleMode::kOffPolicy; }

 private:
  std::size_t n_actions_;
  CategoricalTable state_;
  CategoricalTable action_;
  std::vector<CategoricalTable> next_;  // per action
  Mat reward_;
  Mat rho_;
};

/// Dense per-sample matrices: A_t, b_t (rho-scaled in off-policy mode),
/// Pi_t = rho phi(s) phi(s')^T and the unweighted Sigma_t = phi(s) phi(s)^T.
struct EmpiricalTerms {
  Mat A;
  Vec b;
  Mat Pi;
  Mat Sigma;
};

EmpiricalTerms empirical_terms(const SampleTuple& sample, const FeatureMap& features, double gamma, SampleMode mode);

/// Rank-one representation of the same terms, used by the learner kernels.
/// Buffers are sized once and refilled in place.
struct SampleFeatures {
  Vec phi_s;
  Vec phi_next;
  double rho = 1.0;
  double reward = 0.0;
  double gamma = 0.0;

  void assign(const SampleTuple& sample, const FeatureMap& features, double discount, SampleMode mode);
  EmpiricalTerms dense() const;
};

/// Mean and standard error of each per-sample term over n i.i.d. draws.
struct TermMoments {
  std::uint64_t n_samples = 0;
  EmpiricalTerms mean;
  EmpiricalTerms std_error;
};

/// OpenMP kernel: draws are split into fixed blocks whose partial sums are
/// combined in block order, so the result does not depend on the thread count.
TermMoments estimate_term_moments(const Sampler& sampler, const FeatureMap& features, double gamma,
                                  std::uint64_t n_samples, std::uint64_t seed, int workers = 0);

/// Single-pass serial reference for estimate_term_moments.
TermMoments estimate_term_moments_serial(const Sampler& sampler, const FeatureMap& features, double gamma,
                                         std::uint64_t n_samples, std::uint64_t seed);

}  // namespace tdlab
