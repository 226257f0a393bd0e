#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace tdlab {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline constexpr double kStochasticTol = 1e-12;
inline constexpr double kStationaryTol = 1e-10;

/// Finite discounted MDP with dense kernel P(s'|s,a), rewards r(s,a) in [0,1].
///
/// Validated on construction; immutable afterwards so it can be shared
/// read-only between trial workers.
class TabularMdp {
 public:
  /// kernel[a](s, s') = P(s'|s,a); reward(s, a).
  TabularMdp(std::vector<Mat> kernel, Mat reward, double gamma);

  std::size_t n_states() const { return static_cast<std::size_t>(reward_.rows()); }
  std::size_t n_actions() const { return kernel_.size(); }
  double gamma() const { return gamma_; }

  const Mat& kernel(std::size_t action) const { return kernel_[action]; }
  double transition(std::size_t s, std::size_t a, std::size_t s_next) const {
    return kernel_[a](static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(s_next));
  }
  const Mat& reward() const { return reward_; }

 private:
  std::vector<Mat> kernel_;
  Mat reward_;
  double gamma_;
};

/// Stochastic policy, probs(s, a) = pi(a|s).
class Policy {
 public:
  explicit Policy(Mat probs);

  /// Uniform over actions at every state.
  static Policy uniform(std::size_t n_states, std::size_t n_actions);
  /// Always picks `action`.
  static Policy deterministic(std::size_t n_states, std::size_t n_actions, std::size_t action);

  const Mat& probs() const { return probs_; }
  double operator()(std::size_t s, std::size_t a) const {
    return probs_(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(a));
  }
  std::size_t n_states() const { return static_cast<std::size_t>(probs_.rows()); }
  std::size_t n_actions() const { return static_cast<std::size_t>(probs_.cols()); }

 private:
  Mat probs_;
};

/// Markov reward process P^pi, r^pi obtained by fixing a policy.
class InducedMrp {
 public:
  InducedMrp(Mat P, Vec r, double gamma);

  const Mat& P() const { return P_; }
  const Vec& r() const { return r_; }
  double gamma() const { return gamma_; }
  std::size_t n_states() const { return static_cast<std::size_t>(P_.rows()); }

 private:
  Mat P_;
  Vec r_;
  double gamma_;
};

enum class FeatureValidation {
  kStrict,     // full column rank, d <= |S|, max_s ||phi(s)|| <= 1
  kUnchecked,  // explicit override, e.g. Baird's unnormalized, overcomplete features
};

/// |S| x d feature matrix Phi; row s is phi(s)^T.
class FeatureMap {
 public:
  explicit FeatureMap(Mat phi, FeatureValidation validation = FeatureValidation::kStrict);

  const Mat& phi() const { return phi_; }
  auto row(std::size_t s) const { return phi_.row(static_cast<Eigen::Index>(s)); }
  std::size_t dim() const { return static_cast<std::size_t>(phi_.cols()); }
  std::size_t n_states() const { return static_cast<std::size_t>(phi_.rows()); }
  bool validated() const { return validated_; }

  /// Smallest singular value of Phi (degeneracy margin).
  double min_singular_value() const;
  /// max_s ||phi(s)||_2.
  double max_row_norm() const;

 private:
  Mat phi_;
  bool validated_;
};

/// mu, D_mu = diag(mu), Sigma = Phi^T D_mu Phi and its spectrum.
struct StationaryGeometry {
  Vec mu;
  Mat Sigma;
  double lambda_min_Sigma = 0.0;
  double lambda_max_Sigma = 0.0;
  double kappa = 1.0;

  Eigen::DiagonalMatrix<double, Eigen::Dynamic> D_mu() const { return mu.asDiagonal(); }
};

InducedMrp induce_mrp(const TabularMdp& mdp, const Policy& policy);

/// Unique mu with mu^T P = mu^T, solved from [P^T - I; 1^T] mu = [0; 1].
/// Throws NoUniqueStationaryDistribution for reducible chains or when the
/// a-posteriori residual exceeds kStationaryTol.
Vec stationary_distribution(const Mat& P);

/// Solves (I - gamma P) V = r.
Vec exact_value_function(const InducedMrp& mrp);

/// Throws SingularSystem when Sigma is not positive definite under mu.
StationaryGeometry build_geometry(const InducedMrp& mrp, const FeatureMap& features);
StationaryGeometry build_geometry(const Vec& mu, const FeatureMap& features);

/// sqrt(v^T Sigma v).
double sigma_norm(const Vec& v, const Mat& Sigma);
inline double sigma_norm(const Vec& v, const StationaryGeometry& geometry) {
  return sigma_norm(v, geometry.Sigma);
}

/// ||x||_{D_mu} = sqrt(sum_s mu(s) x(s)^2).
double weighted_norm(const Vec& x, const Vec& mu);

/// Largest singular value.
double spectral_norm(const Mat& M);

}  // namespace tdlab
