#include "tdlab/mdp_core.hpp"

#include <cmath>
#include <string>

#include "tdlab/errors.hpp"

namespace tdlab {

namespace {

void check_stochastic_rows(const Mat& M, const std::string& what) {
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    if ((M.row(i).array() < 0.0).any() || !M.row(i).allFinite()) {
      throw ModelError(what + ": row " + std::to_string(i) + " has a negative or non-finite entry");
    }
    if (std::abs(M.row(i).sum() - 1.0) > kStochasticTol) {
      throw ModelError(what + ": row " + std::to_string(i) + " does not sum to 1");
    }
  }
}

}  // namespace

TabularMdp::TabularMdp(std::vector<Mat> kernel, Mat reward, double gamma)
    : kernel_(std::move(kernel)), reward_(std::move(reward)), gamma_(gamma) {
  if (kernel_.empty() || reward_.rows() == 0) {
    throw DimensionMismatch("MDP needs at least one state and one action");
  }
  const Eigen::Index n = reward_.rows();
  if (reward_.cols() != static_cast<Eigen::Index>(kernel_.size())) {
    throw DimensionMismatch("reward has " + std::to_string(reward_.cols()) + " columns, kernel has " +
                            std::to_string(kernel_.size()) + " actions");
  }
  for (std::size_t a = 0; a < kernel_.size(); ++a) {
    if (kernel_[a].rows() != n || kernel_[a].cols() != n) {
      throw DimensionMismatch("kernel slice for action " + std::to_string(a) + " is not " +
                              std::to_string(n) + "x" + std::to_string(n));
    }
    check_stochastic_rows(kernel_[a], "kernel[action " + std::to_string(a) + "]");
  }
  if (!reward_.allFinite() || (reward_.array() < 0.0).any() || (reward_.array() > 1.0).any()) {
    throw ModelError("rewards must lie in [0, 1]");
  }
  if (!(gamma_ > 0.0 && gamma_ < 1.0)) {
    throw ModelError("discount must satisfy 0 < gamma < 1, got " + std::to_string(gamma_));
  }
}

Policy::Policy(Mat probs) : probs_(std::move(probs)) {
  if (probs_.rows() == 0 || probs_.cols() == 0) {
    throw DimensionMismatch("policy must have at least one state and one action");
  }
  check_stochastic_rows(probs_, "policy");
}

Policy Policy::uniform(std::size_t n_states, std::size_t n_actions) {
  return Policy(Mat::Constant(static_cast<Eigen::Index>(n_states), static_cast<Eigen::Index>(n_actions),
                              1.0 / static_cast<double>(n_actions)));
}

Policy Policy::deterministic(std::size_t n_states, std::size_t n_actions, std::size_t action) {
  Mat probs = Mat::Zero(static_cast<Eigen::Index>(n_states), static_cast<Eigen::Index>(n_actions));
  probs.col(static_cast<Eigen::Index>(action)).setOnes();
  return Policy(std::move(probs));
}

InducedMrp::InducedMrp(Mat P, Vec r, double gamma) : P_(std::move(P)), r_(std::move(r)), gamma_(gamma) {
  if (P_.rows() != P_.cols() || P_.rows() != r_.size() || P_.rows() == 0) {
    throw DimensionMismatch("MRP transition matrix and reward vector disagree in size");
  }
  check_stochastic_rows(P_, "P");
  if (!r_.allFinite() || (r_.array() < 0.0).any() || (r_.array() > 1.0).any()) {
    throw ModelError("MRP rewards must lie in [0, 1]");
  }
  if (!(gamma_ > 0.0 && gamma_ < 1.0)) {
    throw ModelError("discount must satisfy 0 < gamma < 1");
  }
}

FeatureMap::FeatureMap(Mat phi, FeatureValidation validation)
    : phi_(std::move(phi)), validated_(validation == FeatureValidation::kStrict) {
  if (phi_.rows() == 0 || phi_.cols() == 0 || !phi_.allFinite()) {
    throw DimensionMismatch("feature matrix must be non-empty and finite");
  }
  if (!validated_) return;
  if (phi_.cols() > phi_.rows()) {
    throw ModelError("feature dimension d = " + std::to_string(phi_.cols()) + " exceeds |S| = " +
                     std::to_string(phi_.rows()));
  }
  if (min_singular_value() <= 1e-10) {
    throw ModelError("feature columns are linearly dependent (smallest singular value <= 1e-10)");
  }
  if (max_row_norm() > 1.0 + 1e-12) {
    throw ModelError("feature rows must have Euclidean norm <= 1");
  }
}

double FeatureMap::min_singular_value() const {
  Eigen::JacobiSVD<Mat> svd(phi_);
  const Vec& sv = svd.singularValues();
  // Overcomplete maps (d > |S|) have d - |S| implicit zero singular values.
  if (phi_.cols() > phi_.rows()) return 0.0;
  return sv(sv.size() - 1);
}

double FeatureMap::max_row_norm() const { return phi_.rowwise().norm().maxCoeff(); }

InducedMrp induce_mrp(const TabularMdp& mdp, const Policy& policy) {
  if (policy.n_states() != mdp.n_states() || policy.n_actions() != mdp.n_actions()) {
    throw DimensionMismatch("policy shape does not match the MDP");
  }
  const auto n = static_cast<Eigen::Index>(mdp.n_states());
  Mat P = Mat::Zero(n, n);
  Vec r = Vec::Zero(n);
  for (std::size_t a = 0; a < mdp.n_actions(); ++a) {
    const Vec weight = policy.probs().col(static_cast<Eigen::Index>(a));
    P.noalias() += weight.asDiagonal() * mdp.kernel(a);
    r += weight.cwiseProduct(mdp.reward().col(static_cast<Eigen::Index>(a)));
  }
  r = r.cwiseMax(0.0).cwiseMin(1.0);
  return InducedMrp(std::move(P), std::move(r), mdp.gamma());
}

Vec stationary_distribution(const Mat& P) {
  if (P.rows() != P.cols() || P.rows() == 0) {
    throw DimensionMismatch("stationary_distribution needs a square matrix");
  }
  const Eigen::Index n = P.rows();
  Mat M(n + 1, n);
  M.topRows(n) = P.transpose() - Mat::Identity(n, n);
  M.row(n).setOnes();
  Vec rhs = Vec::Zero(n + 1);
  rhs(n) = 1.0;

  Eigen::ColPivHouseholderQR<Mat> qr(M);
  qr.setThreshold(1e-12);
  if (qr.rank() < n) {
    throw NoUniqueStationaryDistribution("chain has more than one recurrent class (rank " +
                                         std::to_string(qr.rank()) + " < " + std::to_string(n) + ")");
  }
  Vec mu = qr.solve(rhs);
  if ((mu.array() < -1e-12).any()) {
    throw NoUniqueStationaryDistribution("stationary solve produced negative mass");
  }
  mu = mu.cwiseMax(0.0);
  mu /= mu.sum();
  const double residual = (P.transpose() * mu - mu).cwiseAbs().maxCoeff();
  if (residual > kStationaryTol) {
    throw NoUniqueStationaryDistribution("stationary residual " + std::to_string(residual) +
                                         " exceeds tolerance");
  }
  return mu;
}

Vec exact_value_function(const InducedMrp& mrp) {
  const auto n = static_cast<Eigen::Index>(mrp.n_states());
  const Mat system = Mat::Identity(n, n) - mrp.gamma() * mrp.P();
  Eigen::FullPivLU<Mat> lu(system);
  if (!lu.isInvertible()) throw SingularSystem("I - gamma P is singular");
  Vec V = lu.solve(mrp.r());
  if ((system * V - mrp.r()).cwiseAbs().maxCoeff() > 1e-10) {
    throw SingularSystem("value-function solve residual too large");
  }
  return V;
}

StationaryGeometry build_geometry(const Vec& mu, const FeatureMap& features) {
  if (static_cast<std::size_t>(mu.size()) != features.n_states()) {
    throw DimensionMismatch("mu and feature matrix disagree on |S|");
  }
  StationaryGeometry g;
  g.mu = mu;
  const Mat& phi = features.phi();
  g.Sigma = phi.transpose() * mu.asDiagonal() * phi;
  g.Sigma = 0.5 * (g.Sigma + g.Sigma.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> eig(g.Sigma, Eigen::EigenvaluesOnly);
  g.lambda_min_Sigma = eig.eigenvalues()(0);
  g.lambda_max_Sigma = eig.eigenvalues()(eig.eigenvalues().size() - 1);
  if (!(g.lambda_min_Sigma > 1e-14 * std::max(1.0, g.lambda_max_Sigma))) {
    throw SingularSystem("feature covariance Sigma is not positive definite under mu");
  }
  g.kappa = g.lambda_max_Sigma / g.lambda_min_Sigma;
  return g;
}

StationaryGeometry build_geometry(const InducedMrp& mrp, const FeatureMap& features) {
  if (mrp.n_states() != features.n_states()) {
    throw DimensionMismatch("MRP and feature matrix disagree on |S|");
  }
  return build_geometry(stationary_distribution(mrp.P()), features);
}

double sigma_norm(const Vec& v, const Mat& Sigma) {
  if (v.size() != Sigma.rows()) throw DimensionMismatch("sigma_norm: dimension mismatch");
  return std::sqrt(std::max(0.0, v.dot(Sigma * v)));
}

double weighted_norm(const Vec& x, const Vec& mu) {
  if (x.size() != mu.size()) throw DimensionMismatch("weighted_norm: dimension mismatch");
  return std::sqrt(mu.dot(x.cwiseAbs2()));
}

double spectral_norm(const Mat& M) {
  if (M.size() == 0) return 0.0;
  Eigen::JacobiSVD<Mat> svd(M);
  return svd.singularValues()(0);
}

}  // namespace tdlab
