#include "tdlab/instances.hpp"

#include <cerrno>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "tdlab/errors.hpp"

namespace tdlab {

double default_epsilon_bound(double gamma) { return 0.1 * gamma / (1.0 - gamma); }

namespace {

std::vector<int> resolve_signs(const MinimaxSpec& spec) {
  const std::size_t m = spec.d - 1;
  if (spec.signs.empty()) {
    std::vector<int> out(m, -1);
    for (std::size_t i = 0; i < m / 2; ++i) out[i] = 1;
    return out;
  }
  if (spec.signs.size() != m) {
    throw ConfigError("minimax: expected " + std::to_string(m) + " signs, got " + std::to_string(spec.signs.size()));
  }
  std::size_t plus = 0;
  for (int s : spec.signs) {
    if (s != 1 && s != -1) throw ConfigError("minimax: signs must be +1 or -1");
    plus += s == 1 ? 1 : 0;
  }
  if (2 * plus != m) throw ConfigError("minimax: signs must contain as many + as -");
  return spec.signs;
}

}  // namespace

MinimaxInstance build_minimax(const MinimaxSpec& spec) {
  const std::size_t n = spec.n_states;
  const std::size_t d = spec.d;
  const double g = spec.gamma;
  if (d < 3 || d % 2 == 0) throw ConfigError("minimax: d must be an odd integer > 1");
  if (n < d + 1) throw ConfigError("minimax: need n_states >= d + 1");
  if (!(g > 0.0 && g < 1.0)) throw ConfigError("minimax: gamma must lie in (0, 1)");
  const double eps_bound = spec.epsilon_bound.value_or(default_epsilon_bound(g));
  if (!(spec.epsilon > 0.0) || spec.epsilon > eps_bound) {
    std::ostringstream msg;
    msg << "minimax: epsilon = " << spec.epsilon << " outside (0, " << eps_bound << "]";
    throw ConfigError(msg.str());
  }
  const std::vector<int> signs = resolve_signs(spec);

  const std::size_t m = d - 1;      // states with their own coordinate
  const std::size_t agg = n - m;    // |S| - d + 1 aggregated states
  const auto N = static_cast<Eigen::Index>(n);
  const auto M = static_cast<Eigen::Index>(m);
  const double shift = (1.0 - g) * (1.0 - g) * spec.epsilon;

  Vec q(M);
  for (Eigen::Index i = 0; i < M; ++i) {
    q(i) = g + signs[static_cast<std::size_t>(i)] * shift;
    if (!(q(i) > 0.0 && q(i) < 1.0)) throw ConfigError("minimax: q must lie in (0, 1)");
  }

  Mat P = Mat::Zero(N, N);
  for (Eigen::Index s = 0; s < M; ++s) {
    P(s, s) = q(s);
    for (Eigen::Index t = M; t < N; ++t) P(s, t) = (1.0 - q(s)) / static_cast<double>(agg);
  }
  for (Eigen::Index s = M; s < N; ++s) {
    for (Eigen::Index t = 0; t < M; ++t) P(s, t) = (1.0 - q(t)) / static_cast<double>(m);
    for (Eigen::Index t = M; t < N; ++t) P(s, t) = g / static_cast<double>(agg);
  }
  for (Eigen::Index s = 0; s < N; ++s) {
    const double err = std::abs(P.row(s).sum() - 1.0);
    if (err > kStochasticTol) {
      throw ModelError("minimax: kernel row " + std::to_string(s) + " does not sum to one");
    }
  }

  Vec r = Vec::Zero(N);
  r.tail(N - M).setOnes();

  Mat phi = Mat::Zero(N, M + 1);
  for (Eigen::Index s = 0; s < N; ++s) phi(s, std::min(s, M)) = 1.0;

  Vec mu(N);
  mu.head(M).setConstant(1.0 / (2.0 * static_cast<double>(m)));
  mu.tail(N - M).setConstant(1.0 / (2.0 * static_cast<double>(agg)));

  double acc = 0.0;
  for (Eigen::Index i = 0; i < M; ++i) {
    acc += g * g * (1.0 - q(i)) * (1.0 - q(i)) / (static_cast<double>(m) * (1.0 - g * q(i)));
  }
  Vec theta(M + 1);
  theta(M) = 1.0 / (1.0 - g * g - acc);
  for (Eigen::Index i = 0; i < M; ++i) theta(i) = g * (1.0 - q(i)) / (1.0 - g * q(i)) * theta(M);

  return MinimaxInstance{spec,
                         signs,
                         q,
                         InducedMrp(std::move(P), std::move(r), g),
                         FeatureMap(std::move(phi)),
                         std::move(mu),
                         std::move(theta),
                         g > 0.5};
}

TabularMdp minimax_as_mdp(const MinimaxInstance& instance) {
  return TabularMdp({instance.mrp.P()}, Mat(instance.mrp.r()), instance.mrp.gamma());
}

BairdInstance build_baird() {
  constexpr Eigen::Index n = 7;
  Mat stay_low = Mat::Zero(n, n);
  stay_low.leftCols(6).setConstant(1.0 / 6.0);
  Mat jump = Mat::Zero(n, n);
  jump.col(6).setOnes();

  Mat behavior(n, 2);
  behavior.col(0).setConstant(6.0 / 7.0);
  behavior.col(1).setConstant(1.0 / 7.0);

  Mat phi = Mat::Zero(n, 8);
  for (Eigen::Index i = 0; i < 6; ++i) {
    phi(i, i) = 2.0;
    phi(i, 7) = 1.0;
  }
  phi(6, 6) = 1.0;
  phi(6, 7) = 2.0;

  Vec theta0 = Vec::Ones(8);
  theta0(6) = 10.0;

  return BairdInstance{TabularMdp({stay_low, jump}, Mat::Zero(n, 2), 0.9),
                       Policy::deterministic(n, 2, 1),
                       Policy(behavior),
                       FeatureMap(phi, FeatureValidation::kUnchecked),
                       Vec::Constant(n, 1.0 / 7.0),
                       Vec::Zero(n),
                       theta0};
}

EvaluationProblem random_problem(std::uint64_t seed, std::size_t n_states, std::size_t n_actions, std::size_t d) {
  if (d == 0 || d > n_states || n_actions == 0) throw ConfigError("random_problem: need 1 <= d <= n_states");
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> positive(0.05, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> gammas(0.3, 0.95);
  const auto S = static_cast<Eigen::Index>(n_states);
  const auto A = static_cast<Eigen::Index>(n_actions);
  const auto D = static_cast<Eigen::Index>(d);

  auto stochastic_rows = [&](Eigen::Index rows, Eigen::Index cols, bool sparse) {
    Mat out(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
      for (Eigen::Index j = 0; j < cols; ++j) out(i, j) = (sparse && unit(gen) < 0.3) ? 0.0 : positive(gen);
      if (out.row(i).sum() == 0.0) out(i, i % cols) = 1.0;
      out.row(i) /= out.row(i).sum();
    }
    return out;
  };

  std::vector<Mat> kernel;
  for (Eigen::Index a = 0; a < A; ++a) kernel.push_back(stochastic_rows(S, S, false));
  Mat reward(S, A);
  for (Eigen::Index i = 0; i < reward.size(); ++i) reward(i) = unit(gen);

  Mat phi(S, D);
  for (Eigen::Index i = 0; i < phi.size(); ++i) phi(i) = normal(gen);
  phi /= phi.rowwise().norm().maxCoeff();

  const double gamma = gammas(gen);
  return EvaluationProblem{TabularMdp(std::move(kernel), std::move(reward), gamma), Policy(stochastic_rows(S, A, true)),
                           Policy(stochastic_rows(S, A, false)), FeatureMap(std::move(phi))};
}

namespace {

using nlohmann::json;

json to_json(const Mat& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Mat matrix_from(const json& j, const char* what) {
  if (!j.is_array() || j.empty() || !j[0].is_array()) {
    throw ConfigError(std::string("instance file: '") + what + "' must be a non-empty array of rows");
  }
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j[0].size());
  Mat m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw ConfigError(std::string("instance file: ragged rows in '") + what + "'");
    }
    for (Eigen::Index k = 0; k < cols; ++k) m(i, k) = row[static_cast<std::size_t>(k)].get<double>();
  }
  return m;
}

const json& require(const json& doc, const char* key) {
  if (!doc.contains(key)) throw ConfigError(std::string("instance file: missing key '") + key + "'");
  return doc.at(key);
}

}  // namespace

std::string problem_to_json(const EvaluationProblem& problem) {
  json doc;
  doc["gamma"] = problem.mdp.gamma();
  json kernel = json::array();
  for (std::size_t a = 0; a < problem.mdp.n_actions(); ++a) kernel.push_back(to_json(problem.mdp.kernel(a)));
  doc["kernel"] = std::move(kernel);
  doc["reward"] = to_json(problem.mdp.reward());
  doc["target"] = to_json(problem.target.probs());
  if (problem.behavior) doc["behavior"] = to_json(problem.behavior->probs());
  doc["features"] = to_json(problem.features.phi());
  if (!problem.features.validated()) doc["unchecked_features"] = true;
  return doc.dump(2) + "\n";
}

EvaluationProblem problem_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("instance file: ") + e.what());
  }
  try {
    const json& kernel_json = require(doc, "kernel");
    if (!kernel_json.is_array() || kernel_json.empty()) throw ConfigError("instance file: 'kernel' must list one matrix per action");
    std::vector<Mat> kernel;
    for (const auto& k : kernel_json) kernel.push_back(matrix_from(k, "kernel"));
    const bool unchecked = doc.value("unchecked_features", false);
    std::optional<Policy> behavior;
    if (doc.contains("behavior")) behavior.emplace(matrix_from(doc.at("behavior"), "behavior"));
    return EvaluationProblem{
        TabularMdp(std::move(kernel), matrix_from(require(doc, "reward"), "reward"), require(doc, "gamma").get<double>()),
        Policy(matrix_from(require(doc, "target"), "target")), std::move(behavior),
        FeatureMap(matrix_from(require(doc, "features"), "features"),
                   unchecked ? FeatureValidation::kUnchecked : FeatureValidation::kStrict)};
  } catch (const json::exception& e) {
    throw ConfigError(std::string("instance file: ") + e.what());
  }
}

EvaluationProblem load_problem(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path + ": " + std::strerror(errno));
  std::ostringstream buf;
  buf << in.rdbuf();
  return problem_from_json(buf.str());
}

void save_problem(const EvaluationProblem& problem, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path + ": " + std::strerror(errno));
  out << problem_to_json(problem);
  if (!out) throw IoError("write failed for " + path + ": " + std::strerror(errno));
}

}  // namespace tdlab
