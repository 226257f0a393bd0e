#include <doctest.h>

#include <random>

#include "support/oracles.hpp"
#include "tdlab/errors.hpp"
#include "tdlab/instances.hpp"
#include "tdlab/mdp_core.hpp"
#include "tdlab/rng.hpp"
#include "tdlab/samplers.hpp"

using namespace tdlab;

TEST_SUITE("mdp_core") {
  TEST_CASE("mdp validation rejects bad kernels, rewards and discounts") {
    Mat good(2, 2);
    good << 0.5, 0.5, 0.0, 1.0;
    Mat bad = good;
    bad(0, 0) = 0.6;
    CHECK_NOTHROW(TabularMdp({good}, Mat::Zero(2, 1), 0.9));
    CHECK_THROWS_AS(TabularMdp({bad}, Mat::Zero(2, 1), 0.9), ModelError);
    Mat neg = good;
    neg(0, 0) = 1.5;
    neg(0, 1) = -0.5;
    CHECK_THROWS_AS(TabularMdp({neg}, Mat::Zero(2, 1), 0.9), ModelError);
    CHECK_THROWS_AS(TabularMdp({good}, Mat::Constant(2, 1, 1.5), 0.9), ModelError);
    CHECK_THROWS_AS(TabularMdp({good}, Mat::Zero(2, 1), 1.0), ModelError);
    CHECK_THROWS_AS(TabularMdp({good}, Mat::Zero(2, 2), 0.9), DimensionMismatch);
    CHECK_THROWS_AS(Policy(Mat::Constant(2, 2, 0.6)), ModelError);
  }

  TEST_CASE("induce_mrp on Baird with the behavior policy") {
    const BairdInstance b = build_baird();
    const InducedMrp mrp = induce_mrp(b.mdp, b.behavior);
    for (Eigen::Index s = 0; s < 7; ++s) {
      for (Eigen::Index t = 0; t < 6; ++t) CHECK(mrp.P()(s, t) == doctest::Approx(1.0 / 7.0).epsilon(1e-15));
      CHECK(mrp.P()(s, 6) == doctest::Approx(1.0 / 7.0).epsilon(1e-15));
    }
  }

  TEST_CASE("induce_mrp with a single action returns the kernel slice") {
    const MinimaxInstance inst = build_minimax(MinimaxSpec{});
    const TabularMdp mdp = minimax_as_mdp(inst);
    const InducedMrp mrp = induce_mrp(mdp, Policy::deterministic(mdp.n_states(), 1, 0));
    CHECK((mrp.P() - mdp.kernel(0)).cwiseAbs().maxCoeff() == 0.0);
  }

  TEST_CASE("induce_mrp matches an explicit loop") {
    const EvaluationProblem p = random_problem(7, 3, 2, 2);
    const Policy uni = Policy::uniform(3, 2);
    const InducedMrp mrp = induce_mrp(p.mdp, uni);
    CHECK((mrp.P() - oracle::induced_P(p.mdp, uni)).cwiseAbs().maxCoeff() <= 1e-15);
    CHECK((mrp.r() - oracle::induced_r(p.mdp, uni)).cwiseAbs().maxCoeff() <= 1e-15);
    CHECK_THROWS_AS(induce_mrp(p.mdp, Policy::uniform(3, 3)), DimensionMismatch);
  }

  TEST_CASE("stationary distribution examples") {
    const BairdInstance b = build_baird();
    const Vec mu_b = stationary_distribution(induce_mrp(b.mdp, b.behavior).P());
    CHECK((mu_b - Vec::Constant(7, 1.0 / 7.0)).cwiseAbs().maxCoeff() <= 1e-10);

    Mat swap(2, 2);
    swap << 0, 1, 1, 0;
    const Vec mu = stationary_distribution(swap);
    CHECK(mu(0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(mu(1) == doctest::Approx(0.5).epsilon(1e-12));

    MinimaxSpec spec;
    spec.epsilon = 0.1;
    spec.epsilon_bound = 0.1;
    const MinimaxInstance inst = build_minimax(spec);
    const Vec mm = stationary_distribution(inst.mrp.P());
    for (Eigen::Index s = 0; s < 10; ++s) CHECK(mm(s) == doctest::Approx(s < 2 ? 0.25 : 1.0 / 16.0).epsilon(1e-10));
  }

  TEST_CASE("stationary distribution rejects reducible chains") {
    const Mat I = Mat::Identity(3, 3);
    CHECK_THROWS_AS(stationary_distribution(I), NoUniqueStationaryDistribution);
  }

  TEST_CASE("stationary distribution agrees with power iteration on random chains") {
    for (int k = 0; k < 10; ++k) {
      const EvaluationProblem p = oracle::random_instance(k);
      const Mat P = induce_mrp(p.mdp, p.target).P();
      const Vec mu = stationary_distribution(P);
      CHECK((mu - oracle::power_stationary(P)).cwiseAbs().maxCoeff() <= 1e-10);
      CHECK((mu.transpose() * P - mu.transpose()).cwiseAbs().maxCoeff() <= 1e-10);
      CHECK(mu.minCoeff() >= 0.0);
      CHECK(std::abs(mu.sum() - 1.0) <= 1e-12);
    }
  }

  TEST_CASE("exact value function") {
    const InducedMrp one(Mat::Ones(1, 1), Vec::Ones(1), 0.5);
    CHECK(exact_value_function(one)(0) == doctest::Approx(2.0).epsilon(1e-14));

    const BairdInstance b = build_baird();
    CHECK(exact_value_function(induce_mrp(b.mdp, b.target)).cwiseAbs().maxCoeff() == 0.0);

    EvaluationProblem p = random_problem(11, 4, 2, 2);
    const InducedMrp raw = induce_mrp(p.mdp, p.target);
    const InducedMrp mrp(raw.P(), raw.r(), 0.7);
    const Vec V = exact_value_function(mrp);
    CHECK((V - oracle::neumann_value(mrp.P(), mrp.r(), 0.7, 200)).cwiseAbs().maxCoeff() <= 1e-8);
    CHECK(V.minCoeff() >= 0.0);
    CHECK(V.maxCoeff() <= 1.0 / (1.0 - 0.7));
  }

  TEST_CASE("feature validation") {
    CHECK_THROWS_AS(FeatureMap(Mat::Ones(3, 2)), ModelError);   // rank 1
    CHECK_THROWS_AS(FeatureMap(Mat::Identity(2, 3)), ModelError);  // d > |S|
    CHECK_THROWS_AS(FeatureMap(2.0 * Mat::Identity(2, 2)), ModelError);
    const FeatureMap baird = build_baird().features;
    CHECK_FALSE(baird.validated());
    CHECK(baird.max_row_norm() == doctest::Approx(std::sqrt(5.0)));
  }

  TEST_CASE("geometry: two symmetric states, identity features") {
    Mat swap(2, 2);
    swap << 0, 1, 1, 0;
    const StationaryGeometry g = build_geometry(InducedMrp(swap, Vec::Zero(2), 0.5), FeatureMap(Mat::Identity(2, 2)));
    CHECK((g.Sigma - 0.5 * Mat::Identity(2, 2)).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(g.kappa == doctest::Approx(1.0));
  }

  TEST_CASE("geometry: minimax covariance is diagonal") {
    const MinimaxInstance inst = build_minimax(MinimaxSpec{});
    const StationaryGeometry g = build_geometry(inst.mrp, inst.features);
    Mat expected = Mat::Zero(3, 3);
    expected(0, 0) = expected(1, 1) = 0.25;
    expected(2, 2) = 0.5;
    CHECK((g.Sigma - expected).cwiseAbs().maxCoeff() <= 1e-12);
  }

  TEST_CASE("geometry invariants and Monte-Carlo covariance on a random instance") {
    const EvaluationProblem p = random_problem(5, 6, 2, 3);
    const InducedMrp mrp = induce_mrp(p.mdp, p.target);
    const StationaryGeometry g = build_geometry(mrp, p.features);
    CHECK((g.Sigma - g.Sigma.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(g.lambda_min_Sigma > 0.0);
    CHECK(spectral_norm(g.Sigma) <= 1.0 + 1e-10);
    CHECK(g.kappa >= 1.0);

    const OnPolicySampler sampler(mrp, g.mu);
    const TermMoments m = estimate_term_moments_serial(sampler, p.features, mrp.gamma(), 1000000, 99);
    for (Eigen::Index i = 0; i < 3; ++i)
      for (Eigen::Index j = 0; j < 3; ++j)
        CHECK(std::abs(m.mean.Sigma(i, j) - g.Sigma(i, j)) <= 3.0 * m.std_error.Sigma(i, j));
  }

  TEST_CASE("sigma norm") {
    const Mat S = Mat::Identity(2, 2);
    CHECK(sigma_norm(Vec::Zero(2), S) == 0.0);
    Vec v(2);
    v << 3, 4;
    CHECK(sigma_norm(v, S) == doctest::Approx(5.0).epsilon(1e-15));

    std::mt19937_64 gen(3);
    std::normal_distribution<double> n01;
    Mat B(4, 4);
    for (Eigen::Index i = 0; i < B.size(); ++i) B(i) = n01(gen);
    const Mat Sigma = B * B.transpose() / 4.0;
    Vec x(4);
    for (Eigen::Index i = 0; i < 4; ++i) x(i) = n01(gen);
    CHECK(std::abs(sigma_norm(x, Sigma) - oracle::eig_sigma_norm(x, Sigma)) <= 1e-12);
  }

  TEST_CASE("value-error identity ||Phi(theta - theta')||_D = ||theta - theta'||_Sigma") {
    std::mt19937_64 gen(8);
    std::normal_distribution<double> n01;
    for (int k = 0; k < 5; ++k) {
      const EvaluationProblem p = oracle::random_instance(k);
      const StationaryGeometry g = build_geometry(induce_mrp(p.mdp, p.target), p.features);
      Vec a(g.Sigma.rows()), b(g.Sigma.rows());
      for (Eigen::Index i = 0; i < a.size(); ++i) {
        a(i) = n01(gen);
        b(i) = n01(gen);
      }
      CHECK(std::abs(weighted_norm(p.features.phi() * (a - b), g.mu) - sigma_norm(a - b, g)) <= 1e-12);
    }
  }
}
