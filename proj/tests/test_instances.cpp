#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include "support/oracles.hpp"
#include "tdlab/errors.hpp"
#include "tdlab/exact_solvers.hpp"
#include "tdlab/instances.hpp"

using namespace tdlab;

TEST_SUITE("instances") {
  TEST_CASE("minimax closed forms agree with the generic solvers") {
    for (std::size_t d : {3u, 5u, 7u}) {
      for (double gamma : {0.2, 0.6, 0.9}) {
        MinimaxSpec spec;
        spec.d = d;
        spec.n_states = 4 * d;
        spec.gamma = gamma;
        spec.epsilon = default_epsilon_bound(gamma) / 2.0;
        const MinimaxInstance inst = build_minimax(spec);
        const StationaryGeometry g = build_geometry(inst.mrp, inst.features);
        const OnPolicyPopulation pop = on_policy_population(inst.mrp, inst.features, g);
        CHECK((stationary_distribution(inst.mrp.P()) - inst.mu).cwiseAbs().maxCoeff() <= 1e-10);
        CHECK((pop.theta_star - inst.theta_star).cwiseAbs().maxCoeff() <= 1e-9);
        CHECK(inst.in_theorem_regime == (gamma > 0.5));
        CHECK(std::abs(inst.mu.sum() - 1.0) <= 1e-14);
      }
    }
  }

  TEST_CASE("minimax default instance: masses and features") {
    const MinimaxInstance inst = build_minimax(MinimaxSpec{});
    CHECK(inst.features.dim() == 3);
    for (std::size_t s = 0; s < 10; ++s) {
      const std::size_t k = std::min<std::size_t>(s, 2);
      CHECK(inst.features.row(s).sum() == 1.0);
      CHECK(inst.features.row(s)(static_cast<Eigen::Index>(k)) == 1.0);
    }
    CHECK(inst.mu(2) + inst.mu(9) > 0.0);
    CHECK(inst.mu.segment(2, 8).sum() == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(inst.mu(0) == doctest::Approx(0.25).epsilon(1e-12));
  }

  TEST_CASE("flipping all signs leaves the last coordinate of theta* unchanged") {
    MinimaxSpec a;
    a.signs = {1, -1};
    MinimaxSpec b = a;
    b.signs = {-1, 1};
    const MinimaxInstance ia = build_minimax(a);
    const MinimaxInstance ib = build_minimax(b);
    CHECK(ia.theta_star(2) == doctest::Approx(ib.theta_star(2)).epsilon(1e-14));
  }

  TEST_CASE("minimax parameter validation") {
    MinimaxSpec even;
    even.d = 4;
    even.n_states = 12;
    CHECK_THROWS_AS(build_minimax(even), ConfigError);

    MinimaxSpec big_eps;
    big_eps.epsilon = default_epsilon_bound(0.2) * 1.5;
    CHECK_THROWS_AS(build_minimax(big_eps), ConfigError);

    MinimaxSpec zero_eps;
    zero_eps.epsilon = 0.0;
    CHECK_THROWS_AS(build_minimax(zero_eps), ConfigError);

    MinimaxSpec unbalanced;
    unbalanced.signs = {1, 1};
    CHECK_THROWS_AS(build_minimax(unbalanced), ConfigError);

    MinimaxSpec wrong_len;
    wrong_len.signs = {1, -1, 1, -1};
    CHECK_THROWS_AS(build_minimax(wrong_len), ConfigError);

    MinimaxSpec few_states;
    few_states.n_states = 3;
    CHECK_THROWS_AS(build_minimax(few_states), ConfigError);

    MinimaxSpec bad_gamma;
    bad_gamma.gamma = 1.0;
    CHECK_THROWS_AS(build_minimax(bad_gamma), ConfigError);
  }

  TEST_CASE("Baird's counterexample") {
    const BairdInstance b = build_baird();
    CHECK(b.mdp.n_states() == 7);
    CHECK(b.mdp.n_actions() == 2);
    CHECK(b.mdp.gamma() == 0.9);
    CHECK(b.mdp.reward().cwiseAbs().maxCoeff() == 0.0);
    for (std::size_t s = 0; s < 7; ++s) {
      CHECK(b.target(s, 1) == 1.0);
      CHECK(b.behavior(s, 0) == doctest::Approx(6.0 / 7.0).epsilon(1e-15));
      CHECK(b.behavior(s, 1) == doctest::Approx(1.0 / 7.0).epsilon(1e-15));
      CHECK(b.mdp.transition(s, 1, 6) == 1.0);
      for (std::size_t t = 0; t < 6; ++t) CHECK(b.mdp.transition(s, 0, t) == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
      CHECK(b.mdp.transition(s, 0, 6) == 0.0);
    }
    Mat phi = Mat::Zero(7, 8);
    for (Eigen::Index s = 0; s < 6; ++s) {
      phi(s, s) = 2.0;
      phi(s, 7) = 1.0;
    }
    phi(6, 6) = 1.0;
    phi(6, 7) = 2.0;
    CHECK((b.features.phi() - phi).cwiseAbs().maxCoeff() == 0.0);
    CHECK((b.mu_b - Vec::Constant(7, 1.0 / 7.0)).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(b.value_star.cwiseAbs().maxCoeff() == 0.0);
    Vec theta0 = Vec::Ones(8);
    theta0(6) = 10.0;
    CHECK((b.theta0 - theta0).cwiseAbs().maxCoeff() == 0.0);
  }

  TEST_CASE("random problems are reproducible and well formed") {
    const EvaluationProblem a = random_problem(77, 8, 3, 4);
    const EvaluationProblem b = random_problem(77, 8, 3, 4);
    CHECK((a.features.phi() - b.features.phi()).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.target.probs() - b.target.probs()).cwiseAbs().maxCoeff() == 0.0);
    CHECK(a.features.max_row_norm() == doctest::Approx(1.0).epsilon(1e-14));
    REQUIRE(a.behavior.has_value());
    CHECK(a.behavior->probs().minCoeff() > 0.0);
    CHECK(a.mdp.gamma() >= 0.3);
    CHECK(a.mdp.gamma() <= 0.95);
    const EvaluationProblem c = random_problem(78, 8, 3, 4);
    CHECK((a.features.phi() - c.features.phi()).cwiseAbs().maxCoeff() > 0.0);
  }

  TEST_CASE("JSON round trip") {
    const BairdInstance b = build_baird();
    const EvaluationProblem p{b.mdp, b.target, b.behavior, b.features};
    const EvaluationProblem q = problem_from_json(problem_to_json(p));
    CHECK(q.mdp.gamma() == p.mdp.gamma());
    CHECK((q.features.phi() - p.features.phi()).cwiseAbs().maxCoeff() == 0.0);
    CHECK_FALSE(q.features.validated());
    CHECK((q.behavior->probs() - p.behavior->probs()).cwiseAbs().maxCoeff() == 0.0);
    for (std::size_t a = 0; a < 2; ++a) CHECK((q.mdp.kernel(a) - p.mdp.kernel(a)).cwiseAbs().maxCoeff() == 0.0);

    const EvaluationProblem r = random_problem(3, 5, 2, 3);
    const auto path = std::filesystem::temp_directory_path() / "tdlab_roundtrip.json";
    save_problem(r, path.string());
    const EvaluationProblem s = load_problem(path.string());
    std::filesystem::remove(path);
    CHECK((s.features.phi() - r.features.phi()).cwiseAbs().maxCoeff() == 0.0);
    CHECK((s.mdp.reward() - r.mdp.reward()).cwiseAbs().maxCoeff() == 0.0);
    CHECK(s.features.validated());
  }

  TEST_CASE("JSON errors") {
    CHECK_THROWS_AS(problem_from_json("{not json"), ConfigError);
    CHECK_THROWS_AS(problem_from_json(R"({"gamma": 0.9})"), ConfigError);
    CHECK_THROWS_AS(load_problem("/nonexistent/dir/x.json"), IoError);
    const std::string bad_kernel =
        R"({"gamma":0.5,"kernel":[[[0.7,0.7],[0.5,0.5]]],"reward":[[0],[0]],"target":[[1],[1]],"features":[[1,0],[0,1]]})";
    CHECK_THROWS_AS(problem_from_json(bad_kernel), ModelError);
  }
}
