// tdlab: exact solves, seeded multi-trial runs and rate fits for TD / TDC.

#include <cerrno>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tdlab/config.hpp"
#include "tdlab/errors.hpp"
#include "tdlab/exact_solvers.hpp"
#include "tdlab/experiment.hpp"
#include "tdlab/instances.hpp"

namespace {

using namespace tdlab;

constexpr int kExitConfig = 2;
constexpr int kExitModel = 3;
constexpr int kExitIo = 4;

std::string vec_str(const Vec& v) {
  std::string out;
  for (Eigen::Index i = 0; i < v.size(); ++i) out += (i ? " " : "") + format_number(v(i));
  return out;
}

void print_matrix(std::ostream& os, const char* name, const Mat& m) {
  os << name << ":\n";
  for (Eigen::Index i = 0; i < m.rows(); ++i) os << "  " << vec_str(m.row(i).transpose()) << "\n";
}

struct MinimaxArgs {
  std::size_t n_states = 10;
  std::size_t d = 3;
  double gamma = 0.2;
  double epsilon = 0.02;
  std::string signs;

  void attach(CLI::App* app) {
    app->add_option("--n-states", n_states, "minimax |S|")->capture_default_str();
    app->add_option("--d", d, "minimax feature dimension (odd)")->capture_default_str();
    app->add_option("--gamma", gamma, "minimax discount")->capture_default_str();
    app->add_option("--epsilon", epsilon, "minimax perturbation")->capture_default_str();
    app->add_option("--signs", signs, "sign pattern such as ++-- (default: first half +)");
  }

  MinimaxSpec spec() const {
    MinimaxSpec s;
    s.n_states = n_states;
    s.d = d;
    s.gamma = gamma;
    s.epsilon = epsilon;
    for (char c : signs) {
      if (c == '+') s.signs.push_back(1);
      else if (c == '-') s.signs.push_back(-1);
      else throw ConfigError("--signs: use '+' and '-' only");
    }
    return s;
  }
};

EvaluationProblem named_problem(const std::string& name, const MinimaxArgs& args) {
  if (name == "minimax") {
    const MinimaxInstance inst = build_minimax(args.spec());
    const TabularMdp mdp = minimax_as_mdp(inst);
    return EvaluationProblem{mdp, Policy::deterministic(mdp.n_states(), 1, 0), std::nullopt, inst.features};
  }
  if (name == "baird") {
    const BairdInstance b = build_baird();
    return EvaluationProblem{b.mdp, b.target, b.behavior, b.features};
  }
  return load_problem(name);
}

void print_on_policy(std::ostream& os, const EvaluationProblem& p) {
  const InducedMrp mrp = induce_mrp(p.mdp, p.target);
  const StationaryGeometry g = build_geometry(mrp, p.features);
  const OnPolicyPopulation pop = on_policy_population(mrp, p.features, g);
  os << "[on-policy]\n";
  os << "mu: " << vec_str(g.mu) << "\n";
  print_matrix(os, "Sigma", g.Sigma);
  os << "lambda_min_Sigma: " << format_number(g.lambda_min_Sigma) << "\n";
  os << "kappa: " << format_number(g.kappa) << "\n";
  os << "theta_star: " << vec_str(pop.theta_star) << "\n";
  os << "theta_star_sigma_norm: " << format_number(sigma_norm(pop.theta_star, g.Sigma)) << "\n";
  os << "projected_bellman_residual: "
     << format_number(projected_bellman_residual(pop.theta_star, mrp, p.features, g)) << "\n";
}

void print_off_policy(std::ostream& os, const EvaluationProblem& p, double alpha, double beta) {
  const Policy& behavior = p.behavior ? *p.behavior : p.target;
  const OffPolicyPopulation pop = off_policy_population(p.mdp, p.target, behavior, p.features);
  os << "[off-policy]\n";
  os << "mu_b: " << vec_str(pop.mu_b) << "\n";
  print_matrix(os, "Sigma_tilde", pop.Sigma_tilde);
  os << (pop.theta_unique ? "theta_tilde_star: " : "theta_tilde_star (min-norm, not unique): ")
     << vec_str(pop.theta_ref) << "\n";
  os << "value_star: " << vec_str(pop.value_star) << "\n";
  os << "rho_max: " << format_number(pop.rho_max) << "\n";
  os << "lambda1: " << format_number(pop.lambda1) << "\n";
  os << "lambda2: " << format_number(pop.lambda2) << "\n";
  os << "lambda_Sigma: " << format_number(pop.lambda_Sigma) << "\n";
  if (!pop.sigma_invertible) {
    os << "psi_certificate: unavailable (Sigma~ singular)\n";
    return;
  }
  const double kappa = default_varkappa(pop, alpha, beta);
  os << "psi.alpha: " << format_number(alpha) << "\n";
  os << "psi.beta: " << format_number(beta) << "\n";
  os << "psi.varkappa: " << format_number(kappa) << "\n";
  if (!(kappa > 0.0 && kappa < 1.0)) {
    os << "psi_certificate: unavailable (varkappa outside (0, 1))\n";
    return;
  }
  const PsiCertificate c = psi_contraction_certificate(pop, alpha, beta, kappa);
  os << "psi.norm: " << format_number(c.norm) << "\n";
  os << "psi.bound: " << format_number(c.bound) << "\n";
  os << "psi.conditions_met: " << (c.conditions_met ? "true" : "false") << "\n";
  os << "psi.condition.beta_vs_alpha: " << format_number(c.beta_vs_alpha_lhs) << " vs "
     << format_number(c.beta_vs_alpha_rhs) << "\n";
  os << "psi.condition.kappa_beta: " << format_number(c.kappa_beta_lhs) << " vs " << format_number(c.kappa_beta_rhs)
     << "\n";
  os << "psi.condition.coupling: " << format_number(c.coupling_lhs) << " vs " << format_number(c.coupling_rhs) << "\n";
  os << "psi.condition.cross: " << format_number(c.cross_lhs) << " vs " << format_number(c.cross_rhs) << "\n";
  os << "psi.alpha_smallness: " << format_number(c.alpha_smallness) << "\n";
  os << "psi.beta_smallness: " << format_number(c.beta_smallness) << "\n";
}

std::pair<std::uint64_t, std::uint64_t> parse_window(const std::string& w) {
  const auto colon = w.find(':');
  if (colon == std::string::npos) throw ConfigError("--window expects a:b");
  try {
    return {static_cast<std::uint64_t>(std::stod(w.substr(0, colon))),
            static_cast<std::uint64_t>(std::stod(w.substr(colon + 1)))};
  } catch (const std::exception&) {
    throw ConfigError("--window expects numeric a:b, got '" + w + "'");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"TD / TDC policy evaluation lab"};
  app.require_subcommand(1);

  auto* solve = app.add_subcommand("solve", "Exact population quantities of an instance");
  std::string solve_instance;
  MinimaxArgs solve_mm;
  double solve_alpha = 0.02, solve_beta = 0.002;
  solve->add_option("instance", solve_instance, "minimax, baird or a JSON instance file")->required();
  solve_mm.attach(solve);
  solve->add_option("--alpha", solve_alpha, "TDC alpha for the Psi certificate")->capture_default_str();
  solve->add_option("--beta", solve_beta, "TDC beta for the Psi certificate")->capture_default_str();

  auto* run = app.add_subcommand("run", "Run a configured multi-trial experiment");
  std::string run_config;
  int workers = 0;
  std::vector<std::string> overrides;
  run->add_option("config", run_config, "config file")->required();
  run->add_option("--workers", workers, "trial worker threads (default: available parallelism)");
  run->add_option("--set", overrides, "override a config key, key=value")->take_all();

  auto* rate = app.add_subcommand("rate", "Fit log(mean error) against log(step)");
  std::string rate_csv, rate_window;
  rate->add_option("summary", rate_csv, "summary CSV")->required();
  rate->add_option("--window", rate_window, "checkpoint range a:b")->required();

  auto* gen = app.add_subcommand("gen-config", "Print a preset config");
  std::string preset;
  std::string gen_out;
  gen->add_option("--preset", preset, "minimax-fig1 or baird-fig3")->required();
  gen->add_option("-o,--output", gen_out, "write to file instead of stdout");

  auto* exp = app.add_subcommand("export-instance", "Write an instance as JSON");
  std::string exp_instance, exp_out;
  MinimaxArgs exp_mm;
  exp->add_option("instance", exp_instance, "minimax or baird")->required();
  exp->add_option("-o,--output", exp_out, "output JSON path")->required();
  exp_mm.attach(exp);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*solve) {
      const EvaluationProblem p = named_problem(solve_instance, solve_mm);
      std::cout << "gamma: " << format_number(p.mdp.gamma()) << "\n";
      std::cout << "states: " << p.mdp.n_states() << "  actions: " << p.mdp.n_actions()
                << "  d: " << p.features.dim() << "\n";
      if (!p.behavior) print_on_policy(std::cout, p);
      print_off_policy(std::cout, p, solve_alpha, solve_beta);
    } else if (*run) {
      const ExperimentConfig cfg = load_config(run_config, overrides);
      const ExperimentResult result = run_experiment(cfg, workers);
      for (const auto& w : result.stepsizes.warnings) std::cerr << "warning: " << w << "\n";
      emit(result, cfg, cfg.output);
      const SummaryRow& last = result.summary.back();
      std::cout << "algorithm " << to_string(cfg.algorithm) << ", " << cfg.n_trials << " trials, T = " << cfg.T << "\n";
      std::cout << "initial error " << format_number(result.initial_error) << "\n";
      std::cout << "final mean error " << format_number(last.mean) << " [" << format_number(last.lo95) << ", "
                << format_number(last.hi95) << "], diverged " << last.diverged << "/" << cfg.n_trials << "\n";
      std::cout << "wrote " << cfg.output << "_{trace,summary,divergence}.csv and " << cfg.output
                << "_manifest.txt\n";
    } else if (*rate) {
      const auto [lo, hi] = parse_window(rate_window);
      const RateFit fit = fit_rate(load_summary_csv(rate_csv), lo, hi);
      std::cout << "slope " << format_number(fit.slope) << "\n";
      std::cout << "intercept " << format_number(fit.intercept) << "\n";
      std::cout << "r2 " << format_number(fit.r2) << "\n";
      std::cout << "points " << fit.n_points << "\n";
    } else if (*gen) {
      const std::string text = render_config(preset_config(preset));
      if (gen_out.empty()) {
        std::cout << text;
      } else {
        std::ofstream out(gen_out);
        if (!out) throw IoError("cannot write " + gen_out + ": " + std::strerror(errno));
        out << text;
      }
    } else if (*exp) {
      if (exp_instance != "minimax" && exp_instance != "baird") {
        throw ConfigError("export-instance: expected minimax or baird");
      }
      save_problem(named_problem(exp_instance, exp_mm), exp_out);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ModelError& e) {
    std::cerr << "instance error: " << e.what() << "\n";
    return kExitModel;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitIo;
  }
  return 0;
}
