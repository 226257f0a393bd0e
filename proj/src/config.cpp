#include "tdlab/config.hpp"

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "tdlab/errors.hpp"

namespace tdlab {

const char* to_string(InstanceKind kind) {
  switch (kind) {
    case InstanceKind::kMinimax:
      return "minimax";
    case InstanceKind::kBaird:
      return "baird";
    case InstanceKind::kFile:
      return "file";
  }
  return "unknown";
}

const char* to_string(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::kTd:
      return "td";
    case Algorithm::kAveragedTd:
      return "averaged_td";
    case Algorithm::kOffPolicyTd:
      return "off_policy_td";
    case Algorithm::kTdc:
      return "tdc";
  }
  return "unknown";
}

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::pair<std::string, std::string> split_assignment(const std::string& line, const std::string& where) {
  const auto eq = line.find('=');
  if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value', got '" + line + "'");
  std::string key = trim(line.substr(0, eq));
  if (key.empty()) throw ConfigError(where + ": empty key");
  return {key, trim(line.substr(eq + 1))};
}

double to_double(const std::string& key, const std::string& value) {
  const char* begin = value.c_str();
  char* end = nullptr;
  errno = 0;
  const double x = std::strtod(begin, &end);
  if (value.empty() || end != begin + value.size() || errno == ERANGE || !std::isfinite(x)) {
    throw ConfigError(key + ": not a finite number: '" + value + "'");
  }
  return x;
}

std::uint64_t to_uint(const std::string& key, const std::string& value) {
  std::uint64_t x = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), x);
  if (value.empty() || ec != std::errc() || ptr != value.data() + value.size()) {
    // Allow scientific notation for large integers such as 1e5.
    const double d = to_double(key, value);
    if (d < 0.0 || d != std::floor(d) || d > 1.8e19) throw ConfigError(key + ": not a nonnegative integer: '" + value + "'");
    return static_cast<std::uint64_t>(d);
  }
  return x;
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "instance",       "instance.path",      "minimax.n_states",    "minimax.d",
      "minimax.gamma",  "minimax.epsilon",    "minimax.signs",       "minimax.epsilon_bound",
      "algorithm",      "stepsize.mode",      "stepsize.eta",        "stepsize.alpha",
      "stepsize.beta",  "stepsize.c0",        "stepsize.c1",         "stepsize.delta",
      "stepsize.theta_norm_estimate",         "theta0",              "T",
      "n_trials",       "seed",               "checkpoints",         "output"};
  return keys;
}

std::vector<std::uint64_t> parse_checkpoints(const std::string& spec, std::uint64_t T) {
  if (spec.rfind("log:", 0) == 0) {
    const std::uint64_t count = to_uint("checkpoints", spec.substr(4));
    if (count == 0) throw ConfigError("checkpoints: log:<count> needs count >= 1");
    return log_checkpoints(T, count);
  }
  std::vector<std::uint64_t> out;
  for (const auto& item : split_list(spec)) out.push_back(to_uint("checkpoints", item));
  if (out.empty()) throw ConfigError("checkpoints: empty list");
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out[i] == 0) throw ConfigError("checkpoints: step indices start at 1");
    if (i > 0 && out[i] <= out[i - 1]) throw ConfigError("checkpoints: must be strictly increasing");
  }
  if (out.back() != T) throw ConfigError("checkpoints: last checkpoint must equal T");
  return out;
}

ExperimentConfig interpret(const std::map<std::string, std::string>& kv) {
  ExperimentConfig c;
  auto get = [&](const std::string& key) -> const std::string* {
    auto it = kv.find(key);
    return it == kv.end() ? nullptr : &it->second;
  };

  if (auto v = get("instance")) {
    if (*v == "minimax") {
      c.instance = InstanceKind::kMinimax;
    } else if (*v == "baird") {
      c.instance = InstanceKind::kBaird;
    } else if (*v == "file") {
      c.instance = InstanceKind::kFile;
    } else {
      throw ConfigError("instance: expected minimax, baird or file, got '" + *v + "'");
    }
  }
  if (auto v = get("instance.path")) c.instance_path = *v;
  if (c.instance == InstanceKind::kFile && c.instance_path.empty()) {
    throw ConfigError("instance = file requires instance.path");
  }
  if (auto v = get("minimax.n_states")) c.minimax.n_states = to_uint("minimax.n_states", *v);
  if (auto v = get("minimax.d")) c.minimax.d = to_uint("minimax.d", *v);
  if (auto v = get("minimax.gamma")) c.minimax.gamma = to_double("minimax.gamma", *v);
  if (auto v = get("minimax.epsilon")) c.minimax.epsilon = to_double("minimax.epsilon", *v);
  if (auto v = get("minimax.epsilon_bound")) c.minimax.epsilon_bound = to_double("minimax.epsilon_bound", *v);
  if (auto v = get("minimax.signs")) {
    c.minimax.signs.clear();
    for (char ch : *v) {
      if (ch == '+') {
        c.minimax.signs.push_back(1);
      } else if (ch == '-') {
        c.minimax.signs.push_back(-1);
      } else if (ch != ',' && ch != ' ') {
        throw ConfigError("minimax.signs: use a string of '+' and '-'");
      }
    }
  }

  if (auto v = get("algorithm")) {
    if (*v == "td") {
      c.algorithm = Algorithm::kTd;
    } else if (*v == "averaged_td") {
      c.algorithm = Algorithm::kAveragedTd;
    } else if (*v == "off_policy_td") {
      c.algorithm = Algorithm::kOffPolicyTd;
    } else if (*v == "tdc") {
      c.algorithm = Algorithm::kTdc;
    } else {
      throw ConfigError("algorithm: expected td, averaged_td, off_policy_td or tdc, got '" + *v + "'");
    }
  }

  StepsizePlan& p = c.stepsize;
  p.eta = 0.01;
  if (auto v = get("stepsize.mode")) {
    if (*v == "fixed") {
      p.mode = StepsizeMode::kFixed;
    } else if (*v == "theorem1") {
      p.mode = StepsizeMode::kTheorem1;
    } else if (*v == "corollary2") {
      p.mode = StepsizeMode::kCorollary2;
    } else {
      throw ConfigError("stepsize.mode: expected fixed, theorem1 or corollary2, got '" + *v + "'");
    }
  }
  if (auto v = get("stepsize.eta")) p.eta = to_double("stepsize.eta", *v);
  if (auto v = get("stepsize.alpha")) p.alpha = to_double("stepsize.alpha", *v);
  if (auto v = get("stepsize.beta")) p.beta = to_double("stepsize.beta", *v);
  if (auto v = get("stepsize.c0")) p.c0 = to_double("stepsize.c0", *v);
  if (auto v = get("stepsize.c1")) p.c1 = to_double("stepsize.c1", *v);
  if (auto v = get("stepsize.delta")) p.delta = to_double("stepsize.delta", *v);
  if (auto v = get("stepsize.theta_norm_estimate")) {
    p.theta_norm_estimate = to_double("stepsize.theta_norm_estimate", *v);
  }
  if (p.eta < 0.0 || p.alpha < 0.0 || p.beta < 0.0) throw ConfigError("stepsizes must be nonnegative");
  if (!(p.c0 > 0.0) || !(p.c1 > 0.0)) throw ConfigError("stepsize.c0 and stepsize.c1 must be positive");
  if (!(p.delta > 0.0 && p.delta < 1.0)) throw ConfigError("stepsize.delta must lie in (0, 1)");
  if (c.algorithm == Algorithm::kTdc && p.mode == StepsizeMode::kTheorem1) {
    throw ConfigError("stepsize.mode = theorem1 applies to TD-type algorithms, not tdc");
  }
  if (c.algorithm != Algorithm::kTdc && p.mode == StepsizeMode::kCorollary2) {
    throw ConfigError("stepsize.mode = corollary2 applies to tdc only");
  }

  if (auto v = get("theta0")) {
    if (*v != "default") {
      const auto items = split_list(*v);
      if (items.empty()) throw ConfigError("theta0: empty vector");
      Vec theta(static_cast<Eigen::Index>(items.size()));
      for (std::size_t i = 0; i < items.size(); ++i) theta(static_cast<Eigen::Index>(i)) = to_double("theta0", items[i]);
      c.theta0 = theta;
    }
  }

  if (auto v = get("T")) c.T = to_uint("T", *v);
  if (c.T < 1) throw ConfigError("T must be at least 1");
  if (auto v = get("n_trials")) c.n_trials = to_uint("n_trials", *v);
  if (c.n_trials < 1) throw ConfigError("n_trials must be at least 1");
  if (auto v = get("seed")) c.seed = to_uint("seed", *v);
  if (auto v = get("checkpoints")) c.checkpoint_spec = *v;
  c.checkpoints = parse_checkpoints(c.checkpoint_spec, c.T);
  if (auto v = get("output")) c.output = *v;
  if (c.output.empty()) throw ConfigError("output prefix must not be empty");
  return c;
}

}  // namespace

std::vector<std::uint64_t> log_checkpoints(std::uint64_t T, std::size_t count) {
  if (T == 0) throw ConfigError("log_checkpoints: T must be at least 1");
  const double lo = std::log10(static_cast<double>(std::min<std::uint64_t>(10, T)));
  const double hi = std::log10(static_cast<double>(T));
  std::vector<std::uint64_t> out;
  for (std::size_t k = 0; k < count; ++k) {
    const double frac = count == 1 ? 1.0 : static_cast<double>(k) / static_cast<double>(count - 1);
    auto step = static_cast<std::uint64_t>(std::llround(std::pow(10.0, lo + frac * (hi - lo))));
    step = std::clamp<std::uint64_t>(step, 1, T);
    if (out.empty() || step > out.back()) out.push_back(step);
  }
  if (out.back() != T) out.push_back(T);
  return out;
}

ExperimentConfig parse_config(const std::string& text, const std::vector<std::string>& overrides) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    auto [key, value] = split_assignment(line, "line " + std::to_string(line_no));
    if (!known_keys().count(key)) throw ConfigError("line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    if (kv.count(key)) throw ConfigError("line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    kv[key] = value;
  }
  for (const auto& o : overrides) {
    auto [key, value] = split_assignment(o, "--set");
    if (!known_keys().count(key)) throw ConfigError("--set: unknown key '" + key + "'");
    kv[key] = value;
  }
  return interpret(kv);
}

ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path + ": " + std::strerror(errno));
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), overrides);
}

std::string render_config(const ExperimentConfig& c) {
  std::ostringstream out;
  out << "instance = " << to_string(c.instance) << "\n";
  if (c.instance == InstanceKind::kFile) out << "instance.path = " << c.instance_path << "\n";
  if (c.instance == InstanceKind::kMinimax) {
    out << "minimax.n_states = " << c.minimax.n_states << "\n";
    out << "minimax.d = " << c.minimax.d << "\n";
    out << "minimax.gamma = " << fmt(c.minimax.gamma) << "\n";
    out << "minimax.epsilon = " << fmt(c.minimax.epsilon) << "\n";
    if (c.minimax.epsilon_bound) out << "minimax.epsilon_bound = " << fmt(*c.minimax.epsilon_bound) << "\n";
    if (!c.minimax.signs.empty()) {
      out << "minimax.signs = ";
      for (int s : c.minimax.signs) out << (s > 0 ? '+' : '-');
      out << "\n";
    }
  }
  out << "algorithm = " << to_string(c.algorithm) << "\n";
  const StepsizePlan& p = c.stepsize;
  out << "stepsize.mode = " << to_string(p.mode) << "\n";
  out << "stepsize.eta = " << fmt(p.eta) << "\n";
  out << "stepsize.alpha = " << fmt(p.alpha) << "\n";
  out << "stepsize.beta = " << fmt(p.beta) << "\n";
  out << "stepsize.c0 = " << fmt(p.c0) << "\n";
  out << "stepsize.c1 = " << fmt(p.c1) << "\n";
  out << "stepsize.delta = " << fmt(p.delta) << "\n";
  if (p.theta_norm_estimate) out << "stepsize.theta_norm_estimate = " << fmt(*p.theta_norm_estimate) << "\n";
  out << "theta0 = ";
  if (c.theta0) {
    for (Eigen::Index i = 0; i < c.theta0->size(); ++i) out << (i ? "," : "") << fmt((*c.theta0)(i));
  } else {
    out << "default";
  }
  out << "\n";
  out << "T = " << c.T << "\n";
  out << "n_trials = " << c.n_trials << "\n";
  out << "seed = " << c.seed << "\n";
  out << "checkpoints = " << c.checkpoint_spec << "\n";
  out << "output = " << c.output << "\n";
  return out.str();
}

std::vector<std::string> preset_names() { return {"minimax-fig1", "baird-fig3"}; }

ExperimentConfig preset_config(const std::string& name) {
  if (name == "minimax-fig1") {
    return parse_config(
        "instance = minimax\n"
        "minimax.n_states = 10\n"
        "minimax.d = 3\n"
        "minimax.gamma = 0.2\n"
        "minimax.epsilon = 0.02\n"
        "algorithm = averaged_td\n"
        "stepsize.mode = fixed\n"
        "stepsize.eta = 0.01\n"
        "T = 100000\n"
        "n_trials = 100\n"
        "output = minimax_fig1\n");
  }
  if (name == "baird-fig3") {
    return parse_config(
        "instance = baird\n"
        "algorithm = tdc\n"
        "stepsize.mode = fixed\n"
        "stepsize.eta = 0.02\n"
        "stepsize.alpha = 0.02\n"
        "stepsize.beta = 0.002\n"
        "theta0 = 1,1,1,1,1,1,10,1\n"
        "T = 100000\n"
        "n_trials = 100\n"
        "output = baird_fig3\n");
  }
  throw ConfigError("unknown preset '" + name + "' (known: minimax-fig1, baird-fig3)");
}

}  // namespace tdlab
