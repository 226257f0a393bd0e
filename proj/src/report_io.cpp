#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>

#include "tdlab/errors.hpp"
#include "tdlab/experiment.hpp"

namespace tdlab {

std::string format_number(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string trace_csv(const ExperimentResult& result) {
  std::string out = "trial,step,error,diverged\n";
  for (const auto& tr : result.traces) {
    for (std::size_t k = 0; k < result.checkpoints.size(); ++k) {
      const bool div = tr.diverged_at && result.checkpoints[k] >= *tr.diverged_at;
      out += std::to_string(tr.trial) + ',' + std::to_string(result.checkpoints[k]) + ',' +
             format_number(tr.errors[k]) + ',' + (div ? '1' : '0') + '\n';
    }
  }
  return out;
}

std::string summary_csv(const std::vector<SummaryRow>& summary) {
  std::string out = "step,mean,lo95,hi95\n";
  for (const auto& r : summary) {
    out += std::to_string(r.step) + ',' + format_number(r.mean) + ',' + format_number(r.lo95) + ',' +
           format_number(r.hi95) + '\n';
  }
  return out;
}

std::string divergence_csv(const std::vector<SummaryRow>& summary) {
  std::string out = "step,diverged,finite\n";
  for (const auto& r : summary) {
    out += std::to_string(r.step) + ',' + std::to_string(r.diverged) + ',' + std::to_string(r.finite) + '\n';
  }
  return out;
}

std::string manifest_text(const ExperimentResult& result, const ExperimentConfig& config) {
  std::ostringstream out;
  out << "# resolved configuration\n" << render_config(config);
  out << "# derived\n";
  out << "checkpoint_count = " << result.checkpoints.size() << "\n";
  for (const auto& [key, value] : result.manifest) out << key << " = " << value << "\n";
  return out.str();
}

namespace {

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing: " + std::strerror(errno));
  out << content;
  out.flush();
  if (!out) throw IoError("write failed for " + path + ": " + std::strerror(errno));
}

double parse_field(const std::string& field, int line) {
  const char* begin = field.c_str();
  char* end = nullptr;
  const double x = std::strtod(begin, &end);
  if (field.empty() || end != begin + field.size()) {
    throw ConfigError("summary CSV line " + std::to_string(line) + ": bad number '" + field + "'");
  }
  return x;
}

}  // namespace

void emit(const ExperimentResult& result, const ExperimentConfig& config, const std::string& prefix) {
  write_file(prefix + "_trace.csv", trace_csv(result));
  write_file(prefix + "_summary.csv", summary_csv(result.summary));
  write_file(prefix + "_divergence.csv", divergence_csv(result.summary));
  write_file(prefix + "_manifest.txt", manifest_text(result, config));
}

std::vector<SummaryRow> parse_summary_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "step,mean,lo95,hi95") {
    throw ConfigError("summary CSV: expected header 'step,mean,lo95,hi95'");
  }
  std::vector<SummaryRow> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    if (fields.size() != 4) throw ConfigError("summary CSV line " + std::to_string(line_no) + ": expected 4 fields");
    SummaryRow r;
    const double step = parse_field(fields[0], line_no);
    if (!(step >= 1.0) || step != std::floor(step)) {
      throw ConfigError("summary CSV line " + std::to_string(line_no) + ": bad step");
    }
    r.step = static_cast<std::uint64_t>(step);
    r.mean = parse_field(fields[1], line_no);
    r.lo95 = parse_field(fields[2], line_no);
    r.hi95 = parse_field(fields[3], line_no);
    rows.push_back(r);
  }
  return rows;
}

std::vector<SummaryRow> load_summary_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path + ": " + std::strerror(errno));
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_summary_csv(buf.str());
}

}  // namespace tdlab
