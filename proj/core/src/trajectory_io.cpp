#include "asap/trajectory_io.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <system_error>

#include <json.hpp>

namespace asap {

namespace {

constexpr std::array<const char*, 8> kColumns = {
    "method", "run",   "standard_trials", "comparisons", "rmse",
    "srocc",  "srocc_fisher", "eig_evaluated_fraction"};

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

double parse_double(const std::string& text, std::size_t line, const char* column) {
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ValidationError("line " + std::to_string(line) + ": column " + column +
                          " is not a number: '" + text + "'");
  }
  return value;
}

nlohmann::ordered_json stat_json(const SummaryStat& s) {
  return {{"mean", s.mean}, {"p12_5", s.p12_5}, {"p87_5", s.p87_5},
          {"std_error", s.std_error}};
}

}  // namespace

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  if (ec != std::errc()) throw std::runtime_error("format_number failed");
  return std::string(buf.data(), ptr);
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw std::runtime_error("cannot rename into " + path.string() + ": " + ec.message());
  }
}

void write_trajectory_csv(std::ostream& out, const std::vector<RunTrajectory>& runs) {
  for (std::size_t c = 0; c < kColumns.size(); ++c) {
    out << (c ? "," : "") << kColumns[c];
  }
  out << '\n';
  for (const auto& r : runs) {
    for (const auto& p : r.points) {
      out << r.method << ',' << r.run << ',' << format_number(p.standard_trials) << ','
          << p.comparisons << ',' << format_number(p.rmse) << ','
          << format_number(p.srocc) << ',' << format_number(p.srocc_fisher) << ',';
      if (p.eig_evaluated_fraction) out << format_number(*p.eig_evaluated_fraction);
      out << '\n';
    }
  }
}

std::string trajectory_csv(const std::vector<RunTrajectory>& runs) {
  std::ostringstream out;
  write_trajectory_csv(out, runs);
  return out.str();
}

std::vector<RunTrajectory> read_trajectory_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.find_first_not_of(" \t\r") == std::string::npos) {
    throw ValidationError("trajectory file is empty");
  }
  const auto header = split_csv_line(line);
  std::array<std::size_t, kColumns.size()> index{};
  for (std::size_t c = 0; c < kColumns.size(); ++c) {
    std::size_t found = header.size();
    for (std::size_t h = 0; h < header.size(); ++h) {
      if (header[h] == kColumns[c]) found = h;
    }
    if (found == header.size()) {
      throw ValidationError(std::string("trajectory is missing column '") +
                            kColumns[c] + "'");
    }
    index[c] = found;
  }

  std::vector<RunTrajectory> runs;
  std::map<std::pair<std::string, std::size_t>, std::size_t> where;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto f = split_csv_line(line);
    if (f.size() != header.size()) {
      throw ValidationError("line " + std::to_string(line_no) + ": expected " +
                            std::to_string(header.size()) + " fields, got " +
                            std::to_string(f.size()));
    }
    const std::string& method = f[index[0]];
    const auto run = static_cast<std::size_t>(parse_double(f[index[1]], line_no, "run"));
    CheckpointMetrics p;
    p.standard_trials = parse_double(f[index[2]], line_no, "standard_trials");
    p.comparisons =
        static_cast<std::size_t>(parse_double(f[index[3]], line_no, "comparisons"));
    p.rmse = parse_double(f[index[4]], line_no, "rmse");
    p.srocc = parse_double(f[index[5]], line_no, "srocc");
    p.srocc_fisher = parse_double(f[index[6]], line_no, "srocc_fisher");
    if (!f[index[7]].empty()) {
      p.eig_evaluated_fraction = parse_double(f[index[7]], line_no, "eig_evaluated_fraction");
    }
    const auto key = std::make_pair(method, run);
    auto it = where.find(key);
    if (it == where.end()) {
      it = where.emplace(key, runs.size()).first;
      runs.push_back(RunTrajectory{method, run, {}, {}});
    }
    runs[it->second].points.push_back(p);
  }
  if (runs.empty()) throw ValidationError("trajectory file has no data rows");
  return runs;
}

std::vector<RunTrajectory> load_trajectory_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  return read_trajectory_csv(in);
}

std::string summary_json(const std::vector<MethodSummary>& summary,
                         const SummaryContext& context) {
  nlohmann::ordered_json root;
  if (context.config) {
    const auto& c = *context.config;
    nlohmann::ordered_json methods = nlohmann::ordered_json::array();
    for (const auto& m : c.methods) methods.push_back(m.label);
    root["settings"] = {{"n", c.n},
                        {"range", c.range.to_string()},
                        {"runs", c.runs},
                        {"trials", c.max_standard_trials},
                        {"seed", c.seed},
                        {"beta", c.model.beta},
                        {"methods", methods}};
    if (context.replay_source) root["settings"]["replay"] = *context.replay_source;
  }
  nlohmann::ordered_json out = nlohmann::ordered_json::array();
  for (const auto& m : summary) {
    nlohmann::ordered_json points = nlohmann::ordered_json::array();
    for (const auto& p : m.points) {
      nlohmann::ordered_json j = {{"standard_trials", p.standard_trials},
                                  {"comparisons", p.comparisons},
                                  {"runs", p.runs},
                                  {"rmse", stat_json(p.rmse)},
                                  {"srocc", stat_json(p.srocc)},
                                  {"srocc_fisher", stat_json(p.srocc_fisher)}};
      if (p.eig_evaluated_fraction) j["eig_evaluated_fraction"] = *p.eig_evaluated_fraction;
      points.push_back(std::move(j));
    }
    out.push_back({{"method", m.method}, {"points", std::move(points)}});
  }
  root["methods"] = std::move(out);
  return root.dump(2) + "\n";
}

double effort_hours(double comparisons, double seconds_per_comparison) {
  return comparisons * seconds_per_comparison / 3600.0;
}

EffortEstimate estimate_effort(const MethodSummary& summary, double target_rmse,
                               double seconds_per_comparison) {
  EffortEstimate e;
  e.method = summary.method;
  e.target_rmse = target_rmse;
  e.seconds_per_comparison = seconds_per_comparison;
  const auto& pts = summary.points;
  for (std::size_t k = 0; k < pts.size(); ++k) {
    if (pts[k].rmse.mean > target_rmse) continue;
    double c = static_cast<double>(pts[k].comparisons);
    if (k > 0) {
      const double c0 = static_cast<double>(pts[k - 1].comparisons);
      const double r0 = pts[k - 1].rmse.mean;
      const double r1 = pts[k].rmse.mean;
      if (r0 != r1) c = c0 + (r0 - target_rmse) / (r0 - r1) * (c - c0);
    }
    e.comparisons = c;
    e.hours = effort_hours(c, seconds_per_comparison);
    break;
  }
  return e;
}

}  // namespace asap
