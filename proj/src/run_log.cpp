#include "wng/run_log.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <tuple>

namespace wng {

void RunLog::add(std::int64_t iteration, std::string metric, double value, std::uint64_t seed,
                 double wall_ms) {
  rows_.push_back({iteration, std::move(metric), value, seed, wall_ms});
}

void RunLog::append(const RunLog& other) {
  rows_.insert(rows_.end(), other.rows_.begin(), other.rows_.end());
}

std::optional<double> RunLog::last(const std::string& metric, std::uint64_t seed) const {
  for (auto it = rows_.rbegin(); it != rows_.rend(); ++it) {
    if (it->seed == seed && it->metric == metric) return it->value;
  }
  return std::nullopt;
}

std::optional<double> RunLog::at(const std::string& metric, std::int64_t iteration,
                                 std::uint64_t seed) const {
  for (const auto& r : rows_) {
    if (r.seed == seed && r.iteration == iteration && r.metric == metric) return r.value;
  }
  return std::nullopt;
}

std::vector<double> RunLog::series(const std::string& metric, std::uint64_t seed) const {
  std::vector<double> out;
  for (const auto& r : rows_) {
    if (r.seed == seed && r.metric == metric) out.push_back(r.value);
  }
  return out;
}

std::vector<LogRow> RunLog::sorted_rows() const {
  std::vector<LogRow> out = rows_;
  std::stable_sort(out.begin(), out.end(), [](const LogRow& a, const LogRow& b) {
    return std::tie(a.seed, a.iteration, a.metric) < std::tie(b.seed, b.iteration, b.metric);
  });
  return out;
}

namespace {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string format_log(const RunLog& log, bool include_wall_ms) {
  std::ostringstream os;
  os << kLogHeader << '\n';
  for (const auto& r : log.sorted_rows()) {
    if (!std::isfinite(r.value)) {
      throw std::invalid_argument("write_log: non-finite value for metric '" + r.metric + "'");
    }
    os << r.iteration << ',' << r.metric << ',' << format_double(r.value) << ',' << r.seed << ',';
    if (include_wall_ms) os << format_double(r.wall_ms);
    os << '\n';
  }
  return os.str();
}

void write_log(const RunLog& log, const std::filesystem::path& path) {
  const std::string text = format_log(log);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("write_log: cannot open '" + path.string() + "' for writing");
  out << text;
  out.flush();
  if (!out) throw std::runtime_error("write_log: write failed for '" + path.string() + "'");
}

RunLog read_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_log: cannot open '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line) || line != kLogHeader) {
    throw std::runtime_error("read_log: '" + path.string() + "' lacks the expected header");
  }
  RunLog log;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string it, metric, value, seed, wall;
    std::getline(ls, it, ',');
    std::getline(ls, metric, ',');
    std::getline(ls, value, ',');
    std::getline(ls, seed, ',');
    std::getline(ls, wall, ',');
    log.add(std::stoll(it), metric, std::strtod(value.c_str(), nullptr), std::stoull(seed),
            wall.empty() ? 0.0 : std::strtod(wall.c_str(), nullptr));
  }
  return log;
}

}  // namespace wng
