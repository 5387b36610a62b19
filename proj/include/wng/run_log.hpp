#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace wng {

struct LogRow {
  std::int64_t iteration = 0;
  std::string metric;
  double value = 0.0;
  std::uint64_t seed = 0;
  double wall_ms = 0.0;
};

/// Per-iteration metrics of one or more runs.
class RunLog {
 public:
  void add(std::int64_t iteration, std::string metric, double value, std::uint64_t seed,
           double wall_ms = 0.0);
  void append(const RunLog& other);

  const std::vector<LogRow>& rows() const { return rows_; }
  bool empty() const { return rows_.empty(); }

  /// Last logged value of `metric` for `seed`.
  std::optional<double> last(const std::string& metric, std::uint64_t seed) const;
  /// Value of `metric` at `iteration`, if logged.
  std::optional<double> at(const std::string& metric, std::int64_t iteration, std::uint64_t seed) const;
  std::vector<double> series(const std::string& metric, std::uint64_t seed) const;

  /// Rows sorted by (seed, iteration, metric); stable for equal keys.
  std::vector<LogRow> sorted_rows() const;

 private:
  std::vector<LogRow> rows_;
};

inline constexpr const char* kLogHeader = "iteration,metric,value,seed,wall_ms";

/// Writes the CSV schema `iteration,metric,value,seed,wall_ms` with values at
/// 17 significant digits. Throws std::runtime_error naming the path on I/O
/// failure, and std::invalid_argument on non-finite values.
void write_log(const RunLog& log, const std::filesystem::path& path);

/// CSV text for `log`; `include_wall_ms = false` blanks the timing column,
/// which is what determinism checks compare.
std::string format_log(const RunLog& log, bool include_wall_ms = true);

RunLog read_log(const std::filesystem::path& path);

}  // namespace wng
