#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <doctest.h>

#include "wng/run_log.hpp"

using namespace wng;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("empty log is header only") {
  const fs::path p = fs::temp_directory_path() / "wng_unit_empty.csv";
  write_log(RunLog{}, p);
  CHECK(slurp(p) == "iteration,metric,value,seed,wall_ms\n");
  fs::remove(p);
}

TEST_CASE("values round-trip and rows are sorted") {
  RunLog log;
  log.add(1, "loss", 0.1, 1);
  log.add(0, "loss", 0.7, 1);
  log.add(3, "loss", 1e-300, 0);
  log.add(0, "b", 2.0, 0);
  log.add(0, "a", 3.0, 0);
  const fs::path p = fs::temp_directory_path() / "wng_unit_log.csv";
  write_log(log, p);
  const auto rows = read_log(p).rows();
  fs::remove(p);
  REQUIRE(rows.size() == 5);
  CHECK(rows[0].metric == "a");
  CHECK(rows[1].metric == "b");
  CHECK(rows[2].iteration == 3);
  CHECK(rows[3].seed == 1);
  CHECK(rows[3].iteration == 0);
  CHECK(rows[4].value == 0.1);
  CHECK(rows[2].value == 1e-300);
}

TEST_CASE("write errors") {
  RunLog bad;
  bad.add(0, "x", INFINITY, 0);
  CHECK_THROWS_AS(write_log(bad, fs::temp_directory_path() / "wng_unit_bad.csv"), std::invalid_argument);
  const fs::path nowhere = fs::temp_directory_path() / "wng_no_such_dir" / "x.csv";
  try {
    write_log(RunLog{}, nowhere);
    FAIL("expected an I/O error");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find(nowhere.string()) != std::string::npos);
  }
}

TEST_CASE("format_log can drop timings") {
  RunLog log;
  log.add(0, "m", 1.0, 0, 12.5);
  CHECK(format_log(log, true).find("12.5") != std::string::npos);
  CHECK(format_log(log, false).find("12.5") == std::string::npos);
}

TEST_CASE("lookups") {
  RunLog log;
  log.add(0, "m", 1.0, 4);
  log.add(1, "m", 2.0, 4);
  CHECK(*log.last("m", 4) == 2.0);
  CHECK(*log.at("m", 0, 4) == 1.0);
  CHECK_FALSE(log.at("m", 2, 4));
  CHECK_FALSE(log.last("m", 5));
}
