#pragma once

// Shared plumbing for the property checks.

#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "verify/property_suite.hpp"
#include "wng/kernel.hpp"

namespace wng::verify {

inline std::string format(const char* fmt, ...) {
  char buf[512];
  va_list args;
  va_start(args, fmt);
  std::vsnprintf(buf, sizeof buf, fmt, args);
  va_end(args);
  return buf;
}

/// Collects failed expectations; the check passes if none failed.
class Tally {
 public:
  bool expect(bool ok, const std::string& what) {
    ++count_;
    if (!ok && failures_.size() < 4) failures_.push_back(what);
    if (!ok) ++failed_;
    return ok;
  }

  bool near(double actual, double expected, double tol, const char* what) {
    return expect(std::abs(actual - expected) <= tol,
                  format("%s: got %.10g, want %.10g (tol %.2g)", what, actual, expected, tol));
  }

  CheckResult result(std::string summary = {}) const {
    if (failed_ == 0) return {true, summary.empty() ? format("%d expectations", count_) : summary};
    std::string d = format("%d of %d failed", failed_, count_);
    for (const std::string& f : failures_) d += "; " + f;
    if (!summary.empty()) d += "; " + summary;
    return {false, d};
  }

 private:
  int count_ = 0;
  int failed_ = 0;
  std::vector<std::string> failures_;
};

inline double relative_error(const Vec& a, const Vec& b) {
  const double scale = std::max(b.norm(), 1e-300);
  return (a - b).norm() / scale;
}

inline double relative_error(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

inline double cosine(const Vec& a, const Vec& b) { return a.dot(b) / (a.norm() * b.norm()); }

template <class F>
bool throws(F&& f) {
  try {
    f();
  } catch (...) {
    return true;
  }
  return false;
}

template <class E, class F>
bool throws_as(F&& f) {
  try {
    f();
  } catch (const E&) {
    return true;
  } catch (...) {
    return false;
  }
  return false;
}

/// Distance of the WNPG bandit mean from its target after `iterations` updates.
double bandit_error(std::uint64_t seed, int iterations);

int analytic_wim_trials(int trials, int samples, double epsilon, double bandwidth, double* median_error);

void register_core_checks(std::vector<PropertyCheck>& out);
void register_lab_checks(std::vector<PropertyCheck>& out);
void register_rl_checks(std::vector<PropertyCheck>& out);

}  // namespace wng::verify
