#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace wng::verify {

struct CheckResult {
  bool passed = false;
  std::string detail;
};

struct PropertyCheck {
  std::string name;  // "<module>.<property>"
  std::function<CheckResult()> run;
};

/// Every registered property check, grouped by module.
const std::vector<PropertyCheck>& property_checks();

const PropertyCheck* find_check(std::string_view name);

/// Runs the checks whose name starts with `prefix` (all when empty),
/// printing one PASS/FAIL line each. Returns the number of failures; an
/// exception thrown by a check counts as a failure.
int run_property_suite(std::string_view prefix, std::ostream& out);

/// Runs one check, converting exceptions into failures.
CheckResult run_check(const PropertyCheck& check);

}  // namespace wng::verify
