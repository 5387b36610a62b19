#include "verify/property_suite.hpp"

#include <exception>
#include <ostream>

#include "verify/checks.hpp"

namespace wng::verify {

const std::vector<PropertyCheck>& property_checks() {
  static const std::vector<PropertyCheck> checks = [] {
    std::vector<PropertyCheck> all;
    register_core_checks(all);
    register_lab_checks(all);
    register_rl_checks(all);
    return all;
  }();
  return checks;
}

const PropertyCheck* find_check(std::string_view name) {
  for (const PropertyCheck& c : property_checks()) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

CheckResult run_check(const PropertyCheck& check) {
  try {
    return check.run();
  } catch (const std::exception& e) {
    return {false, std::string("threw: ") + e.what()};
  }
}

int run_property_suite(std::string_view prefix, std::ostream& out) {
  int failed = 0;
  int ran = 0;
  for (const PropertyCheck& c : property_checks()) {
    if (!c.name.starts_with(prefix)) continue;
    ++ran;
    const CheckResult r = run_check(c);
    if (!r.passed) ++failed;
    out << (r.passed ? "PASS " : "FAIL ") << c.name << "  " << r.detail << '\n' << std::flush;
  }
  out << (ran - failed) << '/' << ran << " checks passed\n";
  return failed;
}

}  // namespace wng::verify
