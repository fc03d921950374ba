#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace qmlab::checks {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

// Desk-scale invariant suite over every module; a few seconds on one core.
std::vector<CheckResult> run_invariant_suite(std::uint64_t seed);

}  // namespace qmlab::checks
