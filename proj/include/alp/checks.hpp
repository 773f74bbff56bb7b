#pragma once

// Self-contained invariant suite run by `alp check`.

#include <string>
#include <vector>

namespace alp {

struct CheckResult {
  std::string group;
  std::string name;
  double value = 0.0;      // measured error (or violation)
  double tolerance = 0.0;
  bool pass = false;
};

/// special, charfn, lk, parity, martingale, oracle, gradient, feasibility
const std::vector<std::string>& check_groups();

/// Runs the named groups (all when `only` is empty). Unknown names throw InvalidArgument.
std::vector<CheckResult> run_checks(const std::vector<std::string>& only = {});

}  // namespace alp
