#include <set>

#include "alp/checks.hpp"
#include "alp/errors.hpp"
#include "alp/pricing.hpp"
#include "doctest.h"

using namespace alp;

TEST_CASE("invariant suite passes on a clean build") {
  const auto results = run_checks();
  std::set<std::string> groups;
  for (const auto& r : results) {
    CHECK_MESSAGE(r.pass, r.group << "/" << r.name << " value " << r.value << " tolerance " << r.tolerance);
    groups.insert(r.group);
  }
  CHECK(groups.size() == check_groups().size());
}

TEST_CASE("one group at a time") {
  const auto parity = run_checks({"parity"});
  REQUIRE(!parity.empty());
  for (const auto& r : parity) CHECK(r.group == "parity");
  CHECK_THROWS_AS(run_checks({"nonsense"}), InvalidArgument);
}

TEST_CASE("a flipped drift sign is caught") {
  testing::set_drift_sign_fault(true);
  const auto results = run_checks({"martingale", "oracle"});
  testing::set_drift_sign_fault(false);
  bool martingale_failed = false, oracle_failed = false;
  for (const auto& r : results) {
    if (r.group == "martingale" && !r.pass) martingale_failed = true;
    if (r.group == "oracle" && !r.pass) oracle_failed = true;
  }
  CHECK(martingale_failed);
  CHECK(oracle_failed);
  for (const auto& r : run_checks({"martingale"})) CHECK(r.pass);
}
