#pragma once

// Registry of named, seeded, tolerance-tagged checks over the algebra,
// series and Monte Carlo layers, and a JSON report of a suite run.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "conebessel/errors.h"

namespace conebessel {

enum class ToleranceKind { absolute, relative, mc_sigma };

std::string to_string(ToleranceKind k);

struct CheckSpec {
  std::string name;
  std::string anchor;  // the identity or result the check exercises
  ToleranceKind tolerance_kind = ToleranceKind::absolute;
  std::map<std::string, double> params;

  double param(const std::string& key) const;
};

struct CheckResult {
  CheckSpec spec;
  bool passed = false;
  double observed = 0.0;  // NaN if the check raised
  double bound = 0.0;
  std::int64_t work = 0;
  double wall_time = 0.0;  // seconds
  int attempts = 1;
  std::string diagnostics;
};

struct Report {
  std::string suite;
  std::uint64_t seed = 0;
  std::vector<CheckResult> results;
  int pass = 0;
  int fail = 0;
};

// All checks in declared order.
const std::vector<CheckSpec>& registered_checks();
// Throws UsageError listing the registered names.
const CheckSpec& find_check(const std::string& name);

// Seed used for a named check within a suite run.
std::uint64_t check_seed(std::uint64_t suite_seed, const std::string& name);

// Deterministic for a fixed spec (its "seed" param included); errors from
// the underlying operations become failed results. threads only affects
// wall time.
CheckResult run_check(const CheckSpec& spec, int threads = 1);

// names empty or {"all"} runs everything.
Report run_suite(const std::vector<std::string>& names, std::uint64_t seed, int threads = 1);

std::string report_json(const Report& r, bool include_timing = false);

}  // namespace conebessel
