#pragma once

#include <string>
#include <vector>

#include "risisac/scenario.hpp"

namespace risisac {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Invariant and closed-form checks over the numerical stack. Scenario-level
/// checks (AO monotonicity, heatmap coverage) run on `cfg` for `seeds` seeds.
std::vector<CheckResult> run_validation_suite(const ScenarioConfig& cfg, int seeds = 3);

}  // namespace risisac
