#pragma once

// Property suite behind `ctraj validate`: one row per module invariant, with
// the measured value and its tolerance. Reports contain no timings, so two
// runs produce identical text.

#include <string>
#include <vector>

namespace ctraj::cli {

struct Check {
  std::string module;
  std::string name;
  double value;
  double tolerance;
  bool pass;
};

struct SuiteReport {
  std::vector<Check> checks;
  bool allPass() const;
};

/// All modules. fault = "energy-map" perturbs the E(m) map by 1e-6 inside
/// the parameter-map consistency check.
SuiteReport run_validation(const std::string& fault = "");

/// Special-function oracle equivalence only.
SuiteReport run_specfun_validation();

std::string format_report(const SuiteReport& report);

}  // namespace ctraj::cli
