#pragma once

// Run configuration: flat `key = value` text grouped in [sections], layered
// as defaults < config file < CTRAJ_OUTPUT_DIR < command-line overrides.
// Every key is checked against a fixed table before any numerical work.

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ctraj/observables.hpp"

namespace ctraj::cli {

/// Names the offending key; commands map it to exit status 1.
class ConfigError : public std::runtime_error {
public:
  ConfigError(const std::string& key, const std::string& what)
      : std::runtime_error(key.empty() ? what : "[" + key + "] " + what), key_(key) {}
  const std::string& key() const noexcept { return key_; }

private:
  std::string key_;
};

inline constexpr const char* kOutputDirEnv = "CTRAJ_OUTPUT_DIR";

struct RunConfig {
  PotentialKind potential = PotentialKind::Quartic;
  BoundaryData boundary;
  int branch = 0;
  double couplingScale = 1.0;

  std::string outDir = "out";
  std::vector<std::string> formats{"csv", "json"};

  std::vector<double> scanT{20.0, 30.0, 40.0};

  std::vector<double> hbarEff{0.06, 0.08, 0.10, 0.12};
  double oracleT = 200.0;
  int oracleN = 0;
  double oracleFilterTime = 60.0;
  bool oracleGridCheck = false;

  PointerConfig pointer;
  std::optional<double> tmMin, tmMax;
  int tmCount = 201;

  cplx fig2M{0.0, 0.1};
  cplx fig2T0{0.0};

  bool wants(const std::string& format) const;
  Potential make_potential() const { return Potential::of_kind(potential, couplingScale); }
};

/// Raw assignments in application order.
using Assignments = std::vector<std::pair<std::string, std::string>>;

/// Parses config text; keys become "section.key". Throws ConfigError on
/// syntax errors and unknown keys.
Assignments parse_config_text(const std::string& text, const std::string& origin = "config");
Assignments parse_config_file(const std::string& path);

/// "k=v" from --set.
std::pair<std::string, std::string> parse_assignment(const std::string& kv);

/// Applies one assignment with type checking.
void apply(RunConfig& config, const std::string& key, const std::string& value);

/// Known keys in table order.
const std::vector<std::string>& known_keys();

/// Accepts "inf", "a", "bi", "a+bi", "a-bi" (also with "j").
cplx parse_complex(const std::string& text);
std::vector<double> parse_list(const std::string& text);

/// Cross-field checks shared by all commands (boundary data, pointer block).
void validate_common(const RunConfig& config);

}  // namespace ctraj::cli
