// ctraj: complex classical tunneling trajectories from the command line.

#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "commands.hpp"
#include "config.hpp"

namespace {

using namespace ctraj::cli;

struct FlagKey {
  const char* flag;
  const char* key;
  const char* help;
};

// Named flags, each an alias for one configuration key.
const FlagKey kFlags[] = {
    {"--potential", "problem.potential", "quartic | cubic"},
    {"--ti", "problem.t_i", "initial time"},
    {"--tf", "problem.t_f", "final time"},
    {"--xf", "problem.x_f", "final position (complex or inf)"},
    {"--L", "problem.L", "initial Gaussian width"},
    {"--branch", "problem.branch", "Lambert-W branch index n"},
    {"--coupling-scale", "problem.coupling_scale", "S0/hbar multiplier"},
    {"--T", "scan.T", "comma-separated T list for scan"},
    {"--hbar", "oracle.hbar_eff", "comma-separated hbarEff list for oracle"},
    {"--tm-min", "pointer.t_m_min", "first pointer time"},
    {"--tm-max", "pointer.t_m_max", "last pointer time"},
    {"--tm-count", "pointer.t_m_count", "number of pointer times"},
    {"--g", "pointer.g", "pointer coupling"},
    {"--delta-x", "pointer.delta_x", "pointer width"},
    {"--hbar-eff", "pointer.hbar_eff", "effective Planck constant for dP"},
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Complex classical trajectories for post-selected tunneling"};
  app.require_subcommand(1);

  std::string configPath, outDir;
  std::vector<std::string> sets;
  std::vector<std::string> flagValues(std::size(kFlags));
  std::vector<CLI::Option*> flagOptions;
  app.add_option("--config", configPath, "key = value file with [sections]");
  app.add_option("--set", sets, "override one key (section.key=value), repeatable");
  app.add_option("--out", outDir, "output directory (overrides " + std::string(kOutputDirEnv) + ")");
  for (std::size_t i = 0; i < std::size(kFlags); ++i)
    flagOptions.push_back(
        app.add_option(kFlags[i].flag, flagValues[i], std::string(kFlags[i].help) + " [" + kFlags[i].key + "]"));

  auto* solve = app.add_subcommand("solve", "solve the boundary-value problem and write the trajectory");
  auto* figure = app.add_subcommand("figure", "write figure data (fig1, fig2, fig3)");
  std::string which;
  figure->add_option("which", which, "fig1 | fig2 | fig3")->required();
  auto* scan = app.add_subcommand("scan", "sweep T and tabulate excursion observables");
  auto* pointer = app.add_subcommand("pointer", "weak-measurement pointer shifts over a t_m grid");
  auto* oracleCmd = app.add_subcommand("oracle", "split-step wave-packet rate sweep over hbarEff");
  auto* validate = app.add_subcommand("validate", "run the property suite");
  std::string suite, fault;
  validate->add_option("suite", suite, "optional: specfun");
  validate->add_option("--inject-fault", fault)->group("");
  for (auto* sub : {solve, figure, scan, pointer, oracleCmd, validate}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kConfigError;
  }

  RunConfig config;
  try {
    if (!configPath.empty())
      for (const auto& [k, v] : parse_config_file(configPath)) apply(config, k, v);
    if (const char* env = std::getenv(kOutputDirEnv); env && *env) config.outDir = env;
    for (const auto& s : sets) {
      const auto [k, v] = parse_assignment(s);
      apply(config, k, v);
    }
    for (std::size_t i = 0; i < std::size(kFlags); ++i)
      if (flagOptions[i]->count() > 0) apply(config, kFlags[i].key, flagValues[i]);
    if (!outDir.empty()) config.outDir = outDir;
  } catch (const ConfigError& e) {
    std::cerr << "config error " << e.what() << "\n";
    return kConfigError;
  }

  std::ostream& out = std::cout;
  if (*solve) return cmd_solve(config, out);
  if (*figure) return cmd_figure(config, which, out);
  if (*scan) return cmd_scan(config, out);
  if (*pointer) return cmd_pointer(config, out);
  if (*oracleCmd) return cmd_oracle(config, out);
  if (*validate) return cmd_validate(config, suite, fault, out);
  return kConfigError;
}
