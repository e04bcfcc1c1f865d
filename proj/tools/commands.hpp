#pragma once

#include <iosfwd>
#include <string>

#include "config.hpp"

namespace ctraj::cli {

enum ExitCode : int { kOk = 0, kConfigError = 1, kNotConverged = 2, kValidateFailed = 3 };

int cmd_solve(const RunConfig& config, std::ostream& out);
/// which: fig1 | fig2 | fig3.
int cmd_figure(const RunConfig& config, const std::string& which, std::ostream& out);
int cmd_scan(const RunConfig& config, std::ostream& out);
int cmd_pointer(const RunConfig& config, std::ostream& out);
int cmd_oracle(const RunConfig& config, std::ostream& out);
/// suite: "" (all modules) or "specfun"; fault: "" or "energy-map".
int cmd_validate(const RunConfig& config, const std::string& suite, const std::string& fault,
                 std::ostream& out);

/// Output path inside the configured directory.
std::string output_path(const RunConfig& config, const std::string& name);

/// File contents produced by the commands, exposed for golden tests.
std::string fig2_lattice_csv(const RunConfig& config);
std::string fig2_contour_csv(const RunConfig& config);
std::string figure_polyline_csv(const Trajectory& traj);
/// failures (optional) receives the number of rows whose solve failed.
std::string scan_csv(const RunConfig& config, int* failures = nullptr);
std::string pointer_csv(const Trajectory& traj, const RunConfig& config);

}  // namespace ctraj::cli
