#pragma once

// Mixed boundary-value problem for post-selected tunneling: positive-frequency
// initial condition x + 2iL^2 x' = 0 at t_i and a final position at t_f
// (default: the escape pole, x_f = infinity). Lambert-W seeds for the
// integration constants are refined by damped complex Newton iteration.

#include <optional>
#include <string>
#include <utility>

#include "ctraj/dynamics.hpp"

namespace ctraj {

struct BoundaryData {
  double t_i = -30.0;
  double t_f = 0.0;
  std::optional<cplx> x_f;  // nullopt means infinity
  double L = 0.70710678118654752440;

  double T() const { return t_f - t_i; }
  bool infinite() const { return !x_f.has_value(); }

  /// Throws std::invalid_argument naming the violated condition.
  void validate(const Potential& p) const;
};

struct Residual {
  cplx init{0.0};
  cplx final{0.0};
  double norm() const { return std::max(std::abs(init), std::abs(final)); }
};

/// Raised when the Newton Jacobian is singular at the current iterate.
class BifurcationError : public std::runtime_error {
public:
  explicit BifurcationError(const std::string& what) : std::runtime_error(what) {}
};

struct SolveReport {
  TrajectoryParams params;
  int branch = 0;
  int iterations = 0;
  Residual residual;
  cplx seedEpsilon{0.0};
  cplx seedM{0.0};
  bool converged = false;
  /// Refined epsilon: m = i eps (quartic), m^2 = i eps (cubic).
  cplx epsilon{0.0};
  bool transient = false;          // n < 0
  bool finalFallback = false;      // |x_f| < 10: full final residual solve
  bool rangeWarning = false;       // T below the asymptotic window
  bool conditioningWarning = false;  // Lambert argument near the branch point
};

/// x(t_i) + 2iL^2 x'(t_i) on the closed form.
cplx initial_condition_residual(const TrajectoryParams& params, const BoundaryData& boundary);

struct FinalCondition {
  cplx t0;
  double errorEstimate;  // O(x_f^-3) quartic, O(x_f^-3/2) cubic; 0 at infinity
  bool fallback;         // |x_f| < 10
};

/// Pole time reached at x_f: t0 = t_f (infinity), t_f + 1/x_f (quartic),
/// t_f + sqrt(6/x_f) (cubic).
FinalCondition final_condition_t0(PotentialKind kind, std::optional<cplx> x_f, double t_f);

struct Seed {
  cplx epsilon;
  cplx m;
  bool rangeWarning;
  bool conditioningWarning;
  /// |lhs - rhs| / |rhs| of the transcendental equation.
  double equationResidual;
};

/// quartic: 3 eps T exp(3 eps T) = 48 i T exp(-4iT), m = i eps
/// cubic:   (45/64) eps T exp((45/64) eps T) = -180 i T exp(-3iT), m = sqrt(i eps)
Seed seed_epsilon(PotentialKind kind, double T, int branch);

struct NewtonOptions {
  int maxIterations = 50;
  double tolerance = 1e-10;
};

/// Residual pair for the given params (final part is t0 - t_f at infinity).
Residual boundary_residual(const TrajectoryParams& params, const BoundaryData& boundary);

SolveReport newton_refine(const TrajectoryParams& seed, const BoundaryData& boundary,
                          const NewtonOptions& options = {});

struct SolveOptions {
  NewtonOptions newton;
  int samples = 2001;
  double runawayThreshold = 1e3;
};

/// Seeds, refines and samples the closed form on [t_i, t_f - delta], where
/// delta keeps |x| at or below the runaway threshold.
std::pair<SolveReport, Trajectory> solve_tunneling(const Potential& potential,
                                                   const BoundaryData& boundary, int branch,
                                                   const SolveOptions& options = {});

/// Real-axis cutoff delta >= 0 such that |x(t_f - delta)| = threshold, or 0
/// when |x| stays below it.
double runaway_cutoff(const TrajectoryParams& params, const BoundaryData& boundary, double threshold);

std::string solve_report_json(const SolveReport& report, const BoundaryData& boundary);

}  // namespace ctraj
