#pragma once

// Action and probability exponents of a complex classical solution, complex
// time contours through its pole/zero lattice, imaginary-excursion diagnostics
// and first-order weak-measurement pointer shifts.

#include <string>
#include <vector>

#include "ctraj/bvp.hpp"

namespace ctraj {

/// Regularized action S = int (x'^2/2 - V) dt along a contour. When the
/// contour ends at an escape pole the last segment stops at a cutoff x_c and
/// the remainder is the finite part of int_{x_c}^inf sqrt(2(E - V)) dx minus
/// E (t0 - t_c).
struct ActionExponent {
  double probExponent = 0.0;  // 2 Re(i S + boundaryTerm), per unit couplingScale
  double phase = 0.0;         // Re int_{t_i}^{t_emerge} (x'^2/2 - V) dt
  cplx boundaryTerm{0.0};     // -x_i^2 / (4 L^2)
  std::string contour;        // "real-axis" | "fig2-C" | "custom"
  cplx action{0.0};           // regularized S
  double couplingScale = 1.0;
  double suppressedProbability = 0.0;  // exp(couplingScale * probExponent)
  double cutoffShift = 0.0;   // |change of probExponent| between two cutoffs
  double phaseCutoff = 0.0;   // t_emerge used for the phase
  bool tail = false;          // contour closed at an escape pole
};

class ContourError : public std::runtime_error {
public:
  ContourError(const std::string& what, int segment)
      : std::runtime_error(what), segment_(segment) {}
  int segment() const noexcept { return segment_; }

private:
  int segment_;
};

class RegularizationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct ContourOptions {
  double poleClearance = 1e-2;
  /// |x| at the two cutoffs used for the finite-part tail.
  double cutoffX = 8.0;
  double cutoffCheckX = 16.0;
  double cutoffTolerance = 1e-6;
};

/// Real-axis quadrature on the closed form of a certified trajectory. The
/// trajectory is closed at the escape pole nearest its last sample when
/// |x(t_end)| >= 10.
ActionExponent action_exponent_real_time(const Trajectory& traj, double L,
                                         const ContourOptions& options = {});

/// Same integrand along a polyline. The last vertex may be an escape pole,
/// approached along the final segment.
ActionExponent action_along_contour(const TrajectoryParams& params, const std::vector<cplx>& contour,
                                    double L, const ContourOptions& options = {},
                                    const std::string& label = "custom");

/// t_i up to the zero line, along it to Re t0 - Re(a)/2, down to the real
/// axis, then along it to t_end.
std::vector<cplx> fig2_contour(const TrajectoryParams& params, double t_i, cplx t_end);

/// Zero-line start (a zero of x), down at Re t0 - Re(a)/2, then to the pole
/// t0 along the real axis.
std::vector<cplx> euclidean_contour(const TrajectoryParams& params);

/// Rectangle detour: leaves the real axis at a, runs at height h, rejoins at b.
std::vector<cplx> detour_contour(double t_i, double a, double b, double h, cplx t_end);

struct PointerConfig {
  double g = 1e-2;
  double deltaX = 1.0;
  double hbarEff = 1.0;
  double t_m = 0.0;

  void validate() const;
};

struct PointerBias {
  double dX;
  double dP;
};

/// dX = g Re x(t_m), dP = g hbarEff / (2 deltaX^2) Im x(t_m).
PointerBias pointer_bias(const Trajectory& traj, const PointerConfig& config);

struct ImagExcursion {
  double tStar = 0.0;
  cplx peakIm{0.0};  // x(tStar)
  cplx epsilon{0.0};
  double predictedScale = 0.0;  // 0.4/|eps| quartic, 1.5/|eps|^2 cubic
  double leadTime = 0.0;
  double emergenceTime = 0.0;
  bool interiorMaximum = true;
  bool emerged = true;
};

/// For closed-form potentials: eps with m = i eps (quartic), m^2 = i eps (cubic).
cplx solution_epsilon(const TrajectoryParams& params);

ImagExcursion imag_excursion(const Trajectory& traj);

/// Last real time in the window at which Re x crosses level, or grazes it
/// (local minimum of |Re x - level| below 0.02 level).
double emergence_time(const Trajectory& traj, double level, bool* found = nullptr);

struct BranchEntry {
  int branch;
  bool converged;
  double probExponent;
  cplx E;
  cplx epsilon;
  bool transient;       // n < 0
  bool unsuppressed;    // exponent >= that of n = 0
  std::string error;    // nonempty if the solve failed
};

/// Entries sorted by probExponent, least suppressed first; failures last.
std::vector<BranchEntry> branch_suppression_compare(const Potential& potential, double T,
                                                    const std::vector<int>& branches);

std::string exponent_json(const ActionExponent& a);
std::string pointer_json(const PointerConfig& c, const PointerBias& b);

}  // namespace ctraj
