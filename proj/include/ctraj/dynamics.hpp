#pragma once

// Potentials in dimensionless units, the closed-form complex classical
// solutions, their early-time expansions, a Taylor-series integrator for the
// complex equation of motion, and the pole/zero lattice in complex time.

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ctraj/specfun.hpp"

namespace ctraj {

enum class PotentialKind { Quartic, Cubic, Polynomial };

std::string to_string(PotentialKind kind);
PotentialKind parse_potential_kind(const std::string& name);

/// V(x) = sum_k coeffs[k] x^k. Quartic is x^2/2 - x^4/2, cubic x^2/2 - x^3/3.
/// couplingScale multiplies the dimensionless action (S0/hbar).
class Potential {
public:
  static Potential quartic(double couplingScale = 1.0);
  static Potential cubic(double couplingScale = 1.0);
  static Potential polynomial(std::vector<double> coeffs, double couplingScale = 1.0);
  static Potential of_kind(PotentialKind kind, double couplingScale = 1.0);

  PotentialKind kind() const noexcept { return kind_; }
  const std::vector<double>& coeffs() const noexcept { return coeffs_; }
  double couplingScale() const noexcept { return couplingScale_; }
  bool has_closed_form() const noexcept { return kind_ != PotentialKind::Polynomial; }

  cplx value(cplx x) const;
  cplx derivative(cplx x) const;

  /// Zero-energy escape point (1 quartic, 3/2 cubic).
  double turning_point() const;
  /// Barrier-top position (1/sqrt 2 quartic, 1 cubic).
  double barrier_top() const;
  /// Euclidean bounce action 2 * int_0^turning sqrt(2V) dx (2/3 quartic, 6/5 cubic).
  double euclidean_action() const;

private:
  Potential(PotentialKind kind, std::vector<double> coeffs, double couplingScale);

  PotentialKind kind_;
  std::vector<double> coeffs_;
  double couplingScale_;
};

/// Potential value from the free function form used throughout the docs.
cplx potential_value(const Potential& p, cplx x);

/// E as a function of the elliptic parameter for the two closed-form cases.
cplx energy_of_m(PotentialKind kind, cplx m);

/// Integration constants of a classical solution.
struct TrajectoryParams {
  Potential potential = Potential::quartic();
  cplx m{0.0};
  cplx t0{0.0};
  cplx E{0.0};

  /// E computed from m.
  static TrajectoryParams from_m(const Potential& p, cplx m, cplx t0);
  /// Explicit (m, E) pair; rejects pairs violating the energy map beyond 1e-10.
  static TrajectoryParams from_pair(const Potential& p, cplx m, cplx E, cplx t0);
  /// Energy only, for potentials without a closed form.
  static TrajectoryParams energy_only(const Potential& p, cplx E);
};

struct State {
  cplx x;
  cplx v;
};

/// Closed-form solution with its elliptic context cached.
///   quartic: x = 1 / (s sn((t0 - t)/s | m)),     s = sqrt(1 + m)
///   cubic:   x = A + B / sn^2(C (t0 - t) | m),  w = 1 - m + m^2,
///            A = (1 - (1 + m)/sqrt w)/2, B = 3/(2 sqrt w), C = 1/(2 w^(1/4))
class Solution {
public:
  explicit Solution(const TrajectoryParams& params);

  const TrajectoryParams& params() const noexcept { return params_; }
  const specfun::EllipticContext& context() const noexcept { return ctx_; }

  /// Throws PoleProximity (location in t) within specfun::kPoleRadius of a pole.
  State state(cplx t) const;
  cplx x(cplx t) const { return state(t).x; }

  /// Map between t and the elliptic argument u.
  cplx u_of_t(cplx t) const;
  cplx t_of_u(cplx u) const;

  /// Lattice sides a (real direction) and b (imaginary direction) in t.
  cplx side_a() const;
  cplx side_b() const;

  cplx nearest_pole(cplx t) const;
  double pole_distance(cplx t) const { return std::abs(t - nearest_pole(t)); }

  int pole_order() const noexcept { return params_.potential.kind() == PotentialKind::Cubic ? 2 : 1; }

  // Cubic coefficients (A, B, C); s = sqrt(1+m) for the quartic is in scale_.
  cplx A() const noexcept { return A_; }
  cplx B() const noexcept { return B_; }
  cplx C() const noexcept { return C_; }

private:
  TrajectoryParams params_;
  specfun::EllipticContext ctx_;
  cplx scale_;  // du/d(t0 - t)
  cplx A_{0.0}, B_{0.0}, C_{0.0};
};

/// x(t) on the closed form.
cplx exact_solution(const TrajectoryParams& params, cplx t);

/// x'' + V'(x) on the closed form, x'' from an 8th-order central stencil.
cplx equation_of_motion_residual(const TrajectoryParams& params, cplx t);

struct Sample {
  double t;
  cplx x;
  cplx v;
};

struct StepControl {
  int order = 30;
  double tolerance = 1e-16;
  double runawayThreshold = 1e3;
  double minStep = 1e-12;
  int samples = 2001;
  int maxSteps = 2000000;
};

struct Trajectory {
  std::vector<Sample> samples;
  TrajectoryParams params;
  std::pair<double, double> window{0.0, 0.0};
  bool runaway = false;
  int steps = 0;
};

/// Taylor-series integration of x'' = -V'(x) along real time from (x0, v0)
/// at window.first. Samples are equally spaced over the window (or up to the
/// runaway point, whose last good state closes the sample list). Throws
/// std::invalid_argument on inconsistent energy.
Trajectory integrate_trajectory(const TrajectoryParams& params, std::pair<double, double> window,
                                cplx x0, cplx v0, const StepControl& control = {});

/// Samples of the closed form on [t_i, t_f] (no integration).
Trajectory sample_exact(const TrajectoryParams& params, std::pair<double, double> window, int samples);

/// max over samples of |v^2/2 + V(x) - E|.
double max_energy_error(const Trajectory& traj);
/// Same, each sample scaled by max(1, |E|, |V(x)|) (roundoff near poles).
double max_scaled_energy_error(const Trajectory& traj);

/// Export records (t, Re x, Im x, Re v, Im v, Re E, Im E); E is the sampled
/// energy v^2/2 + V(x).
std::string trajectory_csv(const Trajectory& traj);
std::string trajectory_json(const Trajectory& traj);

struct Expansion {
  cplx value;
  bool inRange;
};

/// Early-time forms in the variable Z = exp(iU):
///   quartic  x ~ 2i/Z + 2i/Z^3 + (m/8i) Z
///   cubic    x ~ -6(1+m)/Z^2 - 12/Z^4 - (3/128) m^2 Z^2 + (63/64) m^2
Expansion early_time_expansion(PotentialKind kind, cplx m, cplx Z);

/// Z = exp(iU) with U the reduced elliptic argument at time t.
cplx early_time_Z(const TrajectoryParams& params, cplx t);

struct LatticePoint {
  cplx t;
  int j;  // multiple of side a
  int k;  // multiple of side b
};

struct PoleZeroLattice {
  cplx sideA;
  cplx sideB;
  std::vector<LatticePoint> zeros;
  std::vector<LatticePoint> poles;
  int poleOrder;
};

struct Rectangle {
  double reMin, reMax, imMin, imMax;
  bool contains(cplx z) const {
    return z.real() >= reMin && z.real() <= reMax && z.imag() >= imMin && z.imag() <= imMax;
  }
};

/// Poles at t0 + j a + 2k b; zeros (of x, or of x - A for the cubic) at
/// t0 + j a + (2k+1) b.
PoleZeroLattice pole_zero_lattice(const TrajectoryParams& params, const Rectangle& rect);

}  // namespace ctraj
