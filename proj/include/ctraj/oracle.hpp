#pragma once

// Exact quantum evolution of the Gaussian false-vacuum state by symmetric
// split-step Fourier propagation, with a polynomial complex absorbing
// potential on the escape side(s). Survival in the well and tunneling rates
// are measured and the rate exponent extracted across hbarEff.

#include <stdexcept>
#include <string>
#include <vector>

#include "ctraj/dynamics.hpp"

namespace ctraj::oracle {

class ResolutionError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class FitQualityError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct Absorber {
  bool enabled = true;
  double fraction = 0.15;  // of the grid length, per absorbing side
  double strength = 0.0;   // ramp amplitude; 0 = tune automatically
  bool left = false;
  bool right = true;
};

struct GridSpec {
  double xMin = -2.0;
  double xMax = 2.0;
  int n = 2048;  // power of two
  double dt = 5e-3;
  Absorber absorber;

  double dx() const { return (xMax - xMin) / n; }
  double x(int i) const { return xMin + dx() * i; }
};

/// Grid sized for the potential's well and escape region at hbarEff.
GridSpec default_grid(const Potential& potential, double hbarEff);

struct GridState {
  double xMin = 0.0, xMax = 0.0;
  int n = 0;
  double dx = 0.0;
  std::vector<cplx> psi;
  double hbarEff = 0.0;
  Absorber absorber;

  double norm() const;
};

/// Well region used for survival: |x| < 1/sqrt 2 quartic, x < 1 cubic, the
/// absorber-free interior for other potentials.
bool in_well(const Potential& potential, const GridSpec& grid, double x);

/// Throws ResolutionError unless dx <= hbarEff / (4 pMax), pMax from the
/// deepest point of the grid at the barrier-top energy.
void check_resolution(const Potential& potential, const GridSpec& grid, double hbarEff);

/// Absorber strength with reflection plus wrap-around transmission below
/// 1e-6 for an outgoing wave at energy E, and the achieved value.
struct AbsorberTuning {
  double strength;
  double leakage;
};
AbsorberTuning tune_absorber(const Potential& potential, const GridSpec& grid, double hbarEff, double E);

struct EscapeRecord {
  std::vector<double> times;
  std::vector<double> survival;
  std::vector<double> norm;
  std::vector<double> meanX;  // <x> / norm
  double fittedRate = 0.0;
  double fittedExponent = 0.0;  // d ln(rate) / d(1/hbarEff); set by sweeps
  double fitStart = 0.0, fitEnd = 0.0;
  double rSquared = 0.0;
};

struct EvolveOptions {
  double T = 100.0;
  double sampleInterval = 0.5;
  /// Stop once survival falls to this level (0 disables).
  double stopSurvival = 0.0;
  /// Project the Gaussian onto the lowest resonance by a Gaussian-windowed
  /// energy filter of this duration before t = 0 (0 disables).
  double filterTime = 0.0;
  /// Fit window never starts before this time.
  double transientHold = 0.0;
  double fitStartSurvival = 0.999;
  bool fit = true;
  /// Resolution threshold: relative drift of <H> without absorber, spectral
  /// weight above 3/4 Nyquist with it.
  double energyDriftTolerance = 1e-4;
};

struct EvolveResult {
  GridState state;
  EscapeRecord record;
  double energyStart = 0.0;
  double energyEnd = 0.0;
  double energyDrift = 0.0;  // absorber disabled only
  double spectralTail = 0.0;
  int steps = 0;
};

/// Gaussian exp(-(x - center)^2 / (4 L^2) + i p0 x / hbarEff), unit norm.
GridState gaussian_state(const GridSpec& grid, double hbarEff, double L, double center, double p0 = 0.0);

EvolveResult evolve(const Potential& potential, double hbarEff, double L, double center,
                    const GridSpec& grid, const EvolveOptions& options = {});

/// Rate from ln P(t) on the window [first P < startSurvival (not before
/// hold), first P <= 0.5]; when P never falls below startSurvival the window
/// starts at hold. Throws FitQualityError below 10 points or R^2 < 0.99.
void fit_rate(EscapeRecord& record, double transientHold = 0.0, double startSurvival = 0.999);

/// Least-squares slope and intercept of y against x.
struct LinearFit {
  double slope;
  double intercept;
  double rSquared;
};
LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y);

struct SweepOptions {
  int n = 0;            // 0: default_grid
  double T = 200.0;
  double filterTime = 60.0;
  double transientHold = 20.0;
};

struct SweepResult {
  PotentialKind kind;
  std::vector<double> hbarEffList;
  std::vector<double> rates;
  std::vector<EscapeRecord> records;
  double slope = 0.0;
  double target = 0.0;  // -S_E
  double relError = 0.0;
};

SweepResult exponent_sweep(const Potential& potential, const std::vector<double>& hbarEffList,
                           const SweepOptions& options = {});

/// sup_t |P_n(t) - P_2n(t)| for two runs differing only in grid size.
double grid_halving_deviation(const Potential& potential, double hbarEff, const GridSpec& grid,
                              const EvolveOptions& options);

std::string survival_csv(const EscapeRecord& record);
std::string sweep_json(const SweepResult& sweep);

}  // namespace ctraj::oracle
