#pragma once

// Complex-parameter special functions used by the closed-form trajectories:
// complete elliptic integrals, the nome, Jacobi sn/cn/dn, the Lambert-series
// form of 1/sn and a branch-indexed Lambert W.
//
// Conventions: principal logarithm and square root throughout; the m-plane
// branch cut is the real ray [1, inf).

#include <complex>
#include <stdexcept>
#include <string>

namespace ctraj {

using cplx = std::complex<double>;

/// Raised for inputs outside the domain of a function (branch cut, NaN, ...).
class DomainError : public std::domain_error {
public:
  explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

/// Raised when a meromorphic function is evaluated too close to one of its
/// poles. Carries the pole location (in the caller's variable) and the
/// leading Laurent coefficient c, i.e. f ~ c / (z - pole)^order.
class PoleProximity : public std::runtime_error {
public:
  PoleProximity(const std::string& what, cplx pole, cplx laurent, int order = 1)
      : std::runtime_error(what), pole_(pole), laurent_(laurent), order_(order) {}

  cplx pole() const noexcept { return pole_; }
  cplx laurent() const noexcept { return laurent_; }
  int order() const noexcept { return order_; }

private:
  cplx pole_;
  cplx laurent_;
  int order_;
};

namespace specfun {

inline constexpr double kPi = 3.14159265358979323846;

/// Distance in u below which jacobi_sn reports a pole instead of a value.
inline constexpr double kPoleRadius = 1e-6;

/// Complete elliptic integral K(m) by the arithmetic-geometric mean.
cplx elliptic_K(cplx m);

/// Parameter m with its quarter periods K = K(m), K' = K(1-m) and the nome
/// q = exp(-pi K'/K).
struct EllipticContext {
  cplx m;
  cplx K;
  cplx Kprime;
  cplx q;
  /// Set when the descent for K' ran close to the branch cut of 1-m.
  bool nearCut = false;

  static EllipticContext make(cplx m);
};

/// Leading small-m forms K ~ (pi/2)(1+m/4), K' ~ -ln(m/16)/2, q ~ m/16.
/// Seeding and cross-checks only.
struct SmallMApprox {
  cplx K;
  cplx Kprime;
  cplx q;
  bool outOfRange;  // |m| >= 0.2
};

SmallMApprox small_m_expansions(cplx m);

struct JacobiTriple {
  cplx sn;
  cplx cn;
  cplx dn;
};

/// sn, cn, dn by period reduction and descending Landen transformation.
/// Throws PoleProximity within kPoleRadius of a pole of sn.
JacobiTriple jacobi(cplx u, const EllipticContext& ctx);
JacobiTriple jacobi(cplx u, cplx m);

cplx jacobi_sn(cplx u, const EllipticContext& ctx);
cplx jacobi_sn(cplx u, cplx m);

/// Lattice coordinates of u in the basis (2K, iK'): u = alpha*2K + beta*iK'.
struct LatticeCoords {
  double alpha;
  double beta;
};

LatticeCoords lattice_coords(cplx u, const EllipticContext& ctx);

/// Nearest zero (2jK + 2k iK') and pole (2jK + (2k+1) iK') of sn to u.
cplx nearest_sn_zero(cplx u, const EllipticContext& ctx);
cplx nearest_sn_pole(cplx u, const EllipticContext& ctx);

struct SeriesValue {
  cplx value;
  double errorBound;  // bound on the omitted tail; +inf if not convergent
};

inline constexpr int kDefaultLambertTerms = 12;

/// 1/sn(u|m) from its Lambert series in the reduced argument U = pi u/(2K),
/// keeping terms n = 0..N.
SeriesValue reciprocal_sn_series(cplx U, const EllipticContext& ctx,
                                 int N = kDefaultLambertTerms);

struct LambertResult {
  cplx w;
  int iterations = 0;
  bool nearBranchPoint = false;  // |z + 1/e| small and |n| <= 1
};

/// Branch n of the Lambert W function: w e^w = z.
LambertResult lambert_w_checked(int n, cplx z);
cplx lambert_w(int n, cplx z);

}  // namespace specfun
}  // namespace ctraj
