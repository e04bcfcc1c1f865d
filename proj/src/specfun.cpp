#include "ctraj/specfun.hpp"

#include <array>
#include <cmath>
#include <limits>

namespace ctraj::specfun {
namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
const double kInvE = std::exp(-1.0);

bool finite(cplx z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

bool on_m_cut(cplx m) { return m.imag() == 0.0 && m.real() >= 1.0; }

// AGM(1, b) with the "right" choice of square root at every step.
cplx agm_one(cplx b) {
  cplx a = 1.0;
  for (int i = 0; i < 64; ++i) {
    const cplx an = 0.5 * (a + b);
    cplx bn = std::sqrt(a * b);
    if (std::abs(an - bn) > std::abs(an + bn)) bn = -bn;
    a = an;
    b = bn;
    if (std::abs(a - b) <= 4.0 * kEps * std::abs(a)) break;
  }
  return 0.5 * (a + b);
}

// K(1 - m) for any m off the cut of K(1 - m); for real m <= 0 this is the
// limit taken from Im m > 0.
cplx k_complement(cplx m) {
  if (m == cplx(0.0)) return {std::numeric_limits<double>::infinity(), 0.0};
  return kPi / (2.0 * agm_one(std::sqrt(m)));
}

struct Reduced {
  cplx u;
  int j = 0;  // multiples of 2K removed
  int k = 0;  // multiples of 2iK' removed
};

Reduced reduce(cplx u, const EllipticContext& ctx) {
  Reduced r{u};
  const cplx P = 2.0 * ctx.K;
  r.j = static_cast<int>(std::lround(std::real(u / P)));
  if (!std::isfinite(std::abs(ctx.Kprime))) {
    r.u = u - static_cast<double>(r.j) * P;
    return r;
  }
  const auto lc = lattice_coords(u, ctx);
  r.j = static_cast<int>(std::lround(lc.alpha));
  r.k = static_cast<int>(std::lround(0.5 * lc.beta));
  r.u = u - static_cast<double>(r.j) * P - static_cast<double>(r.k) * cplx(0, 2) * ctx.Kprime;
  return r;
}

JacobiTriple descend(cplx u, cplx m) {
  constexpr int kMaxLevels = 48;
  std::array<cplx, kMaxLevels> k1s{};
  int levels = 0;
  cplx mn = m;
  cplx v = u;
  while (levels < kMaxLevels) {
    const double s = std::abs(std::sin(v));
    if (std::abs(mn) * (1.0 + s * s) < 1e-17 && std::abs(mn) < 1e-8) break;
    const cplx kp = std::sqrt(1.0 - mn);
    const cplx k1 = mn / ((1.0 + kp) * (1.0 + kp));
    k1s[levels++] = k1;
    v /= (1.0 + k1);
    mn = k1 * k1;
  }
  if (levels == kMaxLevels) throw DomainError("jacobi: Landen descent did not converge");

  const cplx sv = std::sin(v);
  const cplx cv = std::cos(v);
  const cplx corr = 0.25 * mn * (v - sv * cv);
  cplx sn = sv - corr * cv;
  cplx cn = cv + corr * sv;
  cplx dn = 1.0 - 0.5 * mn * sv * sv;
  for (int i = levels - 1; i >= 0; --i) {
    const cplx k1 = k1s[i];
    const cplx s2 = sn * sn;
    const cplx den = 1.0 + k1 * s2;
    const cplx snn = (1.0 + k1) * sn / den;
    const cplx cnn = cn * dn / den;
    const cplx dnn = (1.0 - k1 * s2) / den;
    sn = snn;
    cn = cnn;
    dn = dnn;
  }
  return {sn, cn, dn};
}

}  // namespace

cplx elliptic_K(cplx m) {
  if (!finite(m)) throw DomainError("elliptic_K: non-finite parameter");
  if (on_m_cut(m)) throw DomainError("elliptic_K: parameter on the branch cut [1, inf)");
  return kPi / (2.0 * agm_one(std::sqrt(1.0 - m)));
}

EllipticContext EllipticContext::make(cplx m) {
  EllipticContext ctx;
  ctx.m = m;
  ctx.K = elliptic_K(m);
  ctx.Kprime = k_complement(m);
  ctx.nearCut = m.real() < 0.0 && std::abs(m.imag()) < 1e-8 * std::max(1.0, std::abs(m));
  ctx.q = std::isfinite(std::abs(ctx.Kprime)) ? std::exp(-kPi * ctx.Kprime / ctx.K) : cplx(0.0);
  return ctx;
}

SmallMApprox small_m_expansions(cplx m) {
  SmallMApprox a;
  a.K = 0.5 * kPi * (1.0 + 0.25 * m);
  a.Kprime = m == cplx(0.0) ? cplx(std::numeric_limits<double>::infinity())
                            : -0.5 * std::log(m / 16.0);
  a.q = m / 16.0;
  a.outOfRange = std::abs(m) >= 0.2;
  return a;
}

LatticeCoords lattice_coords(cplx u, const EllipticContext& ctx) {
  const cplx P = 2.0 * ctx.K;
  const cplx Q = cplx(0, 1) * ctx.Kprime;
  const double det = P.real() * Q.imag() - P.imag() * Q.real();
  if (det == 0.0 || !std::isfinite(det)) throw DomainError("lattice_coords: degenerate period lattice");
  const double alpha = (u.real() * Q.imag() - u.imag() * Q.real()) / det;
  const double beta = (P.real() * u.imag() - P.imag() * u.real()) / det;
  return {alpha, beta};
}

namespace {

cplx lattice_point(const EllipticContext& ctx, double j, double k) {
  return j * 2.0 * ctx.K + k * cplx(0, 1) * ctx.Kprime;
}

// Nearest point of the sub-lattice {2jK + (2k + parity) iK'} to u.
cplx nearest_of_parity(cplx u, const EllipticContext& ctx, int parity) {
  if (!std::isfinite(std::abs(ctx.Kprime))) {
    if (parity == 1) return {std::numeric_limits<double>::infinity(), 0.0};
    const double j = std::round(std::real(u / (2.0 * ctx.K)));
    return lattice_point(ctx, j, 0);
  }
  const auto lc = lattice_coords(u, ctx);
  const double j0 = std::round(lc.alpha);
  const double k0 = std::round(0.5 * (lc.beta - parity));
  cplx best = lattice_point(ctx, j0, 2 * k0 + parity);
  for (int dj = -1; dj <= 1; ++dj) {
    for (int dk = -1; dk <= 1; ++dk) {
      const cplx c = lattice_point(ctx, j0 + dj, 2 * (k0 + dk) + parity);
      if (std::abs(u - c) < std::abs(u - best)) best = c;
    }
  }
  return best;
}

}  // namespace

cplx nearest_sn_zero(cplx u, const EllipticContext& ctx) { return nearest_of_parity(u, ctx, 0); }
cplx nearest_sn_pole(cplx u, const EllipticContext& ctx) { return nearest_of_parity(u, ctx, 1); }

JacobiTriple jacobi(cplx u, const EllipticContext& ctx) {
  if (!finite(u)) throw DomainError("jacobi: non-finite argument");
  if (on_m_cut(ctx.m)) throw DomainError("jacobi: parameter on the branch cut [1, inf)");
  if (std::abs(ctx.m) > 0.0 && std::isfinite(std::abs(ctx.Kprime))) {
    const cplx pole = nearest_sn_pole(u, ctx);
    if (std::abs(u - pole) < kPoleRadius) {
      const auto lc = lattice_coords(pole, ctx);
      const int j = static_cast<int>(std::lround(lc.alpha));
      const double sign = (j % 2 == 0) ? 1.0 : -1.0;
      throw PoleProximity("jacobi_sn: argument within pole radius", pole, sign / std::sqrt(ctx.m));
    }
  }
  const Reduced r = reduce(u, ctx);
  JacobiTriple t = descend(r.u, ctx.m);
  if (r.j % 2 != 0) {
    t.sn = -t.sn;
    t.cn = -t.cn;
  }
  if (r.k % 2 != 0) {
    t.cn = -t.cn;
    t.dn = -t.dn;
  }
  return t;
}

JacobiTriple jacobi(cplx u, cplx m) { return jacobi(u, EllipticContext::make(m)); }

cplx jacobi_sn(cplx u, const EllipticContext& ctx) { return jacobi(u, ctx).sn; }
cplx jacobi_sn(cplx u, cplx m) { return jacobi(u, m).sn; }

SeriesValue reciprocal_sn_series(cplx U, const EllipticContext& ctx, int N) {
  if (N < 1) throw DomainError("reciprocal_sn_series: truncation order must be >= 1");
  if (std::abs(ctx.q) >= 0.5) throw DomainError("reciprocal_sn_series: requires |q| < 0.5");
  const double kpole = std::round(U.real() / kPi);
  if (std::abs(U - cplx(kpole * kPi)) < kPoleRadius) {
    const double sign = (static_cast<long>(kpole) % 2 == 0) ? 1.0 : -1.0;
    throw PoleProximity("reciprocal_sn_series: U at a multiple of pi", cplx(kpole * kPi),
                        sign * kPi / (2.0 * ctx.K));
  }
  const cplx pref = kPi / (2.0 * ctx.K);
  cplx sum = 1.0 / std::sin(U);
  cplx qpow = ctx.q;        // q^(2n+1)
  const cplx q2 = ctx.q * ctx.q;
  for (int n = 0; n <= N; ++n) {
    const double odd = 2.0 * n + 1.0;
    sum += 4.0 * qpow * std::sin(odd * U) / (1.0 - qpow);
    qpow *= q2;
  }
  SeriesValue out{pref * sum, 0.0};
  const double aq = std::abs(ctx.q);
  const double grow = std::exp(std::abs(U.imag()));
  const double ratio = aq * aq * grow * grow;
  if (aq == 0.0) {
    out.errorBound = 0.0;
  } else if (ratio >= 1.0) {
    out.errorBound = std::numeric_limits<double>::infinity();
  } else {
    const double odd = 2.0 * N + 3.0;
    const double next = 4.0 * std::pow(aq, odd) * std::pow(grow, odd) / (1.0 - std::pow(aq, odd));
    out.errorBound = std::abs(pref) * next / (1.0 - ratio);
  }
  return out;
}

LambertResult lambert_w_checked(int n, cplx z) {
  if (!finite(z)) throw DomainError("lambert_w: non-finite argument");
  LambertResult res;
  if (z == cplx(0.0)) {
    if (n != 0) throw DomainError("lambert_w: W_n(0) is undefined for n != 0");
    res.w = 0.0;
    return res;
  }
  const double e = std::exp(1.0);
  const double bp = std::abs(z + kInvE);
  res.nearBranchPoint = std::abs(n) <= 1 && bp < 1e-3;

  // Seed.
  const cplx p = std::sqrt(2.0 * (e * z + 1.0));
  // W_{-1} meets the branch point from Im z >= 0, W_1 from Im z < 0.
  const bool upper = z.imag() >= 0.0;
  cplx w;
  if (n == 0 && (bp < 0.3 || (std::abs(z) < 3.0 && std::abs(1.0 + z) < 0.5))) {
    w = -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p;
  } else if (bp < 0.3 && ((n == -1 && upper) || (n == 1 && !upper))) {
    w = -1.0 - p - p * p / 3.0 - 11.0 / 72.0 * p * p * p;
  } else if (n == 0 && std::abs(z) < 3.0) {
    w = std::log(1.0 + z);
  } else {
    const cplx L1 = std::log(z) + cplx(0.0, 2.0 * kPi * n);
    const cplx L2 = std::log(L1);
    w = L1 - L2 + L2 / L1;
  }
  if (bp == 0.0 && (n == 0 || n == -1)) {
    res.w = -1.0;
    return res;
  }

  // Halley iteration on w e^w - z.
  for (int it = 0; it < 100; ++it) {
    res.iterations = it + 1;
    const cplx ew = std::exp(w);
    const cplx f = w * ew - z;
    const cplx wp1 = w + 1.0;
    const cplx denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
    if (denom == cplx(0.0)) break;
    const cplx dw = f / denom;
    w -= dw;
    if (std::abs(dw) <= 2.0 * kEps * (1.0 + std::abs(w))) break;
  }
  res.w = w;
  return res;
}

cplx lambert_w(int n, cplx z) { return lambert_w_checked(n, z).w; }

}  // namespace ctraj::specfun
