// Reference values frozen from mpmath (25 digits): ellipk, ellipfun, lambertw.
#include <cmath>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "ctraj/specfun.hpp"
#include "doctest.h"

using namespace ctraj;
using namespace ctraj::specfun;

namespace {

double rerr(cplx a, cplx b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

cplx K_quad(cplx m) {
  using G = boost::math::quadrature::gauss_kronrod<double, 61>;
  auto f = [m](double t) { return 1.0 / std::sqrt(1.0 - m * std::sin(t) * std::sin(t)); };
  return {G::integrate([&](double t) { return f(t).real(); }, 0.0, kPi / 2, 15, 1e-15),
          G::integrate([&](double t) { return f(t).imag(); }, 0.0, kPi / 2, 15, 1e-15)};
}

struct JacobiRef {
  cplx m, u, sn, cn, dn;
};

const JacobiRef kJacobi[] = {
    {0.5, {0.5, 0.2}, {0.482952241480145, 0.16731636561447}, {0.896038252137702, -0.0901812100287453},
     {0.94825700764955, -0.0426075489861729}},
    {0.5, {-30, 0.1}, {-0.327981829251224, 0.0921871247212343}, {0.949705204789117, 0.0318369338685419},
     {0.975040303325378, 0.0155048471823996}},
    {{0.1, 0.05}, {2, 3}, {2.73779505040377, -0.44707022342577}, {-0.479157587364321, -2.55445531314803},
     {-0.411455535726845, 0.145805753323404}},
    {{-0.013, 0.057}, {-30, 0.1}, {1.10863608016173, 0.13877193561964}, {0.285137765774397, -0.53955523683081},
     {1.01699862280314, -0.0319368636117459}},
    {{0.9, 0.3}, {0.5, 0.2}, {0.483665269347854, 0.156259539569607}, {0.893110259360716, -0.0846226000675474},
     {0.931758654621086, -0.106730254590617}},
    {-0.5, {2, 3}, {-0.807226220060563, -0.237543587457954}, {-0.693700125673526, 0.276418303971237},
     {-1.1422081019947, -0.083938912650175}},
    {{-2, 1}, {-30, 0.1}, {-0.155387821637824, 0.938036134384552}, {-1.36643520743096, -0.106671279213907},
     {-0.134937596777329, -1.01057397883516}},
};

struct LambertRef {
  int n;
  cplx z, w;
};

const LambertRef kLambert[] = {
    {0, {1440, 300}, {5.57488294795708, 0.174164603391463}},
    {0, -2.0, {0.17281600284, 1.67368641374084}},
    {0, {-2, -1e-9}, {0.172816003040359, -1.67368641338124}},
    {0, -0.3, -0.489402227180215},
    {0, {0.5, 0.5}, {0.404316123531213, 0.243437756884254}},
    {1, {1440, 300}, {5.24939766150107, 5.66511264960373}},
    {1, {-0.3, -0.01}, {-1.7821348043697, 0.0758650921466837}},
    {1, {0.001, -0.002}, {-8.25101100375691, 2.30709421885326}},
    {-1, -0.3, -1.78133702342163},
    {-1, {-0.3, 0.01}, {-1.7821348043697, -0.0758650921466837}},
    {-1, -1.0, {-0.318131505204764, -1.33723570143069}},
    {2, {-0.3, 0.01}, {-3.86799163019526, 13.8311544990223}},
    {-2, {0.5, 0.5}, {-2.678864728441, -9.94710663314962}},
    {5, -2.0, {-2.80399568682998, 32.9017048788112}},
};

}  // namespace

TEST_SUITE("specfun") {
  TEST_CASE("K at m = 0 is pi/2") { CHECK(std::abs(elliptic_K(0.0) - kPi / 2) < 1e-15); }

  TEST_CASE("K matches the quadrature oracle") {
    CHECK(std::abs(elliptic_K(0.5) - K_quad(0.5)) < 1e-12);
    CHECK(std::abs(elliptic_K(0.5) - 1.85407467730137) < 1e-13);
    const cplx m(0.1, 0.05);
    CHECK(std::abs(elliptic_K(m) - K_quad(m)) < 1e-11);
    CHECK(std::abs(elliptic_K(m) - cplx(1.61175485339464, 0.0220736969081612)) < 1e-13);
  }

  TEST_CASE("quarter periods and nome") {
    for (double m : {0.05, 0.3, 0.5, 0.9}) {
      const auto c = EllipticContext::make(m);
      CHECK(std::abs(c.K.imag()) == 0.0);
      CHECK(std::abs(c.Kprime.imag()) == 0.0);
      CHECK(c.K.real() > 0.0);
      CHECK(c.Kprime.real() > 0.0);
    }
    for (cplx m : {cplx(0.1, 0.05), cplx(-0.013, 0.057), cplx(0.9, 0.3), cplx(-2, 1), cplx(5, 1e-3)}) {
      const auto c = EllipticContext::make(m);
      CHECK(std::abs(c.q - std::exp(-kPi * c.Kprime / c.K)) <= 1e-13 * std::abs(c.q));
      CHECK(std::abs(c.q) < 1.0);
    }
    const auto c = EllipticContext::make(cplx(0.1, 0.05));
    CHECK(std::abs(c.Kprime - cplx(2.52351635259962, -0.217314486319181)) < 1e-12);
  }

  TEST_CASE("branch cut [1, inf) is rejected") {
    CHECK_THROWS_AS(EllipticContext::make(1.0), DomainError);
    CHECK_THROWS_AS(EllipticContext::make(3.0), DomainError);
    CHECK_THROWS_AS(elliptic_K(std::nan("")), DomainError);
  }

  TEST_CASE("small-m expansions") {
    const auto s = small_m_expansions(0.01);
    CHECK(std::abs(s.q.real() - 0.000625) < 1e-12);
    CHECK(std::abs(s.q - EllipticContext::make(0.01).q) / std::abs(EllipticContext::make(0.01).q) < 0.02);
    const auto s1 = small_m_expansions(0.1);
    CHECK(std::abs(s1.K - kPi / 2 * 1.025) < 1e-15);
    CHECK(std::abs(s1.K - elliptic_K(0.1)) / std::abs(elliptic_K(0.1)) < 2e-3);  // next term 9m^2/64
    CHECK_FALSE(s1.outOfRange);
    CHECK(small_m_expansions(0.3).outOfRange);
    CHECK(std::abs(small_m_expansions(1e-12).q) < 1e-13);
  }

  TEST_CASE("sn special values") {
    CHECK(std::abs(jacobi_sn(0.3, 0.0) - std::sin(0.3)) < 1e-15);
    CHECK(std::abs(jacobi_sn(0.3, 0.0) - 0.29552020666134) < 1e-13);
    CHECK(std::abs(jacobi_sn(elliptic_K(0.3), 0.3) - 1.0) < 1e-13);
  }

  TEST_CASE("sn, cn, dn match mpmath") {
    for (const auto& r : kJacobi) {
      const auto j = jacobi(r.u, r.m);
      CHECK(rerr(j.sn, r.sn) < 1e-12);
      CHECK(rerr(j.cn, r.cn) < 1e-12);
      CHECK(rerr(j.dn, r.dn) < 1e-12);
    }
  }

  TEST_CASE("pole proximity carries Laurent data") {
    const auto c = EllipticContext::make(0.3);
    const cplx pole(0.0, c.Kprime.real());
    try {
      (void)jacobi_sn(pole + 1e-8, c);
      FAIL("expected PoleProximity");
    } catch (const PoleProximity& p) {
      CHECK(std::abs(p.pole() - pole) < 1e-12);
      CHECK(p.order() == 1);
      // sn ~ (1/k) / (u - iK')
      CHECK(std::abs(std::abs(p.laurent()) - 1.0 / std::sqrt(0.3)) < 1e-12);
    }
    CHECK_NOTHROW((void)jacobi_sn(pole + 1e-4, c));
  }

  TEST_CASE("Lambert series for 1/sn") {
    const auto c0 = EllipticContext::make(0.0);
    CHECK(std::abs(reciprocal_sn_series(0.7, c0).value - 1.0 / std::sin(0.7)) < 1e-14);
    const auto c1 = EllipticContext::make(0.05);
    const cplx U1 = 1.0;
    CHECK(rerr(reciprocal_sn_series(U1, c1, 8).value, 1.0 / jacobi_sn(2.0 * c1.K * U1 / kPi, c1)) < 1e-10);
    const auto c2 = EllipticContext::make(cplx(0.0, 0.1));
    const cplx U2(0.4, 0.1);
    CHECK(rerr(reciprocal_sn_series(U2, c2, 12).value, 1.0 / jacobi_sn(2.0 * c2.K * U2 / kPi, c2)) < 1e-9);
  }

  TEST_CASE("Lambert W special values") {
    CHECK(std::abs(lambert_w(0, 0.0)) == 0.0);
    CHECK(std::abs(lambert_w(0, std::exp(1.0)) - 1.0) < 1e-15);
    const auto r = lambert_w_checked(-1, -std::exp(-1.0));
    CHECK(std::abs(r.w + 1.0) < 1e-7);  // square-root branch point
    CHECK(r.nearBranchPoint);
    CHECK_THROWS_AS(lambert_w(1, 0.0), DomainError);
  }

  TEST_CASE("Lambert W matches mpmath on all branches") {
    for (const auto& r : kLambert) {
      const cplx w = lambert_w(r.n, r.z);
      CHECK(rerr(w, r.w) < 1e-11);
      CHECK(std::abs(w * std::exp(w) - r.z) / std::abs(r.z) <= 1e-12);
    }
  }
}
