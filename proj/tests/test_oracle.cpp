#include <cmath>

#include "ctraj/oracle.hpp"
#include "doctest.h"

using namespace ctraj;
using namespace ctraj::oracle;
using specfun::kPi;

TEST_SUITE("oracle") {
  TEST_CASE("default grids resolve the de Broglie scale") {
    for (const auto& pot : {Potential::quartic(), Potential::cubic()})
      for (double h : {0.06, 0.1, 0.12}) {
        const auto g = default_grid(pot, h);
        CHECK((g.n & (g.n - 1)) == 0);
        CHECK_NOTHROW(check_resolution(pot, g, h));
        CHECK(g.absorber.enabled);
      }
    auto g = default_grid(Potential::quartic(), 0.1);
    CHECK(g.absorber.left);
    CHECK(g.absorber.right);
    g.n = 64;
    CHECK_THROWS_AS(check_resolution(Potential::quartic(), g, 0.1), ResolutionError);
    CHECK_THROWS_AS(default_grid(Potential::quartic(), 0.0), std::invalid_argument);
  }

  TEST_CASE("well regions") {
    const auto q = Potential::quartic();
    const auto gq = default_grid(q, 0.1);
    CHECK(in_well(q, gq, 0.0));
    CHECK(in_well(q, gq, -0.7));
    CHECK_FALSE(in_well(q, gq, 0.71));
    const auto c = Potential::cubic();
    const auto gc = default_grid(c, 0.1);
    CHECK(in_well(c, gc, 0.99));
    CHECK_FALSE(in_well(c, gc, 1.01));
  }

  TEST_CASE("Gaussian state is normalized") {
    const auto g = default_grid(Potential::quartic(), 0.1);
    const auto s = gaussian_state(g, 0.1, std::sqrt(0.05), 0.0);
    CHECK(s.norm() == doctest::Approx(1.0).epsilon(1e-13));
    CHECK_THROWS_AS(gaussian_state(g, 0.1, -1.0, 0.0), std::invalid_argument);
  }

  TEST_CASE("unitarity without absorber over 1e4 steps") {
    const auto q = Potential::quartic();
    auto g = default_grid(q, 0.1);
    g.absorber.enabled = false;
    g.dt = 1e-4;
    EvolveOptions opt;
    opt.T = 1.0;
    opt.fit = false;
    const auto r = evolve(q, 0.1, std::sqrt(0.05), 0.0, g, opt);
    CHECK(r.steps == 10000);
    CHECK(std::abs(r.state.norm() - 1.0) <= 1e-10);
    for (double n : r.record.norm) CHECK(std::abs(n - 1.0) <= 1e-10);
  }

  TEST_CASE("unresolved dynamics raise ResolutionError") {
    const auto q = Potential::quartic();
    auto g = default_grid(q, 0.1);
    g.absorber.enabled = false;
    g.dt = 1e-3;
    EvolveOptions opt;
    opt.T = 10.0;
    opt.fit = false;
    CHECK_THROWS_AS(evolve(q, 0.1, std::sqrt(0.05), 0.0, g, opt), ResolutionError);
  }

  TEST_CASE("harmonic coherent state") {
    const auto h = Potential::polynomial({0.0, 0.0, 0.5});
    GridSpec g;
    g.xMin = -5.0;
    g.xMax = 5.0;
    g.n = 4096;
    g.dt = 1e-3;
    g.absorber.enabled = false;
    EvolveOptions opt;
    opt.T = 2.0 * kPi;
    opt.sampleInterval = 0.05;
    opt.fit = false;
    const auto r = evolve(h, 0.1, std::sqrt(0.05), 1.0, g, opt);
    for (std::size_t i = 0; i < r.record.times.size(); ++i) {
      CHECK(std::abs(r.record.meanX[i] - std::cos(r.record.times[i])) <= 1e-6);
      CHECK(std::abs(r.record.survival[i] - 1.0) <= 1e-10);
    }
  }

  TEST_CASE("absorber tuning") {
    for (const auto& pot : {Potential::quartic(), Potential::cubic()}) {
      const auto g = default_grid(pot, 0.1);
      const auto t = tune_absorber(pot, g, 0.1, 0.05);
      CHECK(t.strength > 0.0);
      CHECK(t.leakage < 1e-6);
    }
  }

  TEST_CASE("quartic hbar = 0.1 decays exponentially after the transient") {
    const auto q = Potential::quartic();
    const double h = 0.1;
    EvolveOptions opt;
    opt.T = 200.0;
    opt.stopSurvival = 0.4;
    const auto r = evolve(q, h, std::sqrt(h / 2.0), 0.0, default_grid(q, h), opt);
    CHECK(r.record.rSquared > 0.99);
    CHECK(r.record.fittedRate > 0.0);
    CHECK(r.record.fitEnd > r.record.fitStart);
    for (std::size_t i = 1; i < r.record.norm.size(); ++i) CHECK(r.record.norm[i] <= r.record.norm[i - 1] + 1e-12);
    CHECK(r.record.norm.back() <= 1.0);
    CHECK(r.spectralTail <= 1e-4);
  }

  TEST_CASE("fit sanity") {
    EscapeRecord r;
    for (int i = 0; i <= 400; ++i) {
      r.times.push_back(0.5 * i);
      r.survival.push_back(0.9 * std::exp(-0.02 * 0.5 * i));
    }
    r.norm = r.survival;
    r.meanX.assign(r.times.size(), 0.0);
    fit_rate(r, 0.0, 1.0);
    CHECK(r.fittedRate == doctest::Approx(0.02).epsilon(1e-12));
    CHECK(r.rSquared == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.fitEnd <= std::log(0.9 / 0.5) / 0.02 + 0.5);

    const auto lf = linear_fit({1.0, 2.0, 3.0, 4.0}, {3.0, 5.0, 7.0, 9.0});
    CHECK(lf.slope == doctest::Approx(2.0));
    CHECK(lf.intercept == doctest::Approx(1.0));
    CHECK_THROWS_AS(linear_fit({1.0}, {1.0}), std::invalid_argument);

    EscapeRecord flat = r;
    flat.survival.assign(r.times.size(), 1.0);
    CHECK_THROWS_AS(fit_rate(flat), FitQualityError);
    EscapeRecord shortRec;
    for (int i = 0; i < 5; ++i) {
      shortRec.times.push_back(i);
      shortRec.survival.push_back(std::exp(-0.3 * i));
    }
    CHECK_THROWS_AS(fit_rate(shortRec), FitQualityError);
  }

  TEST_CASE("sweep argument validation") {
    CHECK_THROWS_AS(exponent_sweep(Potential::quartic(), {0.1, 0.12}), std::invalid_argument);
    CHECK_THROWS_AS(exponent_sweep(Potential::quartic(), {0.06, 0.08, -0.1, 0.12}), std::invalid_argument);
    CHECK_THROWS_AS(exponent_sweep(Potential::polynomial({0, 0, 0.5, -0.2}), {0.06, 0.08, 0.1, 0.12}),
                    std::invalid_argument);
  }

  TEST_CASE("grid halving") {
    const auto c = Potential::cubic();
    EvolveOptions opt;
    opt.T = 50.0;
    opt.fit = false;
    CHECK(grid_halving_deviation(c, 0.1, default_grid(c, 0.1), opt) <= 1e-4);
  }

  TEST_CASE("survival CSV") {
    EscapeRecord r;
    r.times = {0.0, 0.5};
    r.survival = {1.0, 0.5};
    r.norm = {1.0, 0.75};
    r.meanX = {0.0, 0.0};
    CHECK(survival_csv(r) ==
          "t,P_survive,norm\n0.00000000000e+00,1.00000000000e+00,1.00000000000e+00\n"
          "5.00000000000e-01,5.00000000000e-01,7.50000000000e-01\n");
  }
}
