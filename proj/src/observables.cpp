#include "ctraj/observables.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/quadrature/gauss.hpp>

#include "ctraj/io.hpp"

namespace ctraj {

namespace {

constexpr cplx kI(0.0, 1.0);

using Gauss = boost::math::quadrature::gauss<double, 30>;

/// Distance from p to the segment [a, b].
double segment_distance(cplx p, cplx a, cplx b) {
  const cplx d = b - a;
  const double len2 = std::norm(d);
  double s = len2 > 0.0 ? ((p - a) * std::conj(d)).real() / len2 : 0.0;
  s = std::clamp(s, 0.0, 1.0);
  return std::abs(p - (a + s * d));
}

/// Poles of the closed form near the segment [a, b]; excluding the exempt
/// endpoint pole when the segment is meant to end there.
void check_clearance(const Solution& sol, cplx a, cplx b, double clearance, int seg,
                     const cplx* exemptPole) {
  const double pad = 1.0 + clearance;
  Rectangle r{std::min(a.real(), b.real()) - pad, std::max(a.real(), b.real()) + pad,
              std::min(a.imag(), b.imag()) - pad, std::max(a.imag(), b.imag()) + pad};
  const auto lat = pole_zero_lattice(sol.params(), r);
  for (const auto& p : lat.poles) {
    if (exemptPole && std::abs(p.t - *exemptPole) < 1e-9) continue;
    if (segment_distance(p.t, a, b) < clearance)
      throw ContourError("contour segment " + std::to_string(seg) + " passes within " +
                             std::to_string(clearance) + " of a pole",
                         seg);
  }
}

/// int_a^b (x'^2 - E) dt on the closed form. Pieces are at most 0.25 long
/// and at most half the distance to the nearest pole, so each 30-point Gauss
/// rule sees an analyticity ellipse with parameter >= 2 + sqrt 3.
cplx segment_action(const Solution& sol, cplx a, cplx b) {
  const cplx E = sol.params().E;
  const double len = std::abs(b - a);
  if (len == 0.0) return 0.0;
  const cplx dir = (b - a) / len;
  cplx total = 0.0;
  double s = 0.0;
  while (s < len) {
    const cplx p = a + s * dir;
    const double h = std::min({0.25, 0.5 * sol.pole_distance(p), len - s});
    const cplx d = h * dir;
    auto f = [&](double r) {
      const State st = sol.state(p + r * d);
      return (st.v * st.v - E) * d;
    };
    total += Gauss::integrate(f, 0.0, 1.0);
    s = (len - s - h <= 1e-15 * len) ? len : s + h;
  }
  return total;
}

/// Power-series coefficients of sqrt(P(y)), P(0) = 1.
std::vector<cplx> sqrt_series(const std::vector<cplx>& P, int J) {
  std::vector<cplx> p(J + 1, 0.0), g(J + 1, 0.0);
  for (std::size_t k = 0; k < P.size() && int(k) <= J; ++k) p[k] = P[k];
  g[0] = 1.0;
  for (int n = 1; n <= J; ++n) {
    cplx s = p[n];
    for (int k = 1; k < n; ++k) s -= g[k] * g[n - k];
    g[n] = s / 2.0;
  }
  return g;
}

struct Tail {
  cplx value;    // FP int_{x_c}^inf f dx - E (t0 - t_c)
  double mismatch;  // |f(x_c) - x'(t_c)| / |x'(t_c)|
};

/// Finite-part remainder of the action from t_c to the escape pole t_p.
Tail pole_tail(const Solution& sol, cplx tc, cplx tp) {
  constexpr int J = 60;
  const auto& prm = sol.params();
  const cplx E = prm.E;
  const State s = sol.state(tc);
  const cplx X = s.x, y = 1.0 / X;
  cplx fp = 0.0, fx = 0.0;
  if (prm.potential.kind() == PotentialKind::Quartic) {
    // 2(E - V) = x^4 (1 - y^2 + 2E y^4)
    const auto g = sqrt_series({1.0, 0.0, -1.0, 0.0, 2.0 * E}, J);
    cplx gy = 0.0;
    for (int j = J; j >= 0; --j) gy = gy * y + g[j];
    fx = X * X * gy;
    for (int j = 0; j <= J; ++j) {
      if (j == 3) continue;  // g_3 = 0: no logarithm
      fp -= g[j] * std::pow(X, double(3 - j)) / double(3 - j);
    }
  } else {
    // 2(E - V) = (2/3) x^3 (1 - (3/2) y + 3E y^3)
    const auto g = sqrt_series({1.0, -1.5, 0.0, 3.0 * E}, J);
    const double c = std::sqrt(2.0 / 3.0);
    const cplx x32 = X * std::sqrt(X);
    cplx gy = 0.0;
    for (int j = J; j >= 0; --j) gy = gy * y + g[j];
    fx = c * x32 * gy;
    for (int j = 0; j <= J; ++j)
      fp -= c * g[j] * x32 * X * std::pow(y, double(j)) / (2.5 - double(j));
  }
  // Branch of the square root follows the velocity at the cutoff.
  double sign = 1.0;
  if (std::abs(fx + s.v) < std::abs(fx - s.v)) sign = -1.0;
  const double mismatch = std::abs(sign * fx - s.v) / std::abs(s.v);
  return {sign * fp - E * (tp - tc), mismatch};
}

/// Point on [a, tp] where |x| = X, approaching the pole tp.
cplx cutoff_point(const Solution& sol, cplx a, cplx tp, double X) {
  const double len = std::abs(tp - a);
  const double d0 = sol.pole_order() == 2 ? std::sqrt(6.0 / X) : 1.0 / X;
  auto at = [&](double delta) { return tp + (a - tp) * (delta / len); };
  auto mag = [&](double delta) {
    try {
      return std::abs(sol.x(at(delta)));
    } catch (const PoleProximity&) {
      return std::numeric_limits<double>::infinity();
    }
  };
  // March outward from the pole to the first crossing |x| = X.
  double lo = d0 / 8.0;
  while (mag(lo) <= X) lo /= 2.0;
  double hi = lo * 1.25;
  while (mag(hi) > X) {
    lo = hi;
    hi *= 1.25;
    if (hi >= len) throw RegularizationError("cutoff_point: |x| stays above the cutoff on the segment");
  }
  for (int k = 0; k < 200 && hi - lo > 1e-15 * hi; ++k) {
    const double mid = 0.5 * (lo + hi);
    (mag(mid) > X ? lo : hi) = mid;
  }
  return at(0.5 * (lo + hi));
}

double find_emergence(const Solution& sol, double ta, double tb, double level, bool* found) {
  constexpr int n = 4000;
  auto g = [&](double t) { return sol.x(t).real() - level; };
  double prev = g(ta);
  double last = std::numeric_limits<double>::quiet_NaN();
  double lo = 0.0, hi = 0.0;
  for (int i = 1; i <= n; ++i) {
    const double t = ta + (tb - ta) * double(i) / n;
    const double cur = g(t);
    if ((prev < 0.0) != (cur < 0.0)) {
      lo = ta + (tb - ta) * double(i - 1) / n;
      hi = t;
      last = t;
    }
    prev = cur;
  }
  // A grazing approach (local minimum of |Re x - level| within kGraze of
  // the level, without a sign change) counts as a crossing.
  constexpr double kGraze = 0.02;
  double graze = std::numeric_limits<double>::quiet_NaN();
  {
    const double dt = (tb - ta) / n;
    double a = std::abs(g(ta)), b = std::abs(g(ta + dt));
    for (int i = 2; i <= n; ++i) {
      const double c = std::abs(g(ta + dt * i));
      if (b <= a && b <= c && b < kGraze * level) {
        double lo2 = ta + dt * (i - 2), hi2 = ta + dt * i;
        const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
        auto f = [&](double s) { return std::abs(g(s)); };
        double c1 = hi2 - gr * (hi2 - lo2), d1 = lo2 + gr * (hi2 - lo2);
        double f1 = f(c1), f2 = f(d1);
        for (int k = 0; k < 100 && hi2 - lo2 > 1e-12; ++k) {
          if (f1 < f2) hi2 = d1, d1 = c1, f2 = f1, c1 = hi2 - gr * (hi2 - lo2), f1 = f(c1);
          else lo2 = c1, c1 = d1, f1 = f2, d1 = lo2 + gr * (hi2 - lo2), f2 = f(d1);
        }
        graze = 0.5 * (lo2 + hi2);
      }
      a = b;
      b = c;
    }
  }
  if (found) *found = !std::isnan(last) || !std::isnan(graze);
  if (std::isnan(last) && std::isnan(graze)) return tb;
  double cross = -std::numeric_limits<double>::infinity();
  if (!std::isnan(last)) {
    double glo = g(lo);
    for (int k = 0; k < 100 && hi - lo > 1e-14; ++k) {
      const double mid = 0.5 * (lo + hi);
      const double gm = g(mid);
      if ((gm < 0.0) == (glo < 0.0)) lo = mid, glo = gm;
      else hi = mid;
    }
    cross = 0.5 * (lo + hi);
  }
  return std::isnan(graze) ? cross : std::max(cross, graze);
}

bool is_escape_end(const Solution& sol, cplx tEnd) {
  try {
    return std::abs(sol.x(tEnd)) >= 10.0 && sol.pole_distance(tEnd) < 0.5;
  } catch (const PoleProximity&) {
    return true;
  }
}

}  // namespace

cplx solution_epsilon(const TrajectoryParams& params) {
  return params.potential.kind() == PotentialKind::Cubic ? -kI * params.m * params.m : -kI * params.m;
}

ActionExponent action_along_contour(const TrajectoryParams& params, const std::vector<cplx>& contour,
                                    double L, const ContourOptions& opt, const std::string& label) {
  if (contour.size() < 2) throw ContourError("contour needs at least two vertices", 0);
  if (!(L > 0.0)) throw std::invalid_argument("action_along_contour: L must be positive");
  const Solution sol(params);
  const int nseg = int(contour.size()) - 1;

  // Escape-pole closure when the contour ends on (or next to) a pole.
  cplx tp = sol.nearest_pole(contour.back());
  const bool tail = std::abs(tp - contour.back()) < 1e-6 || is_escape_end(sol, contour.back());

  ActionExponent out;
  out.contour = label;
  out.couplingScale = params.potential.couplingScale();
  out.tail = tail;

  cplx body = 0.0;
  for (int k = 0; k < nseg; ++k) {
    const cplx a = contour[k], b = contour[k + 1];
    const bool last = k + 1 == nseg;
    check_clearance(sol, a, b, opt.poleClearance, k, (last && tail) ? &tp : nullptr);
    if (!last || !tail) body += segment_action(sol, a, b);
  }

  const cplx xi = sol.x(contour.front());
  out.boundaryTerm = -xi * xi / (4.0 * L * L);

  cplx S = body;
  if (tail) {
    const cplx a = contour[nseg - 1];
    auto closed = [&](double X) {
      const cplx tc = cutoff_point(sol, a, tp, X);
      const Tail t = pole_tail(sol, tc, tp);
      if (t.mismatch > 1e-8) throw RegularizationError("pole tail does not match the velocity at the cutoff");
      return segment_action(sol, a, tc) + t.value;
    };
    const cplx S1 = body + closed(opt.cutoffX);
    const cplx S2 = body + closed(opt.cutoffCheckX);
    out.cutoffShift = std::abs(2.0 * (S1 - S2).imag());
    if (out.cutoffShift > opt.cutoffTolerance)
      throw RegularizationError("action depends on the cutoff by " + std::to_string(out.cutoffShift));
    S = S1;
  }
  out.action = S;
  out.probExponent = 2.0 * (kI * S + out.boundaryTerm).real();
  out.suppressedProbability = std::exp(out.couplingScale * out.probExponent);

  // Phase over the pre-emergence real-axis segment.
  const cplx t0v = contour.front();
  if (t0v.imag() == 0.0 && params.potential.has_closed_form()) {
    const double tEnd = (tail ? tp : contour.back()).real();
    bool found = false;
    const double te = find_emergence(sol, t0v.real(), tEnd - (tail ? 1.0 / opt.cutoffX : 0.0),
                                     params.potential.turning_point(), &found);
    out.phaseCutoff = te;
    out.phase = segment_action(sol, t0v.real(), te).real();
  }
  return out;
}

ActionExponent action_exponent_real_time(const Trajectory& traj, double L, const ContourOptions& opt) {
  const auto& prm = traj.params;
  if (!prm.potential.has_closed_form() || traj.samples.empty())
    throw std::invalid_argument("action_exponent_real_time: closed-form trajectory required");
  const cplx r = initial_condition_residual(prm, BoundaryData{traj.window.first, traj.window.second + 1.0,
                                                              std::nullopt, L});
  if (max_scaled_energy_error(traj) > 1e-8 || std::abs(r) > 1e-8)
    throw std::invalid_argument("action_exponent_real_time: trajectory is not certified");
  const Solution sol(prm);
  cplx end = traj.window.second;
  if (is_escape_end(sol, end)) end = sol.nearest_pole(end);
  return action_along_contour(prm, {cplx(traj.window.first), end}, L, opt, "real-axis");
}

std::vector<cplx> fig2_contour(const TrajectoryParams& params, double t_i, cplx t_end) {
  const Solution sol(params);
  const cplx a = sol.side_a(), b = sol.side_b();
  const cplx base = params.t0 + b;  // zero line: base + s a
  auto on_line = [&](double re) { return base + ((re - base.real()) / a.real()) * a; };
  const cplx z1 = on_line(t_i);
  const double reDown = params.t0.real() - 0.5 * a.real();
  const cplx z2 = on_line(reDown);
  return {cplx(t_i), z1, z2, cplx(reDown), t_end};
}

std::vector<cplx> euclidean_contour(const TrajectoryParams& params) {
  const Solution sol(params);
  const cplx a = sol.side_a(), b = sol.side_b();
  const cplx start = params.t0 - a + b;  // zero of x (x - A for the cubic)
  const cplx z2 = params.t0 - 0.5 * a + b;
  return {start, z2, cplx(z2.real()), params.t0};
}

std::vector<cplx> detour_contour(double t_i, double a, double b, double h, cplx t_end) {
  return {cplx(t_i), cplx(a), cplx(a, h), cplx(b, h), cplx(b), t_end};
}

void PointerConfig::validate() const {
  if (!(g > 0.0) || !std::isfinite(g)) throw std::invalid_argument("pointer g must be positive");
  if (!(deltaX > 0.0) || !std::isfinite(deltaX)) throw std::invalid_argument("pointer deltaX must be positive");
  if (!(hbarEff > 0.0) || !std::isfinite(hbarEff)) throw std::invalid_argument("pointer hbarEff must be positive");
  if (!std::isfinite(t_m)) throw std::invalid_argument("pointer t_m must be finite");
}

PointerBias pointer_bias(const Trajectory& traj, const PointerConfig& c) {
  c.validate();
  if (traj.samples.empty() || c.t_m < traj.samples.front().t || c.t_m > traj.samples.back().t)
    throw DomainError("pointer_bias: t_m outside the trajectory window");
  cplx x;
  if (traj.params.potential.has_closed_form()) {
    x = Solution(traj.params).x(c.t_m);
  } else {
    // Cubic Hermite interpolation between the bracketing samples.
    auto it = std::lower_bound(traj.samples.begin(), traj.samples.end(), c.t_m,
                               [](const Sample& s, double t) { return s.t < t; });
    if (it == traj.samples.begin()) ++it;
    const Sample& s1 = *it;
    const Sample& s0 = *(it - 1);
    const double h = s1.t - s0.t, u = (c.t_m - s0.t) / h;
    const double h00 = (1 + 2 * u) * (1 - u) * (1 - u), h10 = u * (1 - u) * (1 - u);
    const double h01 = u * u * (3 - 2 * u), h11 = u * u * (u - 1);
    x = h00 * s0.x + h10 * h * s0.v + h01 * s1.x + h11 * h * s1.v;
  }
  return {c.g * x.real(), c.g * c.hbarEff / (2.0 * c.deltaX * c.deltaX) * x.imag()};
}

double emergence_time(const Trajectory& traj, double level, bool* found) {
  if (traj.samples.size() < 2) throw std::invalid_argument("emergence_time: empty trajectory");
  return find_emergence(Solution(traj.params), traj.samples.front().t, traj.samples.back().t, level, found);
}

ImagExcursion imag_excursion(const Trajectory& traj) {
  const auto& prm = traj.params;
  if (!prm.potential.has_closed_form() || traj.samples.size() < 3)
    throw std::invalid_argument("imag_excursion: closed-form trajectory required");
  const Solution sol(prm);
  ImagExcursion out;
  out.epsilon = solution_epsilon(prm);
  const double ae = std::abs(out.epsilon);
  out.predictedScale = prm.potential.kind() == PotentialKind::Quartic ? 0.4 / ae : 1.5 / (ae * ae);

  std::size_t best = 0;
  for (std::size_t i = 1; i < traj.samples.size(); ++i)
    if (std::abs(traj.samples[i].x.imag()) > std::abs(traj.samples[best].x.imag())) best = i;
  out.interiorMaximum = best > 0 && best + 1 < traj.samples.size();
  double t = traj.samples[best].t;
  if (out.interiorMaximum) {
    // Golden-section refinement of |Im x| on the bracketing cells.
    double lo = traj.samples[best - 1].t, hi = traj.samples[best + 1].t;
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    auto f = [&](double s) { return std::abs(sol.x(s).imag()); };
    double c = hi - gr * (hi - lo), d = lo + gr * (hi - lo);
    double fc = f(c), fd = f(d);
    for (int k = 0; k < 200 && hi - lo > 1e-13; ++k) {
      if (fc > fd) hi = d, d = c, fd = fc, c = hi - gr * (hi - lo), fc = f(c);
      else lo = c, c = d, fc = fd, d = lo + gr * (hi - lo), fd = f(d);
    }
    t = 0.5 * (lo + hi);
  }
  out.tStar = t;
  out.peakIm = sol.x(t);
  out.emergenceTime = find_emergence(sol, traj.samples.front().t, traj.samples.back().t,
                                     prm.potential.turning_point(), &out.emerged);
  out.leadTime = out.emergenceTime - out.tStar;
  return out;
}

std::vector<BranchEntry> branch_suppression_compare(const Potential& potential, double T,
                                                    const std::vector<int>& branches) {
  BoundaryData b;
  b.t_i = -T;
  b.t_f = 0.0;
  auto solve = [&](int n) {
    BranchEntry e{n, false, std::numeric_limits<double>::quiet_NaN(), 0.0, 0.0, n < 0, false, ""};
    try {
      auto [rep, traj] = solve_tunneling(potential, b, n);
      e.converged = rep.converged;
      e.E = rep.params.E;
      e.epsilon = rep.epsilon;
      if (rep.converged) e.probExponent = action_exponent_real_time(traj, b.L).probExponent;
      else e.error = "not converged";
    } catch (const std::exception& ex) {
      e.error = ex.what();
    }
    return e;
  };
  std::vector<BranchEntry> out;
  for (int n : branches) out.push_back(solve(n));
  double ref = std::numeric_limits<double>::quiet_NaN();
  for (const auto& e : out)
    if (e.branch == 0) ref = e.probExponent;
  if (std::isnan(ref)) ref = solve(0).probExponent;
  for (auto& e : out) e.unsuppressed = !std::isnan(e.probExponent) && e.probExponent >= ref;
  std::stable_sort(out.begin(), out.end(), [](const BranchEntry& x, const BranchEntry& y) {
    const bool fx = std::isnan(x.probExponent), fy = std::isnan(y.probExponent);
    if (fx != fy) return fy;
    return !fx && x.probExponent > y.probExponent;
  });
  return out;
}

std::string exponent_json(const ActionExponent& a) {
  io::Json j;
  j["probExponent"] = a.probExponent;
  j["phase"] = a.phase;
  j["boundaryTerm"] = io::complex_pair(a.boundaryTerm.real(), a.boundaryTerm.imag());
  j["contour"] = a.contour;
  j["couplingScale"] = a.couplingScale;
  j["suppressedProbability"] = a.suppressedProbability;
  j["action"] = io::complex_pair(a.action.real(), a.action.imag());
  j["phaseCutoff"] = a.phaseCutoff;
  j["cutoffShift"] = a.cutoffShift;
  return io::dump(j);
}

std::string pointer_json(const PointerConfig& c, const PointerBias& b) {
  io::Json j;
  j["t_m"] = c.t_m;
  j["dX"] = b.dX;
  j["dP"] = b.dP;
  j["g"] = c.g;
  j["deltaX"] = c.deltaX;
  j["hbarEff"] = c.hbarEff;
  return io::dump(j);
}

}  // namespace ctraj
