#include "ctraj/bvp.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "ctraj/io.hpp"

namespace ctraj {

namespace {

constexpr cplx kI(0.0, 1.0);
constexpr double kInf = std::numeric_limits<double>::infinity();

bool finite(cplx z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

/// Residual norm that maps pole hits and overflow to +inf, so that line
/// search treats them as rejected trials.
double safe_norm(const TrajectoryParams& p, const BoundaryData& b, Residual* out = nullptr) {
  try {
    const Residual r = boundary_residual(p, b);
    if (!finite(r.init) || !finite(r.final)) return kInf;
    if (out) *out = r;
    return r.norm();
  } catch (const PoleProximity&) {
    return kInf;
  } catch (const DomainError&) {
    return kInf;
  }
}

TrajectoryParams with(const TrajectoryParams& p, cplx m, cplx t0) {
  return TrajectoryParams::from_m(p.potential, m, t0);
}

/// Analytic derivative by a four-point Cauchy difference, error O(h^4).
template <class F>
cplx analytic_derivative(F&& f, cplx z, double h) {
  return (f(z + h) - f(z - h) - kI * (f(z + kI * h) - f(z - kI * h))) / (4.0 * h);
}

cplx epsilon_of_m(PotentialKind kind, cplx m) {
  return kind == PotentialKind::Cubic ? -kI * m * m : -kI * m;
}

}  // namespace

void BoundaryData::validate(const Potential& p) const {
  if (!std::isfinite(t_i) || !std::isfinite(t_f)) throw std::invalid_argument("t_i and t_f must be finite");
  if (!(t_f > t_i)) throw std::invalid_argument("t_f must exceed t_i");
  if (!(L > 0.0) || !std::isfinite(L)) throw std::invalid_argument("L must be positive");
  if (x_f) {
    if (!finite(*x_f)) throw std::invalid_argument("x_f must be finite or inf");
    if (p.has_closed_form() && !(std::abs(*x_f) > p.turning_point()))
      throw std::invalid_argument("|x_f| must exceed the turning point");
  }
}

cplx initial_condition_residual(const TrajectoryParams& params, const BoundaryData& boundary) {
  const State s = Solution(params).state(boundary.t_i);
  return s.x + 2.0 * kI * boundary.L * boundary.L * s.v;
}

Residual boundary_residual(const TrajectoryParams& params, const BoundaryData& boundary) {
  const Solution sol(params);
  const State si = sol.state(boundary.t_i);
  Residual r;
  r.init = si.x + 2.0 * kI * boundary.L * boundary.L * si.v;
  if (boundary.infinite()) r.final = params.t0 - boundary.t_f;
  else r.final = sol.x(boundary.t_f) - *boundary.x_f;
  return r;
}

FinalCondition final_condition_t0(PotentialKind kind, std::optional<cplx> x_f, double t_f) {
  if (!x_f) return {cplx(t_f), 0.0, false};
  const cplx xf = *x_f;
  const double a = std::abs(xf);
  if (!(a > 0.0)) throw std::invalid_argument("final_condition_t0: x_f must be nonzero");
  const bool fallback = a < 10.0;
  switch (kind) {
    case PotentialKind::Quartic: return {t_f + 1.0 / xf, std::pow(a, -3.0), fallback};
    case PotentialKind::Cubic: return {t_f + std::sqrt(6.0 / xf), std::pow(a, -1.5), fallback};
    default: throw std::invalid_argument("final_condition_t0: closed-form potentials only");
  }
}

Seed seed_epsilon(PotentialKind kind, double T, int branch) {
  if (!(T > 0.0) || !std::isfinite(T)) throw std::invalid_argument("seed_epsilon: T must be positive");
  cplx rhs, coef;
  if (kind == PotentialKind::Quartic) {
    rhs = 48.0 * kI * T * std::exp(-4.0 * kI * T);
    coef = 3.0 * T;
  } else if (kind == PotentialKind::Cubic) {
    rhs = -180.0 * kI * T * std::exp(-3.0 * kI * T);
    coef = 45.0 / 64.0 * T;
  } else {
    throw std::invalid_argument("seed_epsilon: closed-form potentials only");
  }
  const auto lw = specfun::lambert_w_checked(branch, rhs);
  Seed s;
  s.epsilon = lw.w / coef;
  s.m = kind == PotentialKind::Quartic ? kI * s.epsilon : std::sqrt(kI * s.epsilon);
  s.rangeWarning = T < 5.0;
  s.conditioningWarning = lw.nearBranchPoint;
  const cplx w = coef * s.epsilon;
  s.equationResidual = std::abs(w * std::exp(w) - rhs) / std::abs(rhs);
  return s;
}

SolveReport newton_refine(const TrajectoryParams& seed, const BoundaryData& boundary,
                          const NewtonOptions& options) {
  boundary.validate(seed.potential);
  const PotentialKind kind = seed.potential.kind();
  SolveReport rep;
  rep.params = seed;
  rep.seedM = seed.m;
  rep.seedEpsilon = epsilon_of_m(kind, seed.m);

  TrajectoryParams cur = seed;
  if (boundary.infinite()) cur = with(seed, seed.m, boundary.t_f);
  else rep.finalFallback = final_condition_t0(kind, boundary.x_f, boundary.t_f).fallback;

  Residual res;
  double norm = safe_norm(cur, boundary, &res);
  if (!std::isfinite(norm)) throw std::invalid_argument("newton_refine: seed sits on a solution pole");

  int it = 0;
  while (norm > options.tolerance && it < options.maxIterations) {
    const cplx m = cur.m, t0 = cur.t0;
    const double h = 1e-5 * std::max(std::abs(m), 1e-2);
    cplx dm, dt0 = 0.0;
    if (boundary.infinite()) {
      auto f = [&](cplx mm) { return boundary_residual(with(cur, mm, t0), boundary).init; };
      const cplx J = analytic_derivative(f, m, h);
      if (!finite(J) || std::abs(J) == 0.0)
        throw BifurcationError("newton_refine: singular Jacobian; try another branch");
      dm = -res.init / J;
    } else {
      const double ht = 1e-6 * std::max(1.0, std::abs(t0));
      auto fm = [&](cplx mm) {
        const Residual r = boundary_residual(with(cur, mm, t0), boundary);
        return std::pair{r.init, r.final};
      };
      auto ft = [&](cplx tt) {
        const Residual r = boundary_residual(with(cur, m, tt), boundary);
        return std::pair{r.init, r.final};
      };
      auto d1 = [&](auto&& f, cplx z, double hh) {
        const auto a = f(z + hh), b = f(z - hh), c = f(z + kI * hh), d = f(z - kI * hh);
        return std::pair{(a.first - b.first - kI * (c.first - d.first)) / (4.0 * hh),
                         (a.second - b.second - kI * (c.second - d.second)) / (4.0 * hh)};
      };
      const auto [a11, a21] = d1(fm, m, h);
      const auto [a12, a22] = d1(ft, t0, ht);
      const cplx det = a11 * a22 - a12 * a21;
      if (!finite(det) || std::abs(det) == 0.0)
        throw BifurcationError("newton_refine: singular Jacobian; try another branch");
      dm = -(a22 * res.init - a12 * res.final) / det;
      dt0 = -(a11 * res.final - a21 * res.init) / det;
    }

    // Monotone line search: halve until the residual norm decreases.
    double lambda = 1.0;
    TrajectoryParams trial;
    Residual trialRes;
    double trialNorm = kInf;
    for (int k = 0; k < 30; ++k, lambda *= 0.5) {
      trial = with(cur, m + lambda * dm, t0 + lambda * dt0);
      trialNorm = safe_norm(trial, boundary, &trialRes);
      if (trialNorm < norm) break;
    }
    ++it;
    if (!(trialNorm < norm)) break;  // stalled at the best residual
    cur = trial;
    res = trialRes;
    norm = trialNorm;
  }

  rep.params = cur;
  rep.iterations = it;
  rep.residual = res;
  rep.converged = norm <= options.tolerance;
  rep.epsilon = epsilon_of_m(kind, cur.m);
  return rep;
}

double runaway_cutoff(const TrajectoryParams& params, const BoundaryData& boundary, double threshold) {
  const Solution sol(params);
  auto mag = [&](double delta) {
    try {
      return std::abs(sol.x(boundary.t_f - delta));
    } catch (const PoleProximity&) {
      return kInf;
    }
  };
  if (mag(0.0) <= threshold) return 0.0;
  const double guess = params.potential.kind() == PotentialKind::Cubic ? std::sqrt(6.0 / threshold)
                                                                        : 1.0 / threshold;
  double hi = guess;
  while (mag(hi) > threshold) {
    hi *= 2.0;
    if (hi > boundary.T()) throw std::runtime_error("runaway_cutoff: |x| exceeds threshold on the window");
  }
  double lo = 0.0;
  for (int k = 0; k < 200 && hi - lo > 1e-15 * hi; ++k) {
    const double mid = 0.5 * (lo + hi);
    (mag(mid) > threshold ? lo : hi) = mid;
  }
  return hi;
}

std::pair<SolveReport, Trajectory> solve_tunneling(const Potential& potential,
                                                   const BoundaryData& boundary, int branch,
                                                   const SolveOptions& options) {
  boundary.validate(potential);
  if (options.samples < 2000) throw std::invalid_argument("solve_tunneling: need >= 2000 samples");
  const Seed seed = seed_epsilon(potential.kind(), boundary.T(), branch);
  const FinalCondition fc = final_condition_t0(potential.kind(), boundary.x_f, boundary.t_f);
  SolveReport rep = newton_refine(TrajectoryParams::from_m(potential, seed.m, fc.t0), boundary, options.newton);
  rep.branch = branch;
  rep.seedEpsilon = seed.epsilon;
  rep.seedM = seed.m;
  rep.transient = branch < 0;
  rep.rangeWarning = seed.rangeWarning;
  rep.conditioningWarning = seed.conditioningWarning;
  const double delta = runaway_cutoff(rep.params, boundary, options.runawayThreshold);
  Trajectory traj = sample_exact(rep.params, {boundary.t_i, boundary.t_f - delta}, options.samples);
  return {rep, traj};
}

std::string solve_report_json(const SolveReport& r, const BoundaryData& b) {
  using io::complex_pair;
  io::Json j;
  j["potential"] = to_string(r.params.potential.kind());
  j["t_i"] = b.t_i;
  j["t_f"] = b.t_f;
  if (b.x_f) j["x_f"] = complex_pair(b.x_f->real(), b.x_f->imag());
  else j["x_f"] = "inf";
  j["L"] = b.L;
  j["branch"] = r.branch;
  j["m"] = complex_pair(r.params.m.real(), r.params.m.imag());
  j["t0"] = complex_pair(r.params.t0.real(), r.params.t0.imag());
  j["E"] = complex_pair(r.params.E.real(), r.params.E.imag());
  j["epsilon"] = complex_pair(r.epsilon.real(), r.epsilon.imag());
  j["seedEpsilon"] = complex_pair(r.seedEpsilon.real(), r.seedEpsilon.imag());
  j["residual"] = {{"init", complex_pair(r.residual.init.real(), r.residual.init.imag())},
                   {"final", complex_pair(r.residual.final.real(), r.residual.final.imag())}};
  j["iterations"] = r.iterations;
  j["converged"] = r.converged;
  j["transient"] = r.transient;
  j["finalFallback"] = r.finalFallback;
  j["rangeWarning"] = r.rangeWarning;
  j["conditioningWarning"] = r.conditioningWarning;
  return io::dump(j);
}

}  // namespace ctraj
