#include "ctraj/dynamics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "ctraj/io.hpp"

namespace ctraj {

using specfun::EllipticContext;
using specfun::JacobiTriple;
using specfun::kPi;

std::string to_string(PotentialKind kind) {
  switch (kind) {
    case PotentialKind::Quartic: return "quartic";
    case PotentialKind::Cubic: return "cubic";
    case PotentialKind::Polynomial: return "polynomial";
  }
  return "unknown";
}

PotentialKind parse_potential_kind(const std::string& name) {
  if (name == "quartic") return PotentialKind::Quartic;
  if (name == "cubic") return PotentialKind::Cubic;
  if (name == "polynomial") return PotentialKind::Polynomial;
  throw std::invalid_argument("unknown potential '" + name + "'");
}

Potential::Potential(PotentialKind kind, std::vector<double> coeffs, double couplingScale)
    : kind_(kind), coeffs_(std::move(coeffs)), couplingScale_(couplingScale) {
  if (!(couplingScale_ > 0.0) || !std::isfinite(couplingScale_))
    throw std::invalid_argument("couplingScale must be positive and finite");
  while (coeffs_.size() > 1 && coeffs_.back() == 0.0) coeffs_.pop_back();
}

Potential Potential::quartic(double couplingScale) {
  return Potential(PotentialKind::Quartic, {0.0, 0.0, 0.5, 0.0, -0.5}, couplingScale);
}

Potential Potential::cubic(double couplingScale) {
  return Potential(PotentialKind::Cubic, {0.0, 0.0, 0.5, -1.0 / 3.0}, couplingScale);
}

Potential Potential::polynomial(std::vector<double> coeffs, double couplingScale) {
  if (coeffs.empty()) throw std::invalid_argument("polynomial potential needs coefficients");
  for (double c : coeffs)
    if (!std::isfinite(c)) throw std::invalid_argument("non-finite potential coefficient");
  return Potential(PotentialKind::Polynomial, std::move(coeffs), couplingScale);
}

Potential Potential::of_kind(PotentialKind kind, double couplingScale) {
  switch (kind) {
    case PotentialKind::Quartic: return quartic(couplingScale);
    case PotentialKind::Cubic: return cubic(couplingScale);
    default: throw std::invalid_argument("of_kind: polynomial potentials need coefficients");
  }
}

cplx Potential::value(cplx x) const {
  cplx acc = 0.0;
  for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) acc = acc * x + *it;
  return acc;
}

cplx Potential::derivative(cplx x) const {
  cplx acc = 0.0;
  for (std::size_t k = coeffs_.size() - 1; k >= 1; --k) acc = acc * x + double(k) * coeffs_[k];
  return acc;
}

double Potential::turning_point() const {
  switch (kind_) {
    case PotentialKind::Quartic: return 1.0;
    case PotentialKind::Cubic: return 1.5;
    default: throw std::logic_error("turning_point: only defined for closed-form potentials");
  }
}

double Potential::barrier_top() const {
  switch (kind_) {
    case PotentialKind::Quartic: return 1.0 / std::sqrt(2.0);
    case PotentialKind::Cubic: return 1.0;
    default: throw std::logic_error("barrier_top: only defined for closed-form potentials");
  }
}

double Potential::euclidean_action() const {
  switch (kind_) {
    case PotentialKind::Quartic: return 2.0 / 3.0;
    case PotentialKind::Cubic: return 6.0 / 5.0;
    default: throw std::logic_error("euclidean_action: only defined for closed-form potentials");
  }
}

cplx potential_value(const Potential& p, cplx x) { return p.value(x); }

cplx energy_of_m(PotentialKind kind, cplx m) {
  switch (kind) {
    case PotentialKind::Quartic: return m / (2.0 * (1.0 + m) * (1.0 + m));
    case PotentialKind::Cubic: {
      const cplx w = 1.0 + m * (m - 1.0);
      return 1.0 / 12.0 - (2.0 * m - 1.0) * (m - 2.0) * (m + 1.0) / (24.0 * w * std::sqrt(w));
    }
    default: throw std::logic_error("energy_of_m: no closed form for polynomial potentials");
  }
}

TrajectoryParams TrajectoryParams::from_m(const Potential& p, cplx m, cplx t0) {
  if (!p.has_closed_form()) throw std::invalid_argument("from_m: potential has no closed form");
  TrajectoryParams out;
  out.potential = p;
  out.m = m;
  out.t0 = t0;
  out.E = energy_of_m(p.kind(), m);
  return out;
}

TrajectoryParams TrajectoryParams::from_pair(const Potential& p, cplx m, cplx E, cplx t0) {
  auto out = from_m(p, m, t0);
  if (std::abs(out.E - E) > 1e-10)
    throw std::invalid_argument("(m, E) pair violates the energy map: |E - E(m)| = " +
                                std::to_string(std::abs(out.E - E)));
  out.E = E;
  return out;
}

TrajectoryParams TrajectoryParams::energy_only(const Potential& p, cplx E) {
  TrajectoryParams out;
  out.potential = p;
  out.m = std::numeric_limits<double>::quiet_NaN();
  out.t0 = 0.0;
  out.E = E;
  return out;
}

// ---------------------------------------------------------------------------

Solution::Solution(const TrajectoryParams& params)
    : params_(params), ctx_(EllipticContext::make(params.m)) {
  const cplx m = params.m;
  switch (params.potential.kind()) {
    case PotentialKind::Quartic:
      scale_ = 1.0 / std::sqrt(1.0 + m);
      break;
    case PotentialKind::Cubic: {
      const cplx w = 1.0 + m * (m - 1.0);
      const cplx sw = std::sqrt(w);
      A_ = 0.5 * (1.0 - (1.0 + m) / sw);
      B_ = 1.5 / sw;
      C_ = 0.5 / std::sqrt(sw);
      scale_ = C_;
      break;
    }
    default: throw std::invalid_argument("Solution: potential has no closed form");
  }
}

cplx Solution::u_of_t(cplx t) const { return scale_ * (params_.t0 - t); }
cplx Solution::t_of_u(cplx u) const { return params_.t0 - u / scale_; }

cplx Solution::side_a() const { return 2.0 * ctx_.K / scale_; }
cplx Solution::side_b() const { return cplx(0.0, 1.0) * ctx_.Kprime / scale_; }

cplx Solution::nearest_pole(cplx t) const {
  return t_of_u(specfun::nearest_sn_zero(u_of_t(t), ctx_));
}

State Solution::state(cplx t) const {
  const cplx u = u_of_t(t);
  const cplx z = specfun::nearest_sn_zero(u, ctx_);
  const cplx tp = t_of_u(z);
  const bool cubic = params_.potential.kind() == PotentialKind::Cubic;
  if (std::abs(t - tp) < specfun::kPoleRadius) {
    const auto lc = specfun::lattice_coords(z, ctx_);
    const long j = std::lround(lc.alpha);
    if (cubic) throw PoleProximity("solution pole (double)", tp, 6.0, 2);
    throw PoleProximity("solution pole", tp, (j % 2 == 0) ? -1.0 : 1.0, 1);
  }

  // Reciprocal quantities rs = 1/sn and rcd = cn dn / sn^2. Near a pole of sn
  // they come from the shifted argument w = u - iK':
  //   1/sn(u) = k sn(w), cn dn / sn^2 (u) = -k cn(w) dn(w).
  cplx rs, rcd;
  bool shifted = false;
  if (params_.m != 0.0) {
    const cplx p = specfun::nearest_sn_pole(u, ctx_);
    shifted = std::abs(u - p) < std::abs(u - z);
  }
  if (shifted) {
    const cplx k = std::sqrt(params_.m);
    const JacobiTriple j = specfun::jacobi(u - cplx(0.0, 1.0) * ctx_.Kprime, ctx_);
    rs = k * j.sn;
    rcd = -k * j.cn * j.dn;
  } else {
    const JacobiTriple j = specfun::jacobi(u, ctx_);
    rs = 1.0 / j.sn;
    rcd = j.cn * j.dn * rs * rs;
  }

  if (cubic) return {A_ + B_ * rs * rs, 2.0 * B_ * C_ * rcd * rs};
  return {scale_ * rs, scale_ * scale_ * rcd};
}

cplx exact_solution(const TrajectoryParams& params, cplx t) { return Solution(params).x(t); }

cplx equation_of_motion_residual(const TrajectoryParams& params, cplx t) {
  static constexpr std::array<double, 5> c = {-205.0 / 72.0, 8.0 / 5.0, -1.0 / 5.0, 8.0 / 315.0,
                                              -1.0 / 560.0};
  const Solution sol(params);
  const double d = sol.pole_distance(t);
  if (d < 1e-2) {
    const cplx tp = sol.nearest_pole(t);
    throw PoleProximity("equation_of_motion_residual: too close to a pole", tp,
                        sol.pole_order() == 2 ? cplx(6.0) : cplx(1.0), sol.pole_order());
  }
  const double h = 1e-2 * std::min(1.0, d / 5.0);
  const cplx x0 = sol.x(t);
  cplx xpp = c[0] * x0;
  for (int k = 1; k <= 4; ++k) xpp += c[k] * (sol.x(t + double(k) * h) + sol.x(t - double(k) * h));
  xpp /= h * h;
  return xpp + params.potential.derivative(x0);
}

// ---------------------------------------------------------------------------

namespace {

/// Taylor coefficients a[0..N] of x(t0 + tau) for x'' = -V'(x).
void taylor_coefficients(const std::vector<double>& vc, cplx x, cplx v, int N,
                         std::vector<cplx>& a, std::vector<std::vector<cplx>>& pw) {
  const int d = static_cast<int>(vc.size()) - 1;  // degree of V
  a.assign(N + 1, 0.0);
  a[0] = x;
  if (N >= 1) a[1] = v;
  // pw[p][k]: k-th coefficient of x^p for p = 1..d-1.
  pw.assign(std::max(d, 1), std::vector<cplx>(N + 1, 0.0));
  for (int k = 0; k + 2 <= N; ++k) {
    for (int p = 1; p < d; ++p) {
      if (p == 1) {
        pw[1][k] = a[k];
      } else {
        cplx s = 0.0;
        for (int i = 0; i <= k; ++i) s += pw[p - 1][i] * a[k - i];
        pw[p][k] = s;
      }
    }
    cplx F = (k == 0 && d >= 1) ? cplx(vc[1]) : cplx(0.0);
    for (int p = 1; p < d; ++p) F += double(p + 1) * vc[p + 1] * pw[p][k];
    a[k + 2] = -F / double((k + 1) * (k + 2));
  }
}

State eval_taylor(const std::vector<cplx>& a, double tau) {
  cplx x = 0.0, v = 0.0;
  const int N = static_cast<int>(a.size()) - 1;
  for (int k = N; k >= 0; --k) x = x * tau + a[k];
  for (int k = N; k >= 1; --k) v = v * tau + double(k) * a[k];
  return {x, v};
}

bool finite_state(const State& s) {
  return std::isfinite(s.x.real()) && std::isfinite(s.x.imag()) && std::isfinite(s.v.real()) &&
         std::isfinite(s.v.imag());
}

}  // namespace

Trajectory integrate_trajectory(const TrajectoryParams& params, std::pair<double, double> window,
                                cplx x0, cplx v0, const StepControl& control) {
  const auto [ti, tf] = window;
  if (!std::isfinite(ti) || !std::isfinite(tf) || !(tf > ti))
    throw std::invalid_argument("integrate_trajectory: window must be finite with t_f > t_i");
  if (control.samples < 2) throw std::invalid_argument("integrate_trajectory: need >= 2 samples");
  if (control.order < 4) throw std::invalid_argument("integrate_trajectory: Taylor order must be >= 4");
  const Potential& pot = params.potential;
  const cplx e0 = 0.5 * v0 * v0 + pot.value(x0);
  const double escale = std::max({1.0, std::abs(params.E), std::abs(pot.value(x0))});
  if (std::abs(e0 - params.E) > 1e-10 * escale)
    throw std::invalid_argument("integrate_trajectory: initial data inconsistent with E");

  Trajectory out;
  out.params = params;
  out.window = window;
  out.samples.reserve(control.samples);

  const int N = control.order;
  const double dtSample = (tf - ti) / double(control.samples - 1);
  auto sample_time = [&](int i) { return i + 1 == control.samples ? tf : ti + dtSample * i; };

  std::vector<cplx> a;
  std::vector<std::vector<cplx>> pw;
  double t = ti;
  State s{x0, v0};
  int next = 0;
  out.samples.push_back({ti, x0, v0});
  next = 1;

  while (next < control.samples) {
    if (out.steps >= control.maxSteps) {
      out.runaway = true;
      break;
    }
    taylor_coefficients(pot.coeffs(), s.x, s.v, N, a, pw);
    const double ref = std::max(1.0, std::abs(s.x));
    double h = std::numeric_limits<double>::infinity();
    for (int j = N - 1; j <= N; ++j) {
      const double aj = std::abs(a[j]);
      if (aj > 0.0) h = std::min(h, std::pow(control.tolerance * ref / aj, 1.0 / j));
    }
    h = std::min(h, tf - t);

    State s1{};
    bool ok = false;
    for (;;) {
      s1 = eval_taylor(a, h);
      if (finite_state(s1) && std::abs(s1.x) <= control.runawayThreshold) {
        ok = true;
        break;
      }
      h *= 0.5;
      if (h < control.minStep) break;
    }
    if (!ok) {
      out.runaway = true;
      if (out.samples.back().t < t) out.samples.push_back({t, s.x, s.v});
      break;
    }
    const double t1 = (tf - t - h <= 1e-15 * std::max(1.0, std::abs(tf))) ? tf : t + h;
    while (next < control.samples && sample_time(next) <= t1) {
      const double ts = sample_time(next);
      const State si = (ts == t1) ? s1 : eval_taylor(a, ts - t);
      out.samples.push_back({ts, si.x, si.v});
      ++next;
    }
    t = t1;
    s = s1;
    ++out.steps;
  }
  return out;
}

Trajectory sample_exact(const TrajectoryParams& params, std::pair<double, double> window, int samples) {
  const auto [ti, tf] = window;
  if (!(tf > ti)) throw std::invalid_argument("sample_exact: window must have t_f > t_i");
  if (samples < 2) throw std::invalid_argument("sample_exact: need >= 2 samples");
  const Solution sol(params);
  Trajectory out;
  out.params = params;
  out.window = window;
  out.samples.reserve(samples);
  const double dt = (tf - ti) / double(samples - 1);
  for (int i = 0; i < samples; ++i) {
    const double t = i + 1 == samples ? tf : ti + dt * i;
    const State s = sol.state(t);
    out.samples.push_back({t, s.x, s.v});
  }
  return out;
}

double max_energy_error(const Trajectory& traj) {
  double worst = 0.0;
  for (const auto& s : traj.samples) {
    const cplx e = 0.5 * s.v * s.v + traj.params.potential.value(s.x);
    worst = std::max(worst, std::abs(e - traj.params.E));
  }
  return worst;
}

double max_scaled_energy_error(const Trajectory& traj) {
  double worst = 0.0;
  for (const auto& s : traj.samples) {
    const cplx V = traj.params.potential.value(s.x);
    const cplx e = 0.5 * s.v * s.v + V;
    const double scale = std::max({1.0, std::abs(traj.params.E), std::abs(V)});
    worst = std::max(worst, std::abs(e - traj.params.E) / scale);
  }
  return worst;
}

std::string trajectory_csv(const Trajectory& traj) {
  std::string out = "t,re_x,im_x,re_v,im_v,re_E,im_E\n";
  for (const auto& s : traj.samples) {
    const cplx e = 0.5 * s.v * s.v + traj.params.potential.value(s.x);
    for (double v : {s.t, s.x.real(), s.x.imag(), s.v.real(), s.v.imag(), e.real(), e.imag()}) {
      out += io::format_real(v);
      out += ',';
    }
    out.back() = '\n';
  }
  return out;
}

std::string trajectory_json(const Trajectory& traj) {
  io::Json arr = io::Json::array();
  for (const auto& s : traj.samples) {
    const cplx e = 0.5 * s.v * s.v + traj.params.potential.value(s.x);
    arr.push_back(io::Json{{"t", s.t}, {"x", io::complex_pair(s.x.real(), s.x.imag())},
                           {"v", io::complex_pair(s.v.real(), s.v.imag())},
                           {"E", io::complex_pair(e.real(), e.imag())}});
  }
  return io::dump(arr);
}

// ---------------------------------------------------------------------------

Expansion early_time_expansion(PotentialKind kind, cplx m, cplx Z) {
  const cplx I(0.0, 1.0);
  const double az = std::abs(Z);
  switch (kind) {
    case PotentialKind::Quartic: {
      const cplx Zi = 1.0 / Z;
      const cplx val = 2.0 * I * Zi + 2.0 * I * Zi * Zi * Zi + m / (8.0 * I) * Z;
      // Omitted terms are O(Z^-5) and O(m Z^-1) relative to the leading 1/Z.
      const bool ok = std::abs(m) < 0.1 && az >= 2.0 && std::abs(m) * az * az <= 16.0;
      return {val, ok};
    }
    case PotentialKind::Cubic: {
      const cplx Z2 = Z * Z;
      const cplx val = -6.0 * (1.0 + m) / Z2 - 12.0 / (Z2 * Z2) - 3.0 / 128.0 * m * m * Z2 +
                       63.0 / 64.0 * m * m;
      const bool ok = std::abs(m) < 0.1 && az >= 2.0 && std::abs(m) * az * az <= 16.0;
      return {val, ok};
    }
    default: throw std::invalid_argument("early_time_expansion: closed-form potentials only");
  }
}

cplx early_time_Z(const TrajectoryParams& params, cplx t) {
  const Solution sol(params);
  const cplx U = kPi * sol.u_of_t(t) / (2.0 * sol.context().K);
  return std::exp(cplx(0.0, 1.0) * U);
}

PoleZeroLattice pole_zero_lattice(const TrajectoryParams& params, const Rectangle& rect) {
  if (!(rect.reMax >= rect.reMin) || !(rect.imMax >= rect.imMin) || !std::isfinite(rect.reMin) ||
      !std::isfinite(rect.reMax) || !std::isfinite(rect.imMin) || !std::isfinite(rect.imMax))
    throw std::invalid_argument("pole_zero_lattice: rectangle must be finite and ordered");
  const Solution sol(params);
  PoleZeroLattice out;
  out.sideA = sol.side_a();
  out.sideB = sol.side_b();
  out.poleOrder = sol.pole_order();
  const cplx a = out.sideA, b = out.sideB;
  const double det = a.real() * b.imag() - a.imag() * b.real();
  if (!std::isfinite(det) || std::abs(det) < 1e-12 * std::abs(a) * std::abs(b))
    throw DomainError("pole_zero_lattice: degenerate lattice");

  // Integer ranges from the lattice coordinates of the corners.
  double jmin = 1e300, jmax = -1e300, kmin = 1e300, kmax = -1e300;
  for (double re : {rect.reMin, rect.reMax})
    for (double im : {rect.imMin, rect.imMax}) {
      const cplx d = cplx(re, im) - params.t0;
      const double al = (d.real() * b.imag() - d.imag() * b.real()) / det;
      const double be = (a.real() * d.imag() - a.imag() * d.real()) / det;
      jmin = std::min(jmin, al), jmax = std::max(jmax, al);
      kmin = std::min(kmin, be), kmax = std::max(kmax, be);
    }
  const double span = (jmax - jmin + 3.0) * (kmax - kmin + 3.0);
  if (span > 4e6) throw std::invalid_argument("pole_zero_lattice: rectangle too large for lattice");
  for (long k = std::lround(std::floor(kmin)) - 1; k <= std::lround(std::ceil(kmax)) + 1; ++k)
    for (long j = std::lround(std::floor(jmin)) - 1; j <= std::lround(std::ceil(jmax)) + 1; ++j) {
      const cplx t = params.t0 + double(j) * a + double(k) * b;
      if (!rect.contains(t)) continue;
      const LatticePoint p{t, int(j), int(k)};
      if (k % 2 == 0) out.poles.push_back(p);
      else out.zeros.push_back(p);
    }
  return out;
}

}  // namespace ctraj
