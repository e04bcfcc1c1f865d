#include "ctraj/oracle.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "ctraj/io.hpp"

namespace ctraj::oracle {

namespace {

constexpr cplx kI(0.0, 1.0);

bool power_of_two(int n) { return n >= 2 && (n & (n - 1)) == 0; }

int next_power_of_two(double v) {
  int n = 2;
  while (n < v) n *= 2;
  return n;
}

double V(const Potential& p, double x) { return p.value(cplx(x)).real(); }

/// Energy scale at which the grid must resolve the wave: the barrier top for
/// the model potentials, the grid maximum otherwise.
double reference_energy(const Potential& p, const GridSpec& g) {
  if (p.has_closed_form()) return V(p, p.barrier_top());
  constexpr int kProbe = 4096;
  double e = -std::numeric_limits<double>::infinity();
  for (int i = 0; i <= kProbe; ++i) e = std::max(e, V(p, g.xMin + (g.xMax - g.xMin) * i / kProbe));
  return e;
}

double p_max(const Potential& p, const GridSpec& g) {
  double vmin = std::numeric_limits<double>::infinity();
  constexpr int kProbe = 4096;
  for (int i = 0; i <= kProbe; ++i) vmin = std::min(vmin, V(p, g.xMin + (g.xMax - g.xMin) * i / kProbe));
  return std::sqrt(2.0 * std::max(reference_energy(p, g) - vmin, 0.0));
}

/// Ramp s^2 over the outer fraction of each absorbing side, s in [0, 1].
double ramp(const Absorber& a, const GridSpec& g, double x) {
  if (!a.enabled) return 0.0;
  const double w = a.fraction * (g.xMax - g.xMin);
  double s = 0.0;
  if (a.right && x > g.xMax - w) s = std::max(s, (x - (g.xMax - w)) / w);
  if (a.left && x < g.xMin + w) s = std::max(s, ((g.xMin + w) - x) / w);
  return s * s;
}

struct Fft {
  explicit Fft(int n) : n(n) {
    buf = fftw_alloc_complex(n);
    fwd = fftw_plan_dft_1d(n, buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
    bwd = fftw_plan_dft_1d(n, buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  ~Fft() {
    fftw_destroy_plan(fwd);
    fftw_destroy_plan(bwd);
    fftw_free(buf);
  }
  Fft(const Fft&) = delete;
  Fft& operator=(const Fft&) = delete;

  cplx* data() { return reinterpret_cast<cplx*>(buf); }
  void forward() { fftw_execute(fwd); }
  void backward() { fftw_execute(bwd); }

  int n;
  fftw_complex* buf;
  fftw_plan fwd, bwd;
};

std::vector<double> wavenumbers(const GridSpec& g) {
  std::vector<double> k(g.n);
  const double len = g.xMax - g.xMin;
  for (int j = 0; j < g.n; ++j) {
    const int f = j < g.n / 2 ? j : j - g.n;
    k[j] = 2.0 * specfun::kPi * f / len;
  }
  return k;
}

class Propagator {
public:
  Propagator(const Potential& p, const GridSpec& g, double hbar, double strength)
      : g_(g), hbar_(hbar), fft_(g.n), k_(wavenumbers(g)), halfV_(g.n), kin_(g.n), v_(g.n) {
    for (int i = 0; i < g.n; ++i) {
      const double x = g.x(i);
      v_[i] = V(p, x);
      const double w = strength * ramp(g.absorber, g, x);
      halfV_[i] = std::exp(-kI * v_[i] * g.dt / (2.0 * hbar)) * std::exp(-w * g.dt / (2.0 * hbar));
    }
    for (int j = 0; j < g.n; ++j) kin_[j] = std::exp(-kI * hbar * k_[j] * k_[j] * g.dt / 2.0) / double(g.n);
  }

  void step(std::vector<cplx>& psi) {
    cplx* b = fft_.data();
    for (int i = 0; i < g_.n; ++i) b[i] = psi[i] * halfV_[i];
    fft_.forward();
    for (int j = 0; j < g_.n; ++j) b[j] *= kin_[j];
    fft_.backward();
    for (int i = 0; i < g_.n; ++i) psi[i] = b[i] * halfV_[i];
  }

  /// <H> restricted to the mask, per unit restricted norm.
  double energy(const std::vector<cplx>& psi, const std::vector<char>& mask) {
    cplx* b = fft_.data();
    std::copy(psi.begin(), psi.end(), b);
    fft_.forward();
    for (int j = 0; j < g_.n; ++j) b[j] *= 0.5 * hbar_ * hbar_ * k_[j] * k_[j] / double(g_.n);
    fft_.backward();
    double num = 0.0, den = 0.0;
    for (int i = 0; i < g_.n; ++i) {
      if (!mask[i]) continue;
      num += (std::conj(psi[i]) * (b[i] + v_[i] * psi[i])).real();
      den += std::norm(psi[i]);
    }
    return num / den;
  }

  /// Fraction of |psi~(k)|^2 above 3/4 of the Nyquist wavenumber.
  double spectral_tail(const std::vector<cplx>& psi) {
    cplx* b = fft_.data();
    std::copy(psi.begin(), psi.end(), b);
    fft_.forward();
    const double kc = 0.75 * specfun::kPi / g_.dx();
    double hi = 0.0, all = 0.0;
    for (int j = 0; j < g_.n; ++j) {
      const double w = std::norm(b[j]);
      all += w;
      if (std::abs(k_[j]) > kc) hi += w;
    }
    return all > 0.0 ? hi / all : 0.0;
  }

private:
  GridSpec g_;
  double hbar_;
  Fft fft_;
  std::vector<double> k_;
  std::vector<cplx> halfV_, kin_;
  std::vector<double> v_;
};

double masked_norm(const std::vector<cplx>& psi, const std::vector<char>& mask, double dx) {
  double s = 0.0;
  for (std::size_t i = 0; i < psi.size(); ++i)
    if (mask[i]) s += std::norm(psi[i]);
  return s * dx;
}

/// Reflection plus transmission of an outgoing stationary wave through the
/// ramp on one side; sign = +1 right side, -1 left side.
double side_leakage(const Potential& p, const GridSpec& g, double hbar, double E, double strength,
                    int sign) {
  const double w = g.absorber.fraction * (g.xMax - g.xMin);
  const double xa = sign > 0 ? g.xMax - w : g.xMin + w;
  const double xe = sign > 0 ? g.xMax : g.xMin;
  auto kk2 = [&](double x) {
    const double s = std::abs(x - xa) / w;
    return 2.0 * (E - V(p, x) + kI * strength * s * s) / (hbar * hbar);
  };
  // Outgoing in the direction of sign: decays as it moves outward.
  auto kdir = [&](double x) { return std::sqrt(kk2(x)); };
  const cplx ke = kdir(xe);
  // y = (psi, dpsi/dx) integrated inward from xe by RK4.
  cplx psi = 1.0, dpsi = kI * double(sign) * ke;
  const double kmax = std::sqrt(std::abs(kk2(xe)));
  const int steps = std::max(2000, int(std::ceil(20.0 * kmax * w)));
  const double h = (xa - xe) / steps;
  double x = xe;
  double logScale = 0.0;
  for (int s = 0; s < steps; ++s) {
    auto f = [&](double xx, cplx a, cplx b) { return std::pair<cplx, cplx>{b, -kk2(xx) * a}; };
    const auto [a1, b1] = f(x, psi, dpsi);
    const auto [a2, b2] = f(x + h / 2, psi + h / 2 * a1, dpsi + h / 2 * b1);
    const auto [a3, b3] = f(x + h / 2, psi + h / 2 * a2, dpsi + h / 2 * b2);
    const auto [a4, b4] = f(x + h, psi + h * a3, dpsi + h * b3);
    psi += h / 6 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
    dpsi += h / 6 * (b1 + 2.0 * b2 + 2.0 * b3 + b4);
    x += h;
    // The inward solution grows; keep it finite and track the scale.
    const double mag = std::abs(psi) + std::abs(dpsi) / kmax;
    if (mag > 1e100) psi /= mag, dpsi /= mag, logScale += std::log(mag);
  }
  const double k0 = std::sqrt(std::max(kk2(xa).real(), 1e-300));
  // WKB waves k^{-1/2} e^{+-i int k}: u'/u = +-i sign k0 - q at xa.
  const double dV = p.derivative(cplx(xa)).real();
  const double q = -dV / (hbar * hbar * k0) / (2.0 * k0);
  const cplx ip = kI * double(sign) * k0;
  const cplx A = (dpsi - (-ip - q) * psi) / (2.0 * ip);
  const cplx B = psi - A;
  const double R = std::norm(B) / std::norm(A);
  const double T = ke.real() / k0 * std::exp(-2.0 * (std::log(std::abs(A)) + logScale));
  return R + T;
}


}  // namespace

double GridState::norm() const {
  double s = 0.0;
  for (const cplx& c : psi) s += std::norm(c);
  return s * dx;
}

GridSpec default_grid(const Potential& potential, double hbarEff) {
  if (!(hbarEff > 0.0)) throw std::invalid_argument("default_grid: hbarEff must be positive");
  GridSpec g;
  switch (potential.kind()) {
    case PotentialKind::Quartic:
      g.xMin = -3.0, g.xMax = 3.0;
      g.absorber.left = g.absorber.right = true;
      break;
    case PotentialKind::Cubic:
      g.xMin = -2.0, g.xMax = 4.0;
      g.absorber.left = false, g.absorber.right = true;
      break;
    default:
      g.xMin = -5.0, g.xMax = 5.0;
      g.absorber.enabled = false;
      break;
  }
  const double need = (g.xMax - g.xMin) * 4.0 * p_max(potential, g) / hbarEff;
  g.n = std::max(1024, next_power_of_two(1.25 * need));
  return g;
}

bool in_well(const Potential& potential, const GridSpec& grid, double x) {
  switch (potential.kind()) {
    case PotentialKind::Quartic: return std::abs(x) < potential.barrier_top();
    case PotentialKind::Cubic: return x < potential.barrier_top();
    default: return ramp(grid.absorber, grid, x) == 0.0;
  }
}

void check_resolution(const Potential& potential, const GridSpec& grid, double hbarEff) {
  if (!power_of_two(grid.n)) throw std::invalid_argument("grid n must be a power of two");
  if (!(grid.xMax > grid.xMin)) throw std::invalid_argument("grid xMax must exceed xMin");
  if (!(grid.dt > 0.0)) throw std::invalid_argument("grid dt must be positive");
  if (!(hbarEff > 0.0)) throw std::invalid_argument("hbarEff must be positive");
  const double pm = p_max(potential, grid);
  const double limit = hbarEff / (4.0 * pm);
  if (grid.dx() > limit) {
    const int suggest = next_power_of_two((grid.xMax - grid.xMin) / limit);
    std::ostringstream os;
    os << "grid under-resolved: dx = " << grid.dx() << " > hbarEff/(4 pMax) = " << limit
       << "; use n >= " << suggest;
    throw ResolutionError(os.str());
  }
}

AbsorberTuning tune_absorber(const Potential& potential, const GridSpec& grid, double hbarEff, double E) {
  AbsorberTuning best{0.0, std::numeric_limits<double>::infinity()};
  if (!grid.absorber.enabled || !(grid.absorber.left || grid.absorber.right)) return {0.0, 0.0};
  for (double eta = 1.0; eta <= 1e4; eta *= 1.25) {
    double leak = 0.0;
    if (grid.absorber.right) leak = std::max(leak, side_leakage(potential, grid, hbarEff, E, eta, +1));
    if (grid.absorber.left) leak = std::max(leak, side_leakage(potential, grid, hbarEff, E, eta, -1));
    if (leak < best.leakage) best = {eta, leak};
    if (leak < 1e-6) return {eta, leak};
  }
  return best;
}

GridState gaussian_state(const GridSpec& grid, double hbarEff, double L, double center, double p0) {
  if (!(L > 0.0)) throw std::invalid_argument("gaussian width L must be positive");
  GridState s;
  s.xMin = grid.xMin, s.xMax = grid.xMax, s.n = grid.n, s.dx = grid.dx();
  s.hbarEff = hbarEff;
  s.absorber = grid.absorber;
  s.psi.resize(grid.n);
  for (int i = 0; i < grid.n; ++i) {
    const double x = grid.x(i) - center;
    s.psi[i] = std::exp(-x * x / (4.0 * L * L) + kI * p0 * grid.x(i) / hbarEff);
  }
  const double nrm = std::sqrt(s.norm());
  for (cplx& c : s.psi) c /= nrm;
  return s;
}

EvolveResult evolve(const Potential& potential, double hbarEff, double L, double center,
                    const GridSpec& grid, const EvolveOptions& opt) {
  check_resolution(potential, grid, hbarEff);
  if (!(opt.T > 0.0) || !std::isfinite(opt.T)) throw std::invalid_argument("evolve: T must be finite and positive");
  if (!(opt.sampleInterval > 0.0)) throw std::invalid_argument("evolve: sampleInterval must be positive");

  GridSpec g = grid;
  if (g.absorber.enabled && g.absorber.strength == 0.0)
    g.absorber.strength = tune_absorber(potential, g, hbarEff, 0.5 * hbarEff).strength;

  EvolveResult out;
  out.state = gaussian_state(g, hbarEff, L, center);
  auto& psi = out.state.psi;
  Propagator prop(potential, g, hbarEff, g.absorber.strength);
  std::vector<char> well(g.n);
  for (int i = 0; i < g.n; ++i) well[i] = in_well(potential, g, g.x(i));

  if (opt.filterTime > 0.0) {
    const double e0 = prop.energy(psi, well);
    const int nf = int(std::lround(opt.filterTime / g.dt));
    const double mid = 0.5 * nf * g.dt, sigma = opt.filterTime / 8.0;
    std::vector<cplx> acc(g.n, 0.0);
    for (int s = 0; s <= nf; ++s) {
      const double t = s * g.dt;
      const cplx w = std::exp(-(t - mid) * (t - mid) / (2.0 * sigma * sigma) + kI * e0 * t / hbarEff);
      for (int i = 0; i < g.n; ++i) acc[i] += w * psi[i];
      if (s < nf) prop.step(psi);
    }
    psi = std::move(acc);
    const double nrm = std::sqrt(out.state.norm());
    for (cplx& c : psi) c /= nrm;
  }

  const std::vector<char> all(g.n, 1);
  out.energyStart = prop.energy(psi, all);
  const int every = std::max(1, int(std::lround(opt.sampleInterval / g.dt)));
  const int total = int(std::lround(opt.T / g.dt));
  auto record = [&](int s) {
    double sx = 0.0;
    for (int i = 0; i < g.n; ++i) sx += g.x(i) * std::norm(psi[i]);
    const double nrm = out.state.norm();
    out.record.times.push_back(s * g.dt);
    out.record.survival.push_back(masked_norm(psi, well, g.dx()));
    out.record.norm.push_back(nrm);
    out.record.meanX.push_back(sx * g.dx() / nrm);
  };
  record(0);
  int s = 0;
  while (s < total) {
    prop.step(psi);
    ++s;
    if (s % every == 0 || s == total) {
      record(s);
      if (opt.stopSurvival > 0.0 && out.record.survival.back() <= opt.stopSurvival) break;
    }
  }
  out.steps = s;
  out.energyEnd = prop.energy(psi, all);
  out.spectralTail = prop.spectral_tail(psi);
  // <H> is conserved only without absorption; with it the spectral weight
  // near the Nyquist edge stands in as the resolution diagnostic.
  if (!g.absorber.enabled) {
    out.energyDrift = std::abs(out.energyEnd - out.energyStart) / std::max(std::abs(out.energyStart), hbarEff);
    if (out.energyDrift > opt.energyDriftTolerance) {
      std::ostringstream os;
      os << "energy expectation drifted by " << out.energyDrift << " (> " << opt.energyDriftTolerance
         << "); refine the grid, e.g. n = " << 2 * g.n;
      throw ResolutionError(os.str());
    }
  } else if (out.spectralTail > opt.energyDriftTolerance) {
    std::ostringstream os;
    os << "spectral weight " << out.spectralTail << " near the Nyquist edge (> " << opt.energyDriftTolerance
       << "); refine the grid, e.g. n = " << 2 * g.n;
    throw ResolutionError(os.str());
  }
  out.state.absorber = g.absorber;
  if (opt.fit) fit_rate(out.record, opt.transientHold, opt.fitStartSurvival);
  return out;
}

LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n) throw std::invalid_argument("linear_fit: need >= 2 paired points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) mx += x[i], my += y[i];
  mx /= n, my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("linear_fit: degenerate abscissae");
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.rSquared = syy == 0.0 ? 1.0 : sxy * sxy / (sxx * syy);
  return f;
}

void fit_rate(EscapeRecord& r, double hold, double startSurvival) {
  const auto& t = r.times;
  const auto& p = r.survival;
  std::size_t a = t.size(), b = t.size();
  for (std::size_t i = 0; i < t.size(); ++i)
    if (p[i] < startSurvival && t[i] >= hold) { a = i; break; }
  if (a == t.size())
    for (std::size_t i = 0; i < t.size(); ++i)
      if (t[i] >= hold) { a = i; break; }
  for (std::size_t i = a; i < t.size(); ++i)
    if (p[i] <= 0.5) { b = i + 1; break; }
  if (a >= t.size() || b - a < 10)
    throw FitQualityError("fit window holds fewer than 10 samples; lengthen T");
  std::vector<double> xs(t.begin() + a, t.begin() + b), ys;
  for (std::size_t i = a; i < b; ++i) {
    if (!(p[i] > 0.0)) throw FitQualityError("survival reached zero inside the fit window");
    ys.push_back(std::log(p[i]));
  }
  const LinearFit f = linear_fit(xs, ys);
  r.fittedRate = -f.slope;
  r.fitStart = xs.front();
  r.fitEnd = xs.back();
  r.rSquared = f.rSquared;
  if (!(r.fittedRate > 0.0)) throw FitQualityError("survival does not decay in the fit window");
  if (f.rSquared < 0.99) {
    std::ostringstream os;
    os << "survival is not exponential in the fit window (R^2 = " << f.rSquared << ")";
    throw FitQualityError(os.str());
  }
}

SweepResult exponent_sweep(const Potential& potential, const std::vector<double>& list,
                           const SweepOptions& opt) {
  if (list.size() < 4) throw std::invalid_argument("exponent_sweep: need >= 4 hbarEff values");
  for (double h : list)
    if (!(h > 0.0)) throw std::invalid_argument("exponent_sweep: hbarEff values must be positive");
  if (!potential.has_closed_form()) throw std::invalid_argument("exponent_sweep: closed-form potentials only");
  SweepResult out;
  out.kind = potential.kind();
  out.hbarEffList = list;
  out.target = -potential.euclidean_action();
  std::vector<double> inv, lnr;
  for (double h : list) {
    GridSpec g = default_grid(potential, h);
    if (opt.n > 0) g.n = opt.n;
    EvolveOptions eo;
    eo.T = opt.T;
    eo.filterTime = opt.filterTime;
    eo.transientHold = opt.transientHold;
    eo.stopSurvival = 0.4;
    eo.fitStartSurvival = 1.0;
    EvolveResult r = evolve(potential, h, std::sqrt(h / 2.0), 0.0, g, eo);
    out.rates.push_back(r.record.fittedRate);
    inv.push_back(1.0 / h);
    lnr.push_back(std::log(r.record.fittedRate));
    out.records.push_back(std::move(r.record));
  }
  out.slope = linear_fit(inv, lnr).slope;
  out.relError = std::abs(out.slope - out.target) / std::abs(out.target);
  for (auto& rec : out.records) rec.fittedExponent = out.slope;
  return out;
}

double grid_halving_deviation(const Potential& potential, double hbarEff, const GridSpec& grid,
                              const EvolveOptions& options) {
  EvolveOptions o = options;
  o.fit = false;
  o.stopSurvival = 0.0;
  GridSpec fine = grid;
  fine.n = 2 * grid.n;
  GridSpec coarse = grid;
  // Same absorber on both grids.
  if (coarse.absorber.enabled && coarse.absorber.strength == 0.0)
    coarse.absorber.strength = fine.absorber.strength =
        tune_absorber(potential, coarse, hbarEff, 0.5 * hbarEff).strength;
  const double L = std::sqrt(hbarEff / 2.0);
  const auto a = evolve(potential, hbarEff, L, 0.0, coarse, o).record;
  const auto b = evolve(potential, hbarEff, L, 0.0, fine, o).record;
  double dev = 0.0;
  for (std::size_t i = 0; i < std::min(a.survival.size(), b.survival.size()); ++i)
    dev = std::max(dev, std::abs(a.survival[i] - b.survival[i]));
  return dev;
}

std::string survival_csv(const EscapeRecord& r) {
  std::string out = "t,P_survive,norm\n";
  for (std::size_t i = 0; i < r.times.size(); ++i)
    out += io::format_real(r.times[i]) + "," + io::format_real(r.survival[i]) + "," +
           io::format_real(r.norm[i]) + "\n";
  return out;
}

std::string sweep_json(const SweepResult& s) {
  io::Json j;
  j["potential"] = to_string(s.kind);
  j["hbarEffList"] = s.hbarEffList;
  j["rates"] = s.rates;
  j["slope"] = s.slope;
  j["target"] = s.target;
  j["relError"] = s.relError;
  io::Json fits = io::Json::array();
  for (std::size_t i = 0; i < s.records.size(); ++i) {
    const auto& r = s.records[i];
    fits.push_back({{"hbarEff", s.hbarEffList[i]},
                    {"fitStart", r.fitStart},
                    {"fitEnd", r.fitEnd},
                    {"rSquared", r.rSquared}});
  }
  j["fits"] = fits;
  return io::dump(j);
}

}  // namespace ctraj::oracle
