#include "commands.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <ostream>

#include "ctraj/io.hpp"
#include "ctraj/oracle.hpp"
#include "suite.hpp"

namespace ctraj::cli {

namespace {

using io::format_real;

std::string cx(cplx z) { return format_real(z.real()) + (z.imag() < 0 ? " - " : " + ") + format_real(std::abs(z.imag())) + "i"; }

std::string pot_name(const RunConfig& c) { return to_string(c.potential); }

template <class F>
int guarded(std::ostream& out, F&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    out << "config error " << e.what() << "\n";
    return kConfigError;
  } catch (const oracle::ResolutionError& e) {
    out << "resolution error: " << e.what() << "\n";
    return kNotConverged;
  } catch (const std::invalid_argument& e) {
    out << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    out << "error: " << e.what() << "\n";
    return kNotConverged;
  }
}

void write(const RunConfig& c, const std::string& name, const std::string& text, std::ostream& out) {
  const std::string path = output_path(c, name);
  io::write_file(path, text);
  out << "wrote " << path << "\n";
}

std::pair<SolveReport, Trajectory> solve(const RunConfig& c) {
  return solve_tunneling(c.make_potential(), c.boundary, c.branch);
}

void print_report(const SolveReport& r, std::ostream& out) {
  out << "potential " << to_string(r.params.potential.kind()) << ", branch " << r.branch << ": "
      << (r.converged ? "converged" : "NOT converged") << " after " << r.iterations << " iterations\n";
  out << "  m   = " << cx(r.params.m) << "\n";
  out << "  E   = " << cx(r.params.E) << "\n";
  out << "  eps = " << cx(r.epsilon) << "\n";
  out << "  residual init " << format_real(std::abs(r.residual.init)) << ", final "
      << format_real(std::abs(r.residual.final)) << "\n";
  if (r.rangeWarning) out << "  warning: T below the asymptotic window of the seed\n";
  if (r.conditioningWarning) out << "  warning: Lambert argument near the branch point\n";
  if (r.finalFallback) out << "  note: |x_f| < 10, full final-condition solve\n";
}

void check_pointer_grid(const RunConfig& c) {
  if (c.tmCount < 1) throw ConfigError("pointer.t_m_count", "t_m_count must be at least 1");
  if (c.tmMin && c.tmMax && !(*c.tmMax >= *c.tmMin))
    throw ConfigError("pointer.t_m_max", "t_m_max must not be below t_m_min");
}

void check_oracle(const RunConfig& c) {
  if (c.hbarEff.empty()) throw ConfigError("oracle.hbar_eff", "hbar_eff list is empty");
  if (c.hbarEff.size() < 4) throw ConfigError("oracle.hbar_eff", "hbar_eff list needs at least 4 values");
  for (double h : c.hbarEff)
    if (!(h > 0.0) || !std::isfinite(h)) throw ConfigError("oracle.hbar_eff", "hbar_eff values must be positive");
  if (!(c.oracleT > 0.0) || !std::isfinite(c.oracleT)) throw ConfigError("oracle.T", "T must be positive");
  if (c.oracleN != 0 && (c.oracleN < 2 || (c.oracleN & (c.oracleN - 1)) != 0))
    throw ConfigError("oracle.n", "n must be 0 (automatic) or a power of two");
  if (!(c.oracleFilterTime >= 0.0)) throw ConfigError("oracle.filter_time", "filter_time must be >= 0");
  const Potential p = c.make_potential();
  for (double h : c.hbarEff) {
    oracle::GridSpec g = oracle::default_grid(p, h);
    if (c.oracleN > 0) g.n = c.oracleN;
    try {
      oracle::check_resolution(p, g, h);
    } catch (const oracle::ResolutionError& e) {
      throw ConfigError("oracle.n", e.what());
    }
  }
}

std::string hbar_tag(double h) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", h);
  return buf;
}

}  // namespace

std::string output_path(const RunConfig& config, const std::string& name) {
  return (std::filesystem::path(config.outDir) / name).string();
}

std::string figure_polyline_csv(const Trajectory& traj) {
  std::string s = "t,re_x,im_x\n";
  for (const auto& p : traj.samples)
    s += format_real(p.t) + "," + format_real(p.x.real()) + "," + format_real(p.x.imag()) + "\n";
  return s;
}

namespace {

TrajectoryParams fig2_params(const RunConfig& c) {
  return TrajectoryParams::from_m(c.make_potential(), c.fig2M, c.fig2T0);
}

}  // namespace

std::string fig2_lattice_csv(const RunConfig& c) {
  const TrajectoryParams prm = fig2_params(c);
  const Solution sol(prm);
  const cplx a = sol.side_a(), b = sol.side_b();
  // Pole line through t0 and the zero line one side b above it.
  Rectangle r{c.boundary.t_i - std::abs(a), c.fig2T0.real() + std::abs(a),
              c.fig2T0.imag() - 0.5 * std::abs(b), c.fig2T0.imag() + 1.5 * std::abs(b)};
  const PoleZeroLattice lat = pole_zero_lattice(prm, r);
  std::string s = "role,j,k,re_t,im_t\n";
  auto row = [&](const char* role, const LatticePoint& p) {
    s += std::string(role) + "," + std::to_string(p.j) + "," + std::to_string(p.k) + "," + format_real(p.t.real()) +
         "," + format_real(p.t.imag()) + "\n";
  };
  for (const auto& p : lat.poles) row("pole", p);
  for (const auto& p : lat.zeros) row("zero", p);
  return s;
}

std::string fig2_contour_csv(const RunConfig& c) {
  const TrajectoryParams prm = fig2_params(c);
  const auto contour = fig2_contour(prm, c.boundary.t_i, prm.t0);
  std::string s = "vertex,re_t,im_t\n";
  for (std::size_t i = 0; i < contour.size(); ++i)
    s += std::to_string(i) + "," + format_real(contour[i].real()) + "," + format_real(contour[i].imag()) + "\n";
  return s;
}

std::string scan_csv(const RunConfig& c, int* failures) {
  if (failures) *failures = 0;
  std::string s =
      "T,converged,iterations,re_epsilon,im_epsilon,re_E,im_E,prob_exponent,re_peak_x,im_peak_x,peak_scaled,"
      "lead_time,error\n";
  const Potential p = c.make_potential();
  const std::string nan = format_real(std::nan(""));
  for (double T : c.scanT) {
    BoundaryData b = c.boundary;
    b.t_i = b.t_f - T;
    std::string row = format_real(T);
    try {
      auto [rep, traj] = solve_tunneling(p, b, c.branch);
      if (!rep.converged) throw std::runtime_error("Newton refinement did not converge");
      const ActionExponent a = action_exponent_real_time(traj, b.L);
      const ImagExcursion ex = imag_excursion(traj);
      const double ae = std::abs(ex.epsilon);
      const double scaled = std::abs(ex.peakIm.imag()) * (c.potential == PotentialKind::Cubic ? ae * ae : ae);
      row += ",1," + std::to_string(rep.iterations) + "," + format_real(rep.epsilon.real()) + "," +
             format_real(rep.epsilon.imag()) + "," + format_real(rep.params.E.real()) + "," +
             format_real(rep.params.E.imag()) + "," + format_real(a.probExponent) + "," +
             format_real(ex.peakIm.real()) + "," + format_real(ex.peakIm.imag()) + "," + format_real(scaled) + "," +
             format_real(ex.leadTime) + ",";
    } catch (const std::exception& e) {
      std::string msg = e.what();
      for (char& ch : msg)
        if (ch == ',' || ch == '\n') ch = ';';
      if (failures) ++*failures;
      row += ",0,0";
      for (int i = 0; i < 9; ++i) row += "," + nan;
      row += "," + msg;
    }
    s += row + "\n";
  }
  return s;
}

std::string pointer_csv(const Trajectory& traj, const RunConfig& c) {
  const double lo = c.tmMin.value_or(traj.samples.front().t);
  const double hi = c.tmMax.value_or(traj.samples.back().t);
  std::string s = "t_m,dX,dP,re_x,im_x\n";
  for (int i = 0; i < c.tmCount; ++i) {
    PointerConfig pc = c.pointer;
    // Endpoints exactly, so roundoff never leaves the window.
    pc.t_m = i == 0 ? lo : i == c.tmCount - 1 ? hi : lo + (hi - lo) * i / (c.tmCount - 1);
    const PointerBias pb = pointer_bias(traj, pc);
    const cplx x = pc.g > 0 ? cplx(pb.dX / pc.g, pb.dP * 2.0 * pc.deltaX * pc.deltaX / (pc.g * pc.hbarEff)) : 0.0;
    s += format_real(pc.t_m) + "," + format_real(pb.dX) + "," + format_real(pb.dP) + "," + format_real(x.real()) +
         "," + format_real(x.imag()) + "\n";
  }
  return s;
}

int cmd_solve(const RunConfig& c, std::ostream& out) {
  return guarded(out, [&] {
    validate_common(c);
    auto [rep, traj] = solve(c);
    print_report(rep, out);
    const std::string pot = pot_name(c);
    write(c, "solve_" + pot + ".json", solve_report_json(rep, c.boundary), out);
    if (c.wants("csv")) write(c, "trajectory_" + pot + ".csv", trajectory_csv(traj), out);
    if (c.wants("json")) write(c, "trajectory_" + pot + ".json", trajectory_json(traj), out);
    if (c.wants("plot-data")) write(c, "plot_" + pot + ".csv", figure_polyline_csv(traj), out);
    return rep.converged ? kOk : kNotConverged;
  });
}

int cmd_figure(const RunConfig& config, const std::string& which, std::ostream& out) {
  return guarded(out, [&] {
    if (which != "fig1" && which != "fig2" && which != "fig3")
      throw ConfigError("", "unknown figure '" + which + "' (fig1, fig2, fig3)");
    RunConfig c = config;
    if (which == "fig1") c.potential = PotentialKind::Quartic;
    if (which == "fig3") c.potential = PotentialKind::Cubic;
    validate_common(c);
    if (which == "fig2") {
      if (!(std::abs(c.fig2M) > 0.0)) throw ConfigError("fig2.m", "m must be nonzero");
      write(c, "fig2_lattice.csv", fig2_lattice_csv(c), out);
      write(c, "fig2_contour.csv", fig2_contour_csv(c), out);
      return kOk;
    }
    auto [rep, traj] = solve(c);
    print_report(rep, out);
    if (!rep.converged) return kNotConverged;
    write(c, which + ".csv", figure_polyline_csv(traj), out);
    return kOk;
  });
}

int cmd_scan(const RunConfig& c, std::ostream& out) {
  return guarded(out, [&] {
    validate_common(c);
    if (c.scanT.empty()) throw ConfigError("scan.T", "T list is empty");
    for (double T : c.scanT)
      if (!(T > 0.0) || !std::isfinite(T)) throw ConfigError("scan.T", "T values must be positive");
    int failures = 0;
    const std::string table = scan_csv(c, &failures);
    write(c, "scan_" + pot_name(c) + ".csv", table, out);
    const bool failed = failures > 0;
    if (failed) out << "some rows failed; see the error column\n";
    return failed ? kNotConverged : kOk;
  });
}

int cmd_pointer(const RunConfig& c, std::ostream& out) {
  return guarded(out, [&] {
    validate_common(c);
    check_pointer_grid(c);
    auto [rep, traj] = solve(c);
    print_report(rep, out);
    if (!rep.converged) return kNotConverged;
    const double lo = traj.samples.front().t, hi = traj.samples.back().t;
    if ((c.tmMin && (*c.tmMin < lo || *c.tmMin > hi)) || (c.tmMax && (*c.tmMax < lo || *c.tmMax > hi)))
      throw ConfigError("pointer.t_m_min", "t_m grid leaves the trajectory window [" + format_real(lo) + ", " +
                                               format_real(hi) + "]");
    write(c, "pointer_" + pot_name(c) + ".csv", pointer_csv(traj, c), out);
    PointerConfig peak = c.pointer;
    peak.t_m = imag_excursion(traj).tStar;
    write(c, "pointer_" + pot_name(c) + ".json", pointer_json(peak, pointer_bias(traj, peak)), out);
    return kOk;
  });
}

int cmd_oracle(const RunConfig& c, std::ostream& out) {
  return guarded(out, [&] {
    validate_common(c);
    check_oracle(c);
    const Potential p = c.make_potential();
    oracle::SweepOptions so;
    so.n = c.oracleN;
    so.T = c.oracleT;
    so.filterTime = c.oracleFilterTime;
    const oracle::SweepResult sw = oracle::exponent_sweep(p, c.hbarEff, so);
    const std::string pot = pot_name(c);
    for (std::size_t i = 0; i < sw.records.size(); ++i)
      write(c, "survival_" + pot + "_hbar" + hbar_tag(c.hbarEff[i]) + ".csv", oracle::survival_csv(sw.records[i]), out);
    write(c, "oracle_" + pot + ".json", oracle::sweep_json(sw), out);
    out << "slope " << format_real(sw.slope) << " target " << format_real(sw.target) << " relative error "
        << format_real(sw.relError) << "\n";
    if (c.oracleGridCheck) {
      io::Json j = io::Json::array();
      for (double h : c.hbarEff) {
        oracle::GridSpec g = oracle::default_grid(p, h);
        if (c.oracleN > 0) g.n = c.oracleN;
        oracle::EvolveOptions eo;
        eo.T = std::min(c.oracleT, 100.0);
        const double dev = oracle::grid_halving_deviation(p, h, g, eo);
        j.push_back({{"hbarEff", h}, {"n", g.n}, {"deviation", dev}, {"pass", dev <= 1e-4}});
      }
      write(c, "oracle_" + pot + "_grid.json", io::dump(j), out);
    }
    return kOk;
  });
}

int cmd_validate(const RunConfig& c, const std::string& suite, const std::string& fault, std::ostream& out) {
  return guarded(out, [&] {
    if (!suite.empty() && suite != "specfun") throw ConfigError("", "unknown suite '" + suite + "'");
    if (!fault.empty() && fault != "energy-map") throw ConfigError("", "unknown fault '" + fault + "'");
    const SuiteReport rep = suite.empty() ? run_validation(fault) : run_specfun_validation();
    const std::string text = format_report(rep);
    out << text;
    write(c, suite.empty() ? "validate_report.txt" : "validate_specfun.txt", text, out);
    return rep.allPass() ? kOk : kValidateFailed;
  });
}

}  // namespace ctraj::cli
