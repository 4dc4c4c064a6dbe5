#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "config.hpp"
#include "rigidity.hpp"
#include "scattering.hpp"

namespace elasto {

enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitConfig = 2, kExitNumerical = 3 };

// ---- diagnostics.csv ---------------------------------------------------------------------

inline constexpr const char* kDiagnosticsHeader =
    "t,E1,E2,E3,E4,calE1,calE2,calE3,calE4,X2,X3,X4,u_minus_wv,curlfree_v,D_freeness";

struct DiagnosticsRow {
  double t = 0.0;
  OrderArray E = not_computed(), calE = not_computed(), X = not_computed();
  double u_minus_wv = std::numeric_limits<double>::quiet_NaN();
  double curlfree_v = std::numeric_limits<double>::quiet_NaN();
  double D = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

inline void put_value(std::ostream& o, double v) {
  if (std::isnan(v))
    o << "NA";
  else
    o << v;
}

}  // namespace detail

inline std::string format_diagnostics_row(const DiagnosticsRow& r) {
  std::ostringstream o;
  o << std::setprecision(17) << r.t;
  for (int k = 1; k <= 4; ++k) o << ',', detail::put_value(o, r.E[k]);
  for (int k = 1; k <= 4; ++k) o << ',', detail::put_value(o, r.calE[k]);
  for (int k = 2; k <= 4; ++k) o << ',', detail::put_value(o, r.X[k]);
  for (double v : {r.u_minus_wv, r.curlfree_v, r.D}) o << ',', detail::put_value(o, v);
  return o.str();
}

// `kept` holds earlier data lines (used when resuming) written before `rows`.
inline void write_diagnostics_csv(const std::filesystem::path& path, const std::vector<DiagnosticsRow>& rows,
                                  const std::vector<std::string>& kept = {}) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << kDiagnosticsHeader << '\n';
  for (const auto& l : kept) f << l << '\n';
  for (const auto& r : rows) f << format_diagnostics_row(r) << '\n';
}

// Per-snapshot diagnostics and the requested probes.
class SnapshotDiagnostics {
 public:
  SnapshotDiagnostics(const RunConfig& c, const std::filesystem::path& out) : cfg_(c), log_(out) {}

  DiagnosticsRow operator()(const SimState& s) {
    DiagnosticsRow row;
    row.t = s.t;
    const MaterialParams& mp = cfg_.material;
    if (cfg_.energy_order > 0) {
      const EnergyReport rep = diagnose(s, mp, cfg_.energy_order, wants("decay"));
      row.E = rep.E;
      row.calE = rep.calE;
      row.X = rep.X;
      for (const auto& p : rep.probes) log_.append(p);
    }
    if (s.w && s.v) {
      const WaveReductionRow w = reduce_v_to_wave(s, mp);
      row.u_minus_wv = w.split;
      row.curlfree_v = w.curl_free;
      if (wants("good_derivative"))
        for (const auto& p : good_derivative_check(s, mp)) log_.append(p);
    }
    if (wants("null_form")) log_.append(null_form_probe(GammaContext(s.grid()), forward_transform(s.u), s.t));
    if (wants("source_decay")) log_.append(source_decay_probe(s, mp));
    return row;
  }

 private:
  bool wants(const char* name) const { return std::count(cfg_.probes.begin(), cfg_.probes.end(), name) > 0; }

  const RunConfig& cfg_;
  ProbeLog log_;
};

namespace detail {

inline void prepare_output(const RunConfig& c, const std::filesystem::path& out, std::ostream& log) {
  for (const auto& w : validate_config(c)) log << "warning: " << w << '\n';
  std::filesystem::create_directories(out);
  std::ofstream f(out / "config.cfg", std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + (out / "config.cfg").string());
  f << serialize_config(c);
}

inline void require_finite(const SimState& s) {
  for (const auto* f : {&s.u, &s.ut})
    if (!all_finite(*f)) throw NumericalError("non-finite field at t=" + format_double(s.t));
}

}  // namespace detail

// ---- simulate -----------------------------------------------------------------------------

// Steps from t = 0 (or from a resume snapshot) to T_final, writing a state
// snapshot every snapshot_stride steps and one diagnostics row per snapshot.
inline void run_simulate(const RunConfig& c, const std::filesystem::path& out, std::ostream& log,
                         const std::optional<std::filesystem::path>& resume = std::nullopt) {
  detail::prepare_output(c, out, log);
  const auto snaps = out / "snapshots";
  std::filesystem::create_directories(snaps);
  const std::size_t steps = c.steps();

  SimState start;
  std::size_t k0 = 0;
  std::vector<std::string> kept;
  if (resume) {
    try {
      start = read_state_snapshot(*resume, &c.grid);
    } catch (const SnapshotError& e) {
      throw ConfigError(e.what());
    }
    if (c.split && !(start.w && start.v)) throw ConfigError("resume snapshot has no split fields but features.split=on");
    if (c.phi && !start.phi) throw ConfigError("resume snapshot has no potential but features.phi=on");
    k0 = std::size_t(std::llround(start.t / c.dt));
    if (std::abs(double(k0) * c.dt - start.t) > 1e-9 * std::max(1.0, start.t) || k0 > steps)
      throw ConfigError("resume snapshot time " + detail::format_double(start.t) + " is not a step of this run");
    // Keep the rows before the resume point; the run re-emits its first row.
    std::ifstream in(out / "diagnostics.csv");
    std::string line;
    if (in && std::getline(in, line) && line == kDiagnosticsHeader)
      while (std::getline(in, line)) {
        if (line.empty()) continue;
        const double t = std::stod(line.substr(0, line.find(',')));
        if (t < start.t - 1e-12 * std::max(1.0, start.t)) kept.push_back(line);
      }
    log << "resuming at t=" << start.t << " (step " << k0 << ")\n";
  } else {
    start = make_initial_data(c);
  }

  Stepper st(c.grid, c.material, StepperOptions{c.split, c.phi, 0.5});
  st.set_state(start);
  SnapshotDiagnostics diag(c, out);
  std::vector<DiagnosticsRow> rows;
  auto emit = [&](std::size_t k) {
    const SimState s = st.state();
    detail::require_finite(s);
    char name[40];
    std::snprintf(name, sizeof name, "snap_%08zu.snap", k);
    write_state_snapshot(snaps / name, s);
    rows.push_back(diag(s));
  };
  try {
    emit(k0);
    for (std::size_t k = k0 + 1; k <= steps; ++k) {
      st.step(c.dt);
      if (k % c.snapshot_stride == 0 || k == steps) emit(k);
    }
  } catch (...) {
    write_diagnostics_csv(out / "diagnostics.csv", rows, kept);
    throw;
  }
  write_diagnostics_csv(out / "diagnostics.csv", rows, kept);
  log << "simulate: " << rows.size() << " snapshots, T=" << st.time() << '\n';
}

// ---- scatter ------------------------------------------------------------------------------

struct ScatterOutcome {
  ScatteringData data;
  FreenessReport freeness;
  RadiationField early, late;  // λ compared over [t_A/2, t_A] and [t_A, 2 t_A]
  std::vector<WaveReductionRow> reduction;
  std::vector<DiagnosticsRow> rows;
  double gap_ratio = 0.0;  // late.convergence_gap / early.convergence_gap
};

inline RunRecord record_for(const RunConfig& c, const std::filesystem::path& frames, bool split, bool duhamel,
                            SnapshotDiagnostics& diag, std::vector<DiagnosticsRow>& rows) {
  RecordOptions o;
  o.dt = c.dt;
  o.steps = c.steps();
  o.stride = c.snapshot_stride;
  o.stepper = StepperOptions{split, split && c.phi, 0.5};
  o.duhamel = duhamel;
  o.directory = frames;
  o.on_frame = [&](const SimState& s) { rows.push_back(diag(s)); };
  std::filesystem::remove_all(frames);
  return record_run(make_initial_data(c), c.material, o);
}

inline ScatterOutcome run_scatter(const RunConfig& cin, const std::filesystem::path& out, std::ostream& log) {
  RunConfig c = cin;
  c.split = true;
  detail::prepare_output(c, out, log);
  if (c.steps() % 2 != 0) throw ConfigError("scatter: the Duhamel quadrature needs an even number of steps");
  const double tA = c.t_A(), T = c.T_final;
  if (2.0 * tA > T * (1.0 + 1e-12)) throw ConfigError("scatter: 2*scatter.t_A must not exceed time.T_final");

  SnapshotDiagnostics diag(c, out);
  ScatterOutcome res;
  RunRecord rec;
  try {
    rec = record_for(c, out / "frames", true, true, diag, res.rows);
  } catch (...) {
    write_diagnostics_csv(out / "diagnostics.csv", res.rows);
    throw;
  }
  const MaterialParams& mp = c.material;

  res.data = extract_scattering_data_w(rec, mp, c.handoff_fraction);
  {
    std::vector<const RealScalarField*> comps;
    for (int k = 0; k < 3; ++k) comps.push_back(&res.data.w0bar[k]);
    for (int k = 0; k < 3; ++k) comps.push_back(&res.data.w1bar[k]);
    if (res.data.phi_data) {
      comps.push_back(&res.data.phi_data->f);
      comps.push_back(&res.data.phi_data->ft);
    }
    write_snapshot(out / "scattering_data.snap", comps, 0.0, "scattering_data");
  }

  FreenessOptions fo;
  fo.handoff_fraction = c.handoff_fraction;
  fo.fit_lo = c.window_lo();
  fo.fit_hi = c.window_hi();
  res.freeness = asymptotic_freeness_report(rec, mp, res.data, fo);
  for (std::size_t i = 0; i < res.rows.size() && i < res.freeness.rows.size(); ++i) res.rows[i].D = res.freeness.rows[i].D;
  write_freeness_report(out / "freeness.csv", out / "freeness.txt", res.freeness, res.data);

  res.reduction = reduce_v_to_wave(rec, mp);
  {
    std::ofstream f(out / "wave_reduction.csv", std::ios::trunc);
    f << std::setprecision(17) << "t,u_minus_wv,curlfree_v,wave_residual,wave_residual_rel,v_minus_grad_phi\n";
    for (const auto& r : res.reduction) {
      f << r.t << ',' << r.split << ',' << r.curl_free << ',' << r.wave_residual << ',' << r.wave_residual_rel << ',';
      detail::put_value(f, r.potential);
      f << '\n';
    }
  }

  // One σ-range for both comparisons: rays trusted from t_A/2 to 2 t_A and
  // σ >= −c1 (t_A/2)/2 so that t_A/2 is past the onset time of every ray.
  const GridSpec& g = c.grid;
  RadiationOptions ro;
  ro.sigma_lo = std::max(2.0 * g.spacing() - 0.5 * mp.c1 * tA, -0.25 * mp.c1 * tA);
  ro.sigma_hi = 0.5 * g.box_length - 2.0 * g.spacing() - 2.0 * mp.c1 * tA;
  if (*ro.sigma_hi < *ro.sigma_lo)
    throw ConfigError("scatter: no σ is trusted over [t_A/2, 2 t_A]; lower scatter.t_A or enlarge the box");
  res.early = radiation_field_extract(rec, mp, 0.5 * tA, tA, ro);
  res.late = radiation_field_extract(rec, mp, tA, 2.0 * tA, ro);
  res.gap_ratio = res.early.convergence_gap > 0.0 ? res.late.convergence_gap / res.early.convergence_gap : 0.0;
  write_radiation_csv(out / "radiation.csv", out / "radiation_directions.csv", res.late);

  write_diagnostics_csv(out / "diagnostics.csv", res.rows);
  {
    std::ofstream f(out / "scatter_summary.txt", std::ios::trunc);
    f << std::setprecision(6);
    auto max_of = [&](auto field) {
      double m = 0.0;
      for (const auto& r : res.reduction) m = std::max(m, std::isnan(r.*field) ? 0.0 : r.*field);
      return m;
    };
    f << "slope_w " << res.freeness.fit_w.slope << "\nslope_D " << res.freeness.fit.slope << "\nslope_v "
      << res.freeness.fit_v.slope << "\nfit_window " << fo.fit_lo << ' ' << fo.fit_hi
      << "\nfit_reliable " << (res.freeness.fit.reliable ? "yes" : "no") << "\ngap_early "
      << res.early.convergence_gap << " (t=" << res.early.t_A << ".." << res.early.t_B << ")\ngap_late "
      << res.late.convergence_gap << " (t=" << res.late.t_A << ".." << res.late.t_B << ")\ngap_ratio " << res.gap_ratio
      << "\nparseval_ratio " << res.late.parseval_ratio << "\nmax_u_minus_wv " << max_of(&WaveReductionRow::split)
      << "\nmax_curlfree_v " << max_of(&WaveReductionRow::curl_free) << "\nmax_wave_residual_rel "
      << max_of(&WaveReductionRow::wave_residual_rel) << "\nmax_v_minus_grad_phi "
      << max_of(&WaveReductionRow::potential) << "\nscattering_H2 " << res.data.H2_norm << "\nimplied_constant "
      << res.data.implied_constant << '\n';
  }
  log << "scatter: slope_w=" << res.freeness.fit_w.slope << " slope_D=" << res.freeness.fit.slope
      << " gap_ratio=" << res.gap_ratio << '\n';
  return res;
}

// ---- rigidity -----------------------------------------------------------------------------

struct RigidityOutcome {
  std::vector<std::pair<std::vector<int>, std::vector<FluxResidualSample>>> flux;
  RigidityReport report;
  std::vector<DiagnosticsRow> rows;
};

inline RigidityOutcome run_rigidity(const RunConfig& c, const std::filesystem::path& out, std::ostream& log) {
  detail::prepare_output(c, out, log);
  if (!c.material.null_condition_holds()) throw ConfigError("rigidity: the flux identity needs d1 = 0");
  const double t1 = c.t1();
  const double k1 = t1 / (c.dt * double(c.snapshot_stride));
  if (t1 > c.T_final * (1.0 + 1e-12) ||
      (std::abs(k1 - std::round(k1)) > 1e-9 * std::max(1.0, k1) && std::abs(t1 - c.T_final) > 1e-12 * c.T_final))
    throw ConfigError("rigidity: rigidity.t1 must be a snapshot time");

  SnapshotDiagnostics diag(c, out);
  RigidityOutcome res;
  RunRecord rec;
  try {
    rec = record_for(c, out / "frames", c.split, false, diag, res.rows);
  } catch (...) {
    write_diagnostics_csv(out / "diagnostics.csv", res.rows);
    throw;
  }
  write_diagnostics_csv(out / "diagnostics.csv", res.rows);

  std::ofstream f(out / "flux_identity.csv", std::ios::trunc);
  f << std::setprecision(17) << "alpha,t,dEdt,Q,Qabs,rho,pointwise,pointwise_rel,equivalence\n";
  for (std::vector<int> alpha : {std::vector<int>{}, {0}, {1}, {2}}) {
    auto samples = flux_identity_residual(rec, c.material, alpha);
    const std::string name = alpha.empty() ? "none" : "x" + std::to_string(alpha[0] + 1);
    for (const auto& s : samples)
      f << name << ',' << s.t << ',' << s.dEdt << ',' << s.Q << ',' << s.Qabs << ',' << s.rho << ',' << s.pointwise
        << ',' << s.pointwise_rel << ',' << s.equivalence << '\n';
    res.flux.emplace_back(alpha, std::move(samples));
  }

  res.report = rigidity_check(rec, c.material, t1);
  write_rigidity_report(out / "rigidity_report.csv", res.report);
  log << "rigidity: ratio=" << (res.report.exact_zero ? std::string("exact_zero") : detail::format_double(res.report.ratio))
      << " C=" << res.report.C << " holds_fraction=" << res.report.holds_fraction << '\n';
  return res;
}

// ---- check --------------------------------------------------------------------------------

// A quick invariant suite on small grids. Random fields come from `seed`.
inline bool run_check(std::uint64_t seed, std::ostream& log) {
  bool all = true;
  auto report = [&](const std::string& name, double value, double tol) {
    const bool ok = value <= tol;
    all = all && ok;
    log << (ok ? "PASS " : "FAIL ") << name << ": " << value << " (tol " << tol << ")\n";
  };
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  const GridSpec g{16, 2.0 * M_PI};
  auto random_field = [&] {
    RealVectorField u(g);
    for (int c = 0; c < 3; ++c)
      for (double& v : u[c].data) v = nd(rng);
    return remove_zero_modes(band_limit(u));
  };
  MaterialParams mp;
  mp.d = {0.0, 0.7, -0.3, 0.5, 0.2};

  {
    double idem = 0.0, curl_cf = 0.0, div_df = 0.0, split = 0.0;
    for (int i = 0; i < 5; ++i) {
      const RealVectorField u = random_field();
      const HelmholtzParts p = helmholtz(u);
      const double nu = l2_norm(u);
      idem = std::max(idem, l2_norm(add(helmholtz(p.curl_free).curl_free, p.curl_free, -1.0)) / nu);
      curl_cf = std::max(curl_cf, l2_norm(curl(p.curl_free)) / nu);
      div_df = std::max(div_df, l2_norm(divergence(p.div_free)) / nu);
      split = std::max(split, std::abs(l2_norm_sq(p.curl_free) + l2_norm_sq(p.div_free) - nu * nu) / (nu * nu));
    }
    report("helmholtz_idempotence", idem, 1e-10);
    report("curl_of_curl_free_part", curl_cf, 1e-10);
    report("div_of_div_free_part", div_df, 1e-10);
    report("norm_splitting", split, 1e-10);
  }
  {
    const SpectralPair z(forward_transform(random_field()), forward_transform(random_field()));
    SpectralPair ab = propagated(propagated(z, 0.3, mp), 0.45, mp), d = propagated(z, 0.75, mp);
    axpy(-1.0, d, ab);
    const double nz = std::sqrt(spectral_norm_sq(z.u) + spectral_norm_sq(z.ut));
    report("group_law", std::sqrt(spectral_norm_sq(ab.u) + spectral_norm_sq(ab.ut)) / nz, 1e-12);
    SpectralPair back = propagated(propagated(z, 1.1, mp), -1.1, mp);
    axpy(-1.0, z, back);
    report("group_inverse", std::sqrt(spectral_norm_sq(back.u) + spectral_norm_sq(back.ut)) / nz, 1e-12);
    const double e0 = spectral_energy1(z, mp);
    report("linear_energy_drift", std::abs(spectral_energy1(propagated(z, 5.0, mp), mp) - e0) / e0, 1e-12);
  }
  {
    const GridSpec gs{16, 16.0};
    auto [u0, u1] = bump_data(gs, DataKind::mixed, 0.05, 2.0);
    Stepper st(gs, mp, StepperOptions{true, true, 0.5});
    st.set_state(make_state(u0, u1));
    for (int i = 0; i < 4; ++i) st.step(0.5 * st.max_stable_dt());
    const SimState s = st.state();
    const WaveReductionRow r = reduce_v_to_wave(s, mp);
    report("split_consistency", r.split, 1e-10);
    report("v_curl_free", r.curl_free, 1e-10);
    report("v_is_grad_phi", r.potential, 1e-8);
    const FluxDensities f = flux_densities(s, mp, {});
    report("flux_divergence_integral", std::abs(integrate(divergence(f.p))) /
                                           std::max(integrate_abs(f.e), energy_floor(gs)),
           1e-12);
  }
  {
    RunConfig c;
    c.probes = {"decay", "null_form"};
    c.material = mp;
    c.dt = 0.1 / 3.0;
    const bool same = parse_config(serialize_config(c)) == c;
    report("config_round_trip", same ? 0.0 : 1.0, 0.0);
  }
  log << (all ? "check: all invariants hold\n" : "check: FAILED\n");
  return all;
}

}  // namespace elasto
