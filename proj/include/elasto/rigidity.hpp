#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "diagnostics.hpp"
#include "record.hpp"

namespace elasto {

// Energy, flux and production densities for v = ∇^α u with |α| <= 1. v obeys
// L v = c_α N(u, v) with c_α = 1 for α = 0 and 2 otherwise, and
//   ∂_t e + ∇·p = q,  e = e1 − e2 − e3,  p = p1 − p2 − p3,  q = q2 + q3.
// `alpha` lists the differentiated axes: {} or {a}.
struct FluxDensities {
  std::vector<int> alpha;
  RealScalarField e1, e2, e3;
  RealVectorField p1, p2, p3;
  RealScalarField q2, q3;
  RealScalarField e, q;
  RealVectorField p;
};

inline double flux_coefficient(const std::vector<int>& alpha) { return alpha.empty() ? 1.0 : 2.0; }

inline void check_flux_alpha(const std::vector<int>& alpha) {
  if (alpha.size() > 1) throw std::invalid_argument("flux densities: only |alpha| <= 1 is supported");
  for (int a : alpha)
    if (a < 0 || a > 2) throw std::invalid_argument("flux densities: axis must be 0, 1 or 2");
}

namespace detail {

// ∇^α of a spectral vector field.
inline SpectralVectorField apply_alpha(const SpectralVectorField& U, const std::vector<int>& alpha) {
  SpectralVectorField out = U;
  for (int a : alpha)
    for (int c = 0; c < 3; ++c) out[c] = spectral_derivative(out[c], a);
  return out;
}

// Q_ij(f, g) = ∂_i f ∂_j g − ∂_j f ∂_i g, from gradients.
inline double qform(const double* df, const double* dg, int i, int j) { return df[i] * dg[j] - df[j] * dg[i]; }

}  // namespace detail

inline FluxDensities flux_densities(const SimState& s, const MaterialParams& mp, const std::vector<int>& alpha) {
  check_flux_alpha(alpha);
  if (!mp.null_condition_holds()) throw std::invalid_argument("flux densities: require the null condition d1 = 0");
  const GridSpec& g = s.grid();
  const double c = flux_coefficient(alpha);
  const double a2 = mp.c2 * mp.c2, lam = mp.c1 * mp.c1 - mp.c2 * mp.c2;
  const double d2 = mp.d2(), s1 = mp.d3() + 0.5 * mp.d4(), d5 = mp.d5();

  const SpectralVectorField U = forward_transform(s.u), Ut = forward_transform(s.ut);
  const SpectralVectorField V = detail::apply_alpha(U, alpha), Vt = detail::apply_alpha(Ut, alpha);
  const GradientFields gu = gradient_fields(U), gut = gradient_fields(Ut), gv = gradient_fields(V);
  const RealVectorField vt = inverse_transform(Vt);

  FluxDensities f;
  f.alpha = alpha;
  f.e1 = f.e2 = f.e3 = f.q2 = f.q3 = f.e = f.q = RealScalarField(g);
  f.p1 = f.p2 = f.p3 = f.p = RealVectorField(g);

  const std::size_t m = g.size();
#pragma omp parallel for schedule(static)
  for (std::size_t n = 0; n < m; ++n) {
    // D*[k][i] = ∂_i (·)^k
    double Du[3][3], Dut[3][3], Dv[3][3], w[3];
    for (int k = 0; k < 3; ++k) {
      w[k] = vt[k][n];
      for (int i = 0; i < 3; ++i) {
        Du[k][i] = gu[k][i][n];
        Dut[k][i] = gut[k][i][n];
        Dv[k][i] = gv[k][i][n];
      }
    }
    const double divu = Du[0][0] + Du[1][1] + Du[2][2];
    const double divv = Dv[0][0] + Dv[1][1] + Dv[2][2];
    const double divut = Dut[0][0] + Dut[1][1] + Dut[2][2];
    const double cu[3] = {Du[2][1] - Du[1][2], Du[0][2] - Du[2][0], Du[1][0] - Du[0][1]};
    const double cv[3] = {Dv[2][1] - Dv[1][2], Dv[0][2] - Dv[2][0], Dv[1][0] - Dv[0][1]};
    const double cut[3] = {Dut[2][1] - Dut[1][2], Dut[0][2] - Dut[2][0], Dut[1][0] - Dut[0][1]};

    // e1, p1
    double grad2 = 0.0, w2 = 0.0;
    for (int k = 0; k < 3; ++k) {
      w2 += w[k] * w[k];
      for (int i = 0; i < 3; ++i) grad2 += Dv[k][i] * Dv[k][i];
    }
    const double e1 = 0.5 * (w2 + a2 * grad2 + lam * divv * divv);
    double p1[3];
    for (int i = 0; i < 3; ++i) {
      p1[i] = -lam * w[i] * divv;
      for (int k = 0; k < 3; ++k) p1[i] -= a2 * w[k] * Dv[k][i];
    }

    // e2, p2, q2 (d2 group)
    double cucv = 0.0, e2 = 0.0, q2 = 0.0;
    double inner[3];
    for (int i = 0; i < 3; ++i) {
      cucv += cu[i] * cv[i];
      inner[i] = divu * cv[i] + cu[i] * divv;
      e2 += cv[i] * (0.5 * divu * cv[i] + cu[i] * divv);
      q2 += cv[i] * (0.5 * divut * cv[i] + cut[i] * divv);
    }
    e2 *= -c * d2;
    q2 *= c * d2;
    const double cr[3] = {w[1] * inner[2] - w[2] * inner[1], w[2] * inner[0] - w[0] * inner[2],
                          w[0] * inner[1] - w[1] * inner[0]};
    double p2[3];
    for (int i = 0; i < 3; ++i) p2[i] = c * d2 * (w[i] * cucv + cr[i]);

    // e3, p3, q3 (d3, d4, d5 group). Rows of Du, Dut, Dv are the gradients of
    // the components, so Q_ij(u^a, v^b) = qform(Du[a], Dv[b], i, j).
    double e3 = 0.0, q3 = 0.0, p3[3] = {0.0, 0.0, 0.0};
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k) {
          using detail::qform;
          e3 += c * s1 * (Dv[k][k] * qform(Du[j], Dv[i], i, j) - Dv[i][k] * qform(Du[k], Dv[j], i, j));
          e3 += 0.5 * c * d5 *
                (Dv[k][j] * qform(Du[k], Dv[i], i, j) - Dv[k][j] * qform(Du[i], Dv[k], i, j) -
                 Du[k][j] * qform(Dv[i], Dv[k], i, j));
          q3 += c * s1 * (-Dv[k][k] * qform(Dut[j], Dv[i], i, j) + Dv[i][k] * qform(Dut[k], Dv[j], i, j));
          q3 += 0.5 * c * d5 *
                (-Dv[k][j] * qform(Dut[k], Dv[i], i, j) + Dv[k][j] * qform(Dut[i], Dv[k], i, j) +
                 Dut[k][j] * qform(Dv[i], Dv[k], i, j));
          p3[i] += c * s1 * (2.0 * Du[j][j] * Dv[k][k] * w[i] - Du[k][j] * Dv[i][k] * w[j] - Du[i][j] * Dv[j][k] * w[k]);
          p3[i] += 0.5 * c * d5 *
                   (Du[k][j] * (2.0 * w[i] * Dv[k][j] - w[j] * Dv[k][i] - w[k] * Dv[i][j] - w[k] * Dv[j][i]) +
                    Du[k][i] * (-w[j] * Dv[k][j] + 2.0 * w[k] * Dv[j][j] - w[j] * Dv[j][k]) -
                    Du[i][k] * w[j] * Dv[j][k] + 2.0 * Du[k][k] * w[j] * Dv[j][i]);
        }

    f.e1[n] = e1;
    f.e2[n] = e2;
    f.e3[n] = e3;
    f.q2[n] = q2;
    f.q3[n] = q3;
    f.e[n] = e1 - e2 - e3;
    f.q[n] = q2 + q3;
    for (int i = 0; i < 3; ++i) {
      f.p1[i][n] = p1[i];
      f.p2[i][n] = p2[i];
      f.p3[i][n] = p3[i];
      f.p[i][n] = p1[i] - p2[i] - p3[i];
    }
  }
  return f;
}

inline double integrate(const RealScalarField& f) {
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) s += f[i];
  return s * f.grid.cell_volume();
}

inline double integrate_abs(const RealScalarField& f) {
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) s += std::abs(f[i]);
  return s * f.grid.cell_volume();
}

// Smallest c with c⁻¹e1 <= e <= c e1 at every point where e1 exceeds
// `rel_floor` times its maximum. Infinite when e <= 0 at such a point.
inline double pointwise_equivalence_constant(const FluxDensities& f, double rel_floor = 1e-10) {
  double emax = 0.0;
  for (std::size_t i = 0; i < f.e1.size(); ++i) emax = std::max(emax, f.e1[i]);
  if (emax == 0.0) return 1.0;
  double c = 1.0;
  for (std::size_t i = 0; i < f.e1.size(); ++i) {
    if (f.e1[i] < rel_floor * emax) continue;
    if (f.e[i] <= 0.0) return std::numeric_limits<double>::infinity();
    const double r = f.e[i] / f.e1[i];
    c = std::max(c, std::max(r, 1.0 / r));
  }
  return c;
}

// Relative-ratio floor in energy units.
inline double energy_floor(const GridSpec& g) { return 1e-14 * g.volume(); }

struct FluxResidualSample {
  double t = 0.0;
  double dEdt = 0.0;       // centered difference of ∫e
  double Q = 0.0;          // ∫q
  double Qabs = 0.0;       // ∫|q|
  double rho = 0.0;        // |dEdt − Q| / max(Qabs, floor)
  double pointwise = 0.0;  // ‖∂_t e + ∇·p − q‖, ∂_t e by centered differences
  double pointwise_rel = 0.0;  // the same over max(‖∇·p‖, floor)
  double equivalence = 1.0;    // pointwise equivalence constant of e and e1
};

// ρ(t) at every interior frame of the record. The three-point derivative
// weights handle non-uniform spacing (the last frame may fall off-stride).
inline std::vector<FluxResidualSample> flux_identity_residual(const RunRecord& rec, const MaterialParams& mp,
                                                              const std::vector<int>& alpha) {
  check_flux_alpha(alpha);
  if (rec.frames() < 3) throw std::invalid_argument("flux identity: need at least 3 frames");
  const GridSpec& g = rec.grid();
  const double floor = energy_floor(g);
  const double dV = g.cell_volume();

  struct Frame {
    double t, E, Q, Qabs, equiv;
    RealScalarField e, src;  // src = q − ∇·p
  };
  auto load = [&](std::size_t i) {
    FluxDensities f = flux_densities(rec.frame(i), mp, alpha);
    Frame fr{rec.time(i), integrate(f.e), integrate(f.q), integrate_abs(f.q), pointwise_equivalence_constant(f), f.e,
             f.q};
    RealScalarField divp = inverse_transform(spectral_divergence(forward_transform(f.p)));
    for (std::size_t p = 0; p < fr.src.size(); ++p) fr.src[p] -= divp[p];
    return fr;
  };

  std::vector<FluxResidualSample> out;
  Frame prev = load(0), cur = load(1);
  for (std::size_t i = 1; i + 1 < rec.frames(); ++i) {
    Frame next = load(i + 1);
    const double h1 = cur.t - prev.t, h2 = next.t - cur.t;
    const double wp = -h2 / (h1 * (h1 + h2)), wc = (h2 - h1) / (h1 * h2), wn = h1 / (h2 * (h1 + h2));
    FluxResidualSample s;
    s.t = cur.t;
    s.dEdt = wp * prev.E + wc * cur.E + wn * next.E;
    s.Q = cur.Q;
    s.Qabs = cur.Qabs;
    s.rho = std::abs(s.dEdt - s.Q) / std::max(s.Qabs, floor);
    double res = 0.0, div = 0.0;
    for (std::size_t p = 0; p < cur.e.size(); ++p) {
      const double et = wp * prev.e[p] + wc * cur.e[p] + wn * next.e[p];
      const double r = et - cur.src[p];
      res += r * r;
      div += et * et;
    }
    s.pointwise = std::sqrt(res * dV);
    s.pointwise_rel = s.pointwise / std::max(std::sqrt(div * dV), floor);
    s.equivalence = cur.equiv;
    out.push_back(s);
    prev = std::move(cur);
    cur = std::move(next);
  }
  return out;
}

// ---- backward energy bound ------------------------------------------------------------------

struct EnergySample {
  double t = 0.0;
  double calE2 = 0.0;
  double E4 = 0.0;
};

// 𝓔_2 and E_4 at every frame with t <= t1 (plus a small tolerance).
inline std::vector<EnergySample> energy_series(const RunRecord& rec, const MaterialParams& mp, double t1) {
  std::vector<EnergySample> out;
  for (std::size_t i = 0; i < rec.frames(); ++i) {
    if (rec.time(i) > t1 * (1.0 + 1e-12) + 1e-12) break;
    SimState s = rec.frame(i);
    GammaContext ctx(s.grid());
    VectorJet J = time_jet(s, mp, kMaxEnergyOrder);
    out.push_back({s.t, calE_energies(SpectralPair(J.d[0], J.d[1]), mp, 2)[2], gamma_energies(ctx, J, 4)[4]});
  }
  return out;
}

struct RigidityRow {
  double t = 0.0, calE2 = 0.0, E4 = 0.0, lhs = 0.0, rhs = 0.0, margin = 0.0;
};

struct RigidityReport {
  std::vector<RigidityRow> rows;
  double C = 1.0;         // fitted constant, at least 1
  double t1 = 0.0;
  double ratio = 0.0;     // 𝓔_2(u(0)) / 𝓔_2(u(t1))
  bool exact_zero = false;
  double holds_fraction = 0.0;  // share of rows with margin >= 0
};

// Checks 𝓔_2(t) <= C 𝓔_2(t1) + C ∫_t^{t1} ⟨τ⟩^{-3/2} E_4^{1/2} 𝓔_2 dτ on the
// samples, with C fitted so that equality holds at the sample nearest t1/2
// (and C >= 1, the value forced by the linear case). The integral uses the
// trapezoid rule on the samples. Margins above −1e-12·rhs count as holding.
inline RigidityReport rigidity_check(const std::vector<EnergySample>& series, double t1, double floor) {
  if (series.size() < 2) throw std::invalid_argument("rigidity check: need at least 2 samples");
  for (std::size_t i = 1; i < series.size(); ++i)
    if (!(series[i].t > series[i - 1].t)) throw std::invalid_argument("rigidity check: sample times must increase");
  RigidityReport rep;
  rep.t1 = t1;
  const std::size_t last = series.size() - 1;
  if (std::abs(series[last].t - t1) > 1e-9 * std::max(1.0, t1))
    throw std::invalid_argument("rigidity check: the last sample must sit at t1");

  const std::size_t n = series.size();
  std::vector<double> I(n, 0.0);  // ∫_{t_i}^{t1}
  auto integrand = [&](const EnergySample& s) { return std::pow(1.0 + s.t * s.t, -0.75) * std::sqrt(s.E4) * s.calE2; };
  for (std::size_t i = last; i-- > 0;)
    I[i] = I[i + 1] + 0.5 * (series[i + 1].t - series[i].t) * (integrand(series[i]) + integrand(series[i + 1]));

  const double E1 = series[last].calE2;
  if (E1 < floor) {
    rep.exact_zero = true;
    rep.ratio = series.front().calE2 < floor ? 0.0 : std::numeric_limits<double>::infinity();
  } else {
    rep.ratio = series.front().calE2 / E1;
  }

  std::size_t mid = 0;
  for (std::size_t i = 0; i < n; ++i)
    if (std::abs(series[i].t - 0.5 * t1) < std::abs(series[mid].t - 0.5 * t1)) mid = i;
  const double denom = E1 + I[mid];
  rep.C = denom > floor ? std::max(1.0, series[mid].calE2 / denom) : 1.0;

  std::size_t ok = 0;
  for (std::size_t i = 0; i < n; ++i) {
    RigidityRow row{series[i].t, series[i].calE2, series[i].E4, series[i].calE2, rep.C * (E1 + I[i]), 0.0};
    row.margin = row.rhs - row.lhs;
    if (row.margin >= -1e-12 * std::max(row.rhs, floor)) ++ok;
    rep.rows.push_back(row);
  }
  rep.holds_fraction = double(ok) / double(n);
  return rep;
}

inline RigidityReport rigidity_check(const RunRecord& rec, const MaterialParams& mp, double t1) {
  if (rec.frames() == 0) throw std::invalid_argument("rigidity check: empty record");
  return rigidity_check(energy_series(rec, mp, t1), t1, energy_floor(rec.grid()));
}

inline void write_rigidity_report(const std::filesystem::path& path, const RigidityReport& rep) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << std::setprecision(17) << "t,calE2,E4,lhs_431,rhs_431,margin\n";
  for (const auto& r : rep.rows)
    f << r.t << ',' << r.calE2 << ',' << r.E4 << ',' << r.lhs << ',' << r.rhs << ',' << r.margin << '\n';
  f << "# rigidity_ratio=";
  if (rep.exact_zero && rep.ratio == 0.0)
    f << "exact_zero";
  else
    f << rep.ratio;
  f << " C=" << rep.C << " t1=" << rep.t1 << " holds_fraction=" << rep.holds_fraction << '\n';
}

}  // namespace elasto
