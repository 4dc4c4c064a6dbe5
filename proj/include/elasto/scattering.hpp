#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "diagnostics.hpp"
#include "record.hpp"

namespace elasto {

// ‖∂w‖_{H¹} with ∂ = (∂_t, ∇): Σ_k (1 + |k|²)(|ŵ_t|² + |k|²|ŵ|²).
inline double gradient_h1_norm(const SpectralPair& z) {
  double s = 0.0;
  for (int c = 0; c < 3; ++c) {
    s += spectral_weighted_norm_sq(z.ut[c], [](double a, double b, double d) { return 1.0 + a * a + b * b + d * d; });
    s += spectral_weighted_norm_sq(z.u[c], [](double a, double b, double d) {
      const double k2 = a * a + b * b + d * d;
      return (1.0 + k2) * k2;
    });
  }
  return std::sqrt(s);
}

// 𝓗² norm of a data pair: ‖∇f0‖_{H¹} + ‖f1‖_{H¹}.
inline double h2_data_norm(const SpectralVectorField& f0, const SpectralVectorField& f1) {
  double a = 0.0, b = 0.0;
  for (int c = 0; c < 3; ++c) {
    a += spectral_weighted_norm_sq(f0[c], [](double x, double y, double z) {
      const double k2 = x * x + y * y + z * z;
      return (1.0 + k2) * k2;
    });
    b += spectral_weighted_norm_sq(f1[c], [](double x, double y, double z) { return 1.0 + x * x + y * y + z * z; });
  }
  return std::sqrt(a) + std::sqrt(b);
}

// Least-squares fit of log y = slope log t + intercept over samples with
// t in [t_lo, t_hi] and y > 0. A window shorter than a decade is flagged.
struct PowerLawFit {
  double slope = std::numeric_limits<double>::quiet_NaN();
  double intercept = std::numeric_limits<double>::quiet_NaN();
  std::size_t points = 0;
  double t_lo = 0.0, t_hi = 0.0;
  bool reliable = false;
};

inline PowerLawFit fit_power_law(const std::vector<double>& t, const std::vector<double>& y, double t_lo, double t_hi) {
  if (t.size() != y.size()) throw std::invalid_argument("fit_power_law: size mismatch");
  PowerLawFit f;
  f.t_lo = t_lo;
  f.t_hi = t_hi;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double tol = 1e-9 * std::max(1.0, t_hi);
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] < t_lo - tol || t[i] > t_hi + tol || !(t[i] > 0.0) || !(y[i] > 0.0)) continue;
    const double lx = std::log(t[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++f.points;
  }
  if (f.points >= 2) {
    const double n = double(f.points), det = n * sxx - sx * sx;
    if (det > 0.0) {
      f.slope = (n * sxy - sx * sy) / det;
      f.intercept = (sy - f.slope * sx) / n;
    }
  }
  f.reliable = f.points >= 3 && t_lo > 0.0 && t_hi / t_lo >= 10.0;
  return f;
}

namespace detail {

inline const FieldPair& require_split(const SimState& s, const char* who) {
  if (!s.w || !s.v) throw std::invalid_argument(std::string(who) + ": the run was not split into w and v");
  return *s.w;
}

inline SpectralPair spectral_pair(const FieldPair& p) { return SpectralPair(forward_transform(p.f), forward_transform(p.ft)); }

// Componentwise free wave of speed c, then the curl-free projection.
inline SpectralPair free_curl_free_wave(SpectralPair z, double t, double c) {
  for (int k = 0; k < 3; ++k) {
    SpectralScalarPair s(z.u[k], z.ut[k]);
    propagate(s, t, c);
    z.u[k] = std::move(s.f);
    z.ut[k] = std::move(s.ft);
  }
  return SpectralPair(spectral_curl_free_part(z.u), spectral_curl_free_part(z.ut));
}

inline double norm_floor(const GridSpec& g) { return 1e-14 * std::pow(g.volume(), 0.5); }

}  // namespace detail

// ---- scattering data of the w-part ---------------------------------------------------------

struct ScatteringData {
  RealVectorField w0bar, w1bar;
  std::optional<ScalarPair> phi_data;  // free c1-wave data of the potential, read off at the hand-off time
  double H2_norm = 0.0;
  double horizon = 0.0;        // T of the truncated integral ∫_0^T
  double tail_estimate = 0.0;  // bound on the neglected ∫_T^∞
  std::vector<std::pair<double, double>> r_series;  // (t, ‖∂w(t) − ∂w̄(t)‖_{H¹})
  // Recorded bound ‖(w̄0, w̄1)‖ <= C(‖(u0, u1)‖ + ∫‖G‖_{H¹}).
  double data_H2_norm = 0.0;
  double source_integral = 0.0;
  double implied_constant = 0.0;
};

// (w̄0, w̄1) = (w0, w1) + ∫_0^T S(−τ)(0, G(τ)) dτ from the record's streamed
// Simpson sum, and r(t) at every frame with w̄(t) = S(t)(w̄0, w̄1).
inline ScatteringData extract_scattering_data_w(const RunRecord& rec, const MaterialParams& mp,
                                                double handoff_fraction = 0.75) {
  if (rec.frames() < 2) throw std::invalid_argument("scattering data: the record holds no frames to compare against");
  if (!rec.duhamel) throw std::invalid_argument("scattering data: the record carries no Duhamel integral");
  const SimState first = rec.frame(0);
  if (first.t != 0.0) throw std::invalid_argument("scattering data: the first frame must sit at t = 0");
  SpectralPair bar = detail::spectral_pair(detail::require_split(first, "scattering data"));
  axpy(1.0, rec.duhamel->integral, bar);

  ScatteringData out;
  out.w0bar = inverse_transform(bar.u);
  out.w1bar = inverse_transform(bar.ut);
  out.H2_norm = h2_data_norm(bar.u, bar.ut);
  out.horizon = rec.duhamel->horizon;
  out.tail_estimate = rec.duhamel->tail_estimate;
  out.data_H2_norm = h2_data_norm(forward_transform(first.u), forward_transform(first.ut));
  out.source_integral = rec.duhamel->source_h1_integral;
  const double denom = out.data_H2_norm + out.source_integral;
  out.implied_constant = denom > 0.0 ? out.H2_norm / denom : 0.0;

  for (std::size_t i = 0; i < rec.frames(); ++i) {
    const SimState s = rec.frame(i);
    SpectralPair d = detail::spectral_pair(detail::require_split(s, "scattering data"));
    axpy(-1.0, propagated(bar, s.t, mp), d);
    out.r_series.push_back({s.t, gradient_h1_norm(d)});
  }

  const std::size_t h = rec.nearest_frame(handoff_fraction * rec.times().back());
  const SimState sh = rec.frame(h);
  if (sh.phi) {
    SpectralScalarPair p(forward_transform(sh.phi->f), forward_transform(sh.phi->ft));
    propagate(p, -sh.t, mp.c1);
    out.phi_data = ScalarPair{inverse_transform(p.f), inverse_transform(p.ft)};
  }
  return out;
}

// ---- reduction of v to a c1-wave -----------------------------------------------------------

struct WaveReductionRow {
  double t = 0.0;
  double split = 0.0;       // ‖u − (w + v)‖ / ‖u‖
  double curl_free = 0.0;   // ‖∇∧v‖ / max(‖∇v‖, floor)
  double wave_residual = 0.0;      // ‖v_tt − c1²Δv − F‖ with v_tt = A v + F
  double wave_residual_rel = 0.0;  // the same over max(c1²‖Δv‖, floor)
  double potential = std::numeric_limits<double>::quiet_NaN();  // ‖v − ∇φ‖ / ‖v‖ when φ is present
};

inline WaveReductionRow reduce_v_to_wave(const SimState& s, const MaterialParams& mp) {
  detail::require_split(s, "wave reduction");
  const double floor = detail::norm_floor(s.grid());
  auto rel = [&](double num, double den) { return num == 0.0 ? 0.0 : num / std::max(den, floor); };
  WaveReductionRow row;
  row.t = s.t;
  RealVectorField wv = add(s.w->f, s.v->f);
  row.split = rel(l2_norm(add(s.u, wv, -1.0)), l2_norm(s.u));

  const SpectralVectorField V = forward_transform(s.v->f);
  double gradv = 0.0;
  for (int c = 0; c < 3; ++c)
    gradv += spectral_weighted_norm_sq(V[c], [](double a, double b, double d) { return a * a + b * b + d * d; });
  row.curl_free = rel(std::sqrt(spectral_norm_sq(spectral_curl(V))), std::sqrt(gradv));

  // v_tt − c1²Δv − F = A v − c1²Δv once v_tt is taken from the equation.
  SpectralVectorField lap = spectral_laplacian(V);
  scale(lap, mp.c1 * mp.c1);
  SpectralVectorField res = spectral_apply_A(V, mp);
  axpy(-1.0, lap, res);
  row.wave_residual = std::sqrt(spectral_norm_sq(res));
  row.wave_residual_rel = rel(row.wave_residual, std::sqrt(spectral_norm_sq(lap)));

  if (s.phi) row.potential = rel(l2_norm(add(s.v->f, gradient(s.phi->f), -1.0)), l2_norm(s.v->f));
  return row;
}

inline std::vector<WaveReductionRow> reduce_v_to_wave(const RunRecord& rec, const MaterialParams& mp) {
  if (rec.frames() == 0) throw std::invalid_argument("wave reduction: empty record");
  std::vector<WaveReductionRow> out;
  for (std::size_t i = 0; i < rec.frames(); ++i) out.push_back(reduce_v_to_wave(rec.frame(i), mp));
  return out;
}

// ---- asymptotic freeness ---------------------------------------------------------------

struct FreenessRow {
  double t = 0.0;
  double D = 0.0;   // ‖∂u − ∂ū‖_{H¹}, ū = w̄ + v̄
  double Dw = 0.0;  // ‖∂w − ∂w̄‖_{H¹}
  double Dv = 0.0;  // ‖∂v − ∂v̄‖_{H¹}
};

struct FreenessOptions {
  double handoff_fraction = 0.75;
  double fit_lo = 0.0, fit_hi = 0.0;  // fit window; fit_hi <= 0 means [T/2, T]
};

struct FreenessReport {
  std::vector<FreenessRow> rows;
  double t_handoff = 0.0;
  PowerLawFit fit, fit_w, fit_v;
};

// v̄(t) = P_cf S_{c1}(t − T_h)(v, v_t)(T_h) with T_h the frame nearest
// handoff_fraction·T_final; w̄ comes from the scattering data.
inline FreenessReport asymptotic_freeness_report(const RunRecord& rec, const MaterialParams& mp,
                                                 const ScatteringData& sd, const FreenessOptions& opt = {}) {
  if (rec.frames() < 2) throw std::invalid_argument("freeness report: need at least 2 frames");
  const double T = rec.times().back();
  const SimState sh = rec.frame(rec.nearest_frame(opt.handoff_fraction * T));
  detail::require_split(sh, "freeness report");
  const SpectralPair vh = detail::spectral_pair(*sh.v);
  const SpectralPair wbar(forward_transform(sd.w0bar), forward_transform(sd.w1bar));

  FreenessReport rep;
  rep.t_handoff = sh.t;
  for (std::size_t i = 0; i < rec.frames(); ++i) {
    const SimState s = rec.frame(i);
    detail::require_split(s, "freeness report");
    const SpectralPair wb = propagated(wbar, s.t, mp);
    const SpectralPair vb = detail::free_curl_free_wave(vh, s.t - sh.t, mp.c1);
    SpectralPair dw = detail::spectral_pair(*s.w), dv = detail::spectral_pair(*s.v);
    axpy(-1.0, wb, dw);
    axpy(-1.0, vb, dv);
    SpectralPair du(forward_transform(s.u), forward_transform(s.ut));
    axpy(-1.0, wb, du);
    axpy(-1.0, vb, du);
    rep.rows.push_back({s.t, gradient_h1_norm(du), gradient_h1_norm(dw), gradient_h1_norm(dv)});
  }
  const double lo = opt.fit_hi > 0.0 ? opt.fit_lo : 0.5 * T, hi = opt.fit_hi > 0.0 ? opt.fit_hi : T;
  std::vector<double> t, D, Dw, Dv;
  for (const auto& r : rep.rows) {
    t.push_back(r.t);
    D.push_back(r.D);
    Dw.push_back(r.Dw);
    Dv.push_back(r.Dv);
  }
  rep.fit = fit_power_law(t, D, lo, hi);
  rep.fit_w = fit_power_law(t, Dw, lo, hi);
  rep.fit_v = fit_power_law(t, Dv, lo, hi);
  return rep;
}

// ---- radiation field -----------------------------------------------------------------------

// Vertices of an icosahedron subdivided `levels` times and pushed to the unit
// sphere: 12, 42, 162, 642, ... points.
inline std::vector<std::array<double, 3>> icosphere_directions(int levels = 2) {
  if (levels < 0 || levels > 5) throw std::invalid_argument("icosphere: levels must lie in [0, 5]");
  const double p = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<std::array<double, 3>> v{{-1, p, 0}, {1, p, 0},  {-1, -p, 0}, {1, -p, 0}, {0, -1, p},  {0, 1, p},
                                       {0, -1, -p}, {0, 1, -p}, {p, 0, -1},  {p, 0, 1},  {-p, 0, -1}, {-p, 0, 1}};
  std::vector<std::array<int, 3>> f{{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
                                    {11, 10, 2}, {10, 7, 6}, {7, 1, 8},   {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
                                    {3, 8, 9},   {4, 9, 5},  {2, 4, 11},  {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
  auto normalize = [](std::array<double, 3>& a) {
    const double n = std::sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2]);
    for (double& x : a) x /= n;
  };
  for (auto& a : v) normalize(a);
  for (int l = 0; l < levels; ++l) {
    std::map<std::pair<int, int>, int> mid;
    auto midpoint = [&](int a, int b) {
      auto key = std::minmax(a, b);
      auto it = mid.find(key);
      if (it != mid.end()) return it->second;
      std::array<double, 3> m{v[a][0] + v[b][0], v[a][1] + v[b][1], v[a][2] + v[b][2]};
      normalize(m);
      v.push_back(m);
      return mid[key] = int(v.size()) - 1;
    };
    std::vector<std::array<int, 3>> next;
    for (const auto& t : f) {
      const int a = midpoint(t[0], t[1]), b = midpoint(t[1], t[2]), c = midpoint(t[2], t[0]);
      next.push_back({t[0], a, c});
      next.push_back({t[1], b, a});
      next.push_back({t[2], c, b});
      next.push_back({a, b, c});
    }
    f = std::move(next);
  }
  return v;
}

// Periodic Lagrange interpolation of grid data with `points` nodes per axis
// (even, 2..8), centred on the cell that contains (x, y, z).
inline double lagrange_interpolate(const RealScalarField& f, double x, double y, double z, int points) {
  if (points < 2 || points > 8 || points % 2 != 0)
    throw std::invalid_argument("lagrange_interpolate: points must be even and in [2, 8]");
  const GridSpec& g = f.grid;
  const double h = g.spacing();
  const double pos[3] = {(x + 0.5 * g.box_length) / h, (y + 0.5 * g.box_length) / h, (z + 0.5 * g.box_length) / h};
  const int lo = -(points / 2 - 1);
  int base[3];
  double w[3][8];
  for (int a = 0; a < 3; ++a) {
    const double fl = std::floor(pos[a]);
    const double s = pos[a] - fl;
    base[a] = int(fl) + lo;
    for (int j = 0; j < points; ++j) {
      double num = 1.0, den = 1.0;
      for (int m = 0; m < points; ++m) {
        if (m == j) continue;
        num *= s - double(m + lo);
        den *= double(j - m);
      }
      w[a][j] = num / den;
    }
  }
  auto wrap = [n = g.n](int i) { return ((i % n) + n) % n; };
  double sum = 0.0;
  for (int c = 0; c < points; ++c) {
    const int i3 = wrap(base[2] + c);
    for (int b = 0; b < points; ++b) {
      const int i2 = wrap(base[1] + b);
      const double wbc = w[2][c] * w[1][b];
      for (int a = 0; a < points; ++a) sum += wbc * w[0][a] * f[g.index(wrap(base[0] + a), i2, i3)];
    }
  }
  return sum;
}

inline double tricubic(const RealScalarField& f, double x, double y, double z) {
  return lagrange_interpolate(f, x, y, z, 4);
}

struct RadiationOptions {
  int sphere_levels = 2;          // 162 directions
  double r_min_cells = 2.0;       // trusted radii: [r_min_cells h, L/2 − r_max_margin_cells h]
  double r_max_margin_cells = 2.0;
  int interpolation_points = 6;   // Lagrange nodes per axis when sampling along rays
  std::optional<double> sigma_lo, sigma_hi;  // default: the largest range trusted at both times
};

// Values are stored per component k as [direction * sigma.size() + sigma index].
struct RadiationField {
  std::vector<double> sigma;
  std::vector<std::array<double, 3>> directions;
  std::array<std::vector<double>, 3> values, dsigma_values;
  std::vector<unsigned char> valid;
  double t_A = 0.0, t_B = 0.0;
  double convergence_gap = 0.0;  // max over valid (σ, ω, k) of |λ_k(t_B) − λ_k(t_A)|
  double lambda_norm = 0.0;      // ‖Λ‖ in L²(S² × σ-range), summed over k
  double dv_norm = 0.0;          // ‖∂v(t_B)‖ = (‖v_t‖² + ‖∇v‖²)^{1/2}
  double parseval_ratio = 0.0;   // lambda_norm / ((2c1)^{-1/2} dv_norm), recorded only

  std::size_t index(std::size_t dir, std::size_t s) const { return dir * sigma.size() + s; }
};

namespace detail {

// Grid fields from which λ_k and ∂_r λ_k are assembled at exact radii:
//   λ = −(2c1)⁻¹ (r v_t − c1 v − c1 r ∂_r v)
//   ∂_r λ = −(2c1)⁻¹ (v_t + r ∂_r v_t − 2 c1 ∂_r v − c1 r ∂_r² v).
struct RayFields {
  std::array<RealScalarField, 3> v, vt, dr_v, dr_vt, drr_v;
};

inline RayFields ray_fields(const FieldPair& p) {
  const GridSpec& g = p.f.grid;
  GammaContext ctx(g);
  RayFields rf;
  const std::size_t m = g.size();
  for (int k = 0; k < 3; ++k) {
    rf.v[k] = p.f[k];
    rf.vt[k] = p.ft[k];
    const SpectralScalarField F = forward_transform(p.f[k]), Ft = forward_transform(p.ft[k]);
    auto gv = ctx.grid_gradient(F), gt = ctx.grid_gradient(Ft);
    rf.dr_v[k] = rf.dr_vt[k] = rf.drr_v[k] = RealScalarField(g);
    std::array<RealScalarField, 6> H;
    for (int a = 0; a < 3; ++a)
      for (int b = a; b < 3; ++b) H[sym_index(a, b)] = inverse_transform(spectral_second_derivative(F, a, b));
    for (std::size_t q = 0; q < m; ++q) {
      const double r = ctx.r()[q];
      if (r == 0.0) continue;
      const double w[3] = {ctx.x(0)[q] / r, ctx.x(1)[q] / r, ctx.x(2)[q] / r};
      double a1 = 0, a2 = 0, a3 = 0;
      for (int a = 0; a < 3; ++a) {
        a1 += w[a] * gv[a][q];
        a2 += w[a] * gt[a][q];
        for (int b = 0; b < 3; ++b) a3 += w[a] * w[b] * H[sym_index(a, b)][q];
      }
      rf.dr_v[k][q] = a1;
      rf.dr_vt[k][q] = a2;
      rf.drr_v[k][q] = a3;
    }
  }
  return rf;
}

struct RayValue {
  double lambda, dlambda;
};

inline RayValue ray_value(const RayFields& rf, int k, const std::array<double, 3>& w, double r, double c1, int points) {
  const double x = r * w[0], y = r * w[1], z = r * w[2];
  auto at = [&](const RealScalarField& f) { return lagrange_interpolate(f, x, y, z, points); };
  const double v = at(rf.v[k]), vt = at(rf.vt[k]), dv = at(rf.dr_v[k]), dvt = at(rf.dr_vt[k]), ddv = at(rf.drr_v[k]);
  const double s = -0.5 / c1;
  return {s * (r * vt - c1 * v - c1 * r * dv), s * (vt + r * dvt - 2.0 * c1 * dv - c1 * r * ddv)};
}

inline double spacetime_gradient_norm(const FieldPair& p) {
  const SpectralVectorField F = forward_transform(p.f);
  double s = l2_norm_sq(p.ft);
  for (int c = 0; c < 3; ++c)
    s += spectral_weighted_norm_sq(F[c], [](double a, double b, double d) { return a * a + b * b + d * d; });
  return std::sqrt(s);
}

}  // namespace detail

// Samples λ_k(t, c1 t + σ, ω) of the field pair (v, v_t) at t_A and t_B.
// Λ_k(σ, ω) is the value at t_B. (σ, ω) pairs whose rays leave the trusted
// radii at either time are flagged invalid and excluded from the gap.
inline RadiationField radiation_field_extract(const FieldPair& vA, double t_A, const FieldPair& vB, double t_B,
                                              const MaterialParams& mp, const RadiationOptions& opt = {}) {
  require_same_grid(vA.f.grid, vB.f.grid);
  if (!(t_B > t_A)) throw std::invalid_argument("radiation field: need t_A < t_B");
  const GridSpec& g = vA.f.grid;
  const double h = g.spacing(), c1 = mp.c1;
  const double r_min = opt.r_min_cells * h, r_max = 0.5 * g.box_length - opt.r_max_margin_cells * h;
  // Reachable σ: rays trusted at both times, and t̄(σ) = max(−2σ/c1, 2/c1) <= t_A.
  const double lo = opt.sigma_lo.value_or(std::max(r_min - c1 * t_A, -0.5 * c1 * t_A));
  const double hi = opt.sigma_hi.value_or(r_max - c1 * t_B);
  if (!opt.sigma_lo && !opt.sigma_hi && t_A < 2.0 / c1)
    throw std::invalid_argument("radiation field: t_A is below t̄ = 2/c1 for every σ");
  if (!(hi >= lo)) throw std::invalid_argument("radiation field: empty σ range at these times");

  RadiationField out;
  out.t_A = t_A;
  out.t_B = t_B;
  for (double s = lo; s <= hi + 1e-12 * std::max(1.0, std::abs(hi)); s += h) out.sigma.push_back(s);
  out.directions = icosphere_directions(opt.sphere_levels);
  const std::size_t ns = out.sigma.size(), nd = out.directions.size();
  for (int k = 0; k < 3; ++k) {
    out.values[k].assign(nd * ns, 0.0);
    out.dsigma_values[k].assign(nd * ns, 0.0);
  }
  out.valid.assign(nd * ns, 0);

  const detail::RayFields fa = detail::ray_fields(vA), fb = detail::ray_fields(vB);
  double norm2 = 0.0;
  for (std::size_t d = 0; d < nd; ++d)
    for (std::size_t s = 0; s < ns; ++s) {
      const double ra = c1 * t_A + out.sigma[s], rb = c1 * t_B + out.sigma[s];
      if (ra < r_min || ra > r_max || rb < r_min || rb > r_max) continue;
      const std::size_t i = out.index(d, s);
      out.valid[i] = 1;
      for (int k = 0; k < 3; ++k) {
        const auto a = detail::ray_value(fa, k, out.directions[d], ra, c1, opt.interpolation_points);
        const auto b = detail::ray_value(fb, k, out.directions[d], rb, c1, opt.interpolation_points);
        out.values[k][i] = b.lambda;
        out.dsigma_values[k][i] = b.dlambda;
        const double gap = std::abs(b.lambda - a.lambda);
        if (!std::isnan(out.convergence_gap) && !(gap <= out.convergence_gap)) out.convergence_gap = gap;  // NaN sticks
        norm2 += b.lambda * b.lambda;
      }
    }
  out.lambda_norm = std::sqrt(norm2 * h * 4.0 * M_PI / double(nd));
  out.dv_norm = detail::spacetime_gradient_norm(vB);
  const double ref = out.dv_norm / std::sqrt(2.0 * c1);
  out.parseval_ratio = ref > 0.0 ? out.lambda_norm / ref : 0.0;
  return out;
}

inline RadiationField radiation_field_extract(const RunRecord& rec, const MaterialParams& mp, double t_A, double t_B,
                                              const RadiationOptions& opt = {}) {
  const SimState a = rec.frame(rec.nearest_frame(t_A)), b = rec.frame(rec.nearest_frame(t_B));
  detail::require_split(a, "radiation field");
  detail::require_split(b, "radiation field");
  return radiation_field_extract(*a.v, a.t, *b.v, b.t, mp, opt);
}

inline void write_radiation_csv(const std::filesystem::path& values_path, const std::filesystem::path& directions_path,
                                const RadiationField& rf) {
  std::ofstream f(values_path, std::ios::trunc), d(directions_path, std::ios::trunc);
  if (!f || !d) throw std::runtime_error("cannot write radiation field tables");
  f << std::setprecision(17) << "sigma,omega_index,Lambda_1,Lambda_2,Lambda_3,dLambda_1,dLambda_2,dLambda_3\n";
  for (std::size_t dir = 0; dir < rf.directions.size(); ++dir)
    for (std::size_t s = 0; s < rf.sigma.size(); ++s) {
      const std::size_t i = rf.index(dir, s);
      if (!rf.valid[i]) continue;
      f << rf.sigma[s] << ',' << dir;
      for (int k = 0; k < 3; ++k) f << ',' << rf.values[k][i];
      for (int k = 0; k < 3; ++k) f << ',' << rf.dsigma_values[k][i];
      f << '\n';
    }
  d << std::setprecision(17) << "omega_index,x,y,z\n";
  for (std::size_t dir = 0; dir < rf.directions.size(); ++dir)
    d << dir << ',' << rf.directions[dir][0] << ',' << rf.directions[dir][1] << ',' << rf.directions[dir][2] << '\n';
}

// ---- good derivatives ------------------------------------------------------------------------

struct GoodDerivativeOptions {
  double r_min = 1.0;               // the bounds are claimed for r >= 1
  double r_max_margin_cells = 2.0;  // and checked inside the inscribed ball
};

// Pointwise empirical constants of
//   |r∂f + ω⃗(2c1)⁻¹ L̄(rf)|          <= C(|Γf| + |f| + ⟨c1t−r⟩|∂f|)
//   |r∂²f + ω⃗⊗ω⃗(2c1)⁻¹ ∂_r L̄(rf)| <= C(|Γf| + |∂f| + |∂Γf| + ⟨c1t−r⟩(|∂f| + |∂²f|))
// with ∂ = (∂_t, ∇), ω⃗ = (−c1, ω) and L̄ = ∂_t − c1∂_r. The jet needs f, f_t, f_tt.
inline std::vector<ProbeSample> good_derivative_check(const GammaContext& ctx, const ScalarJet& J, double c1,
                                                      const GoodDerivativeOptions& opt = {}) {
  if (J.size() < 3) throw std::invalid_argument("good derivatives: jet needs f, f_t and f_tt");
  const GridSpec& g = ctx.grid();
  const std::size_t m = g.size();
  const double t = J.t;
  const RealScalarField f = inverse_transform(J.d[0]), ft = inverse_transform(J.d[1]), ftt = inverse_transform(J.d[2]);
  const auto gf = ctx.grid_gradient(J.d[0]), gft = ctx.grid_gradient(J.d[1]);
  std::array<RealScalarField, 6> H;
  for (int a = 0; a < 3; ++a)
    for (int b = a; b < 3; ++b) H[sym_index(a, b)] = inverse_transform(spectral_second_derivative(J.d[0], a, b));

  // |Γf|² and |∂Γf|² over the eight generators.
  RealScalarField gam2(g), dgam2(g);
  {
    ScalarJet J2 = J;
    J2.d.resize(3);
    GammaContext::Children<SpectralScalarField> kids(ctx, J2, 2);
    for (Generator gen : kGenerators) {
      ScalarJet c = kids.make(gen);
      const RealScalarField v = inverse_transform(c.d[0]), vt = inverse_transform(c.d[1]);
      const auto gv = ctx.grid_gradient(c.d[0]);
      for (std::size_t q = 0; q < m; ++q) {
        gam2[q] += v[q] * v[q];
        dgam2[q] += vt[q] * vt[q] + gv[0][q] * gv[0][q] + gv[1][q] * gv[1][q] + gv[2][q] * gv[2][q];
      }
    }
  }

  const double r_max = 0.5 * g.box_length - opt.r_max_margin_cells * g.spacing();
  PointwiseMax best1, best2;
  std::vector<double> lhs1(m, 0.0), rhs1(m, 0.0), lhs2(m, 0.0), rhs2(m, 0.0);
  RealScalarField ratio1(g), ratio2(g);
  for (std::size_t q = 0; q < m; ++q) {
    const double r = ctx.r()[q];
    if (r < opt.r_min || r > r_max) continue;
    const double om[4] = {-c1, ctx.x(0)[q] / r, ctx.x(1)[q] / r, ctx.x(2)[q] / r};
    const double d1[4] = {ft[q], gf[0][q], gf[1][q], gf[2][q]};
    const double dtx[3] = {gft[0][q], gft[1][q], gft[2][q]};
    double drf = 0, drft = 0, drrf = 0;
    for (int a = 0; a < 3; ++a) {
      drf += om[a + 1] * d1[a + 1];
      drft += om[a + 1] * dtx[a];
      for (int b = 0; b < 3; ++b) drrf += om[a + 1] * om[b + 1] * H[sym_index(a, b)][q];
    }
    const double Lbar = r * ft[q] - c1 * f[q] - c1 * r * drf;
    const double drLbar = ft[q] + r * drft - 2.0 * c1 * drf - c1 * r * drrf;
    double d2[4][4];
    d2[0][0] = ftt[q];
    for (int a = 0; a < 3; ++a) {
      d2[0][a + 1] = d2[a + 1][0] = dtx[a];
      for (int b = 0; b < 3; ++b) d2[a + 1][b + 1] = H[sym_index(a, b)][q];
    }
    double l1 = 0, l2 = 0, nd1 = 0, nd2 = 0;
    for (int mu = 0; mu < 4; ++mu) {
      const double a = r * d1[mu] + om[mu] * Lbar / (2.0 * c1);
      l1 += a * a;
      nd1 += d1[mu] * d1[mu];
      for (int nu = 0; nu < 4; ++nu) {
        const double b = r * d2[mu][nu] + om[mu] * om[nu] * drLbar / (2.0 * c1);
        l2 += b * b;
        nd2 += d2[mu][nu] * d2[mu][nu];
      }
    }
    const double cone = japanese(c1 * t - r);
    lhs1[q] = std::sqrt(l1);
    rhs1[q] = std::sqrt(gam2[q]) + std::abs(f[q]) + cone * std::sqrt(nd1);
    lhs2[q] = std::sqrt(l2);
    rhs2[q] = std::sqrt(gam2[q]) + std::sqrt(nd1) + std::sqrt(dgam2[q]) + cone * (std::sqrt(nd1) + std::sqrt(nd2));
    best1.update(q, safe_ratio(lhs1[q], rhs1[q]));
    best2.update(q, safe_ratio(lhs2[q], rhs2[q]));
  }
  auto sample = [&](const char* name, const PointwiseMax& b, const std::vector<double>& l, const std::vector<double>& rr) {
    ProbeSample s;
    s.name = name;
    s.t = t;
    s.ratio = b.value;
    s.lhs = l[b.where];
    s.rhs = rr[b.where];
    s.where = grid_point(g, b.where);
    s.excluded_radius = opt.r_min;
    return s;
  };
  return {sample("good_derivative_1", best1, lhs1, rhs1), sample("good_derivative_2", best2, lhs2, rhs2)};
}

// Jet (v_k, ∂_t v_k, ∂_t² v_k) of one component of the split part v, with
// ∂_t² v = A v + F and F = d2 ∇|∇∧u|².
inline ScalarJet v_component_jet(const SimState& s, const MaterialParams& mp, int k) {
  detail::require_split(s, "v jet");
  const SpectralVectorField V = forward_transform(s.v->f);
  SpectralVectorField vtt = spectral_apply_A(V, mp);
  if (!mp.is_linear()) axpy(1.0, nonlinear_terms(forward_transform(s.u), nullptr, mp).n1, vtt);
  ScalarJet J;
  J.t = s.t;
  J.d = {V[k], forward_transform(s.v->ft[k]), vtt[k]};
  return J;
}

// Worst constants over the components of v at one state.
inline std::vector<ProbeSample> good_derivative_check(const SimState& s, const MaterialParams& mp,
                                                      const GoodDerivativeOptions& opt = {}) {
  GammaContext ctx(s.grid());
  std::vector<ProbeSample> worst;
  for (int k = 0; k < 3; ++k) {
    auto r = good_derivative_check(ctx, v_component_jet(s, mp, k), mp.c1, opt);
    if (worst.empty()) {
      worst = r;
    } else {
      for (std::size_t i = 0; i < r.size(); ++i)
        if (r[i].ratio > worst[i].ratio) worst[i] = r[i];
    }
  }
  return worst;
}

// max over the grid of ⟨r⟩²⟨c2t − r⟩^{3/2}|∇^α F| for |α| <= 1, with F the
// v-source. Recorded as a check on the decay assumed for F; no bound is asserted.
inline ProbeSample source_decay_probe(const SimState& s, const MaterialParams& mp) {
  const GridSpec& g = s.grid();
  GammaContext ctx(g);
  ProbeSample out;
  out.name = "source_decay";
  out.t = s.t;
  if (mp.is_linear()) return out;
  const SpectralVectorField F = nonlinear_terms(forward_transform(s.u), nullptr, mp).n1;
  RealScalarField mag(g);
  const RealVectorField f = inverse_transform(F);
  for (std::size_t q = 0; q < g.size(); ++q) mag[q] = f[0][q] * f[0][q] + f[1][q] * f[1][q] + f[2][q] * f[2][q];
  GradientFields gF = gradient_fields(F);
  for (int c = 0; c < 3; ++c)
    for (int a = 0; a < 3; ++a)
      for (std::size_t q = 0; q < g.size(); ++q) mag[q] += gF[c][a][q] * gF[c][a][q];
  PointwiseMax best;
  for (std::size_t q = 0; q < g.size(); ++q) {
    const double r = ctx.r()[q];
    const double jr = japanese(r);
    best.update(q, jr * jr * std::pow(japanese(mp.c2 * s.t - r), 1.5) * std::sqrt(mag[q]));
  }
  out.lhs = out.ratio = best.value;
  out.rhs = 1.0;
  out.where = grid_point(g, best.where);
  return out;
}

// ---- report files --------------------------------------------------------------------------

inline void write_freeness_report(const std::filesystem::path& csv, const std::filesystem::path& txt,
                                  const FreenessReport& rep, const ScatteringData& sd) {
  std::ofstream f(csv, std::ios::trunc), t(txt, std::ios::trunc);
  if (!f || !t) throw std::runtime_error("cannot write freeness report");
  f << std::setprecision(17) << "t,D,D_w,D_v,r\n";
  for (std::size_t i = 0; i < rep.rows.size(); ++i) {
    const auto& r = rep.rows[i];
    f << r.t << ',' << r.D << ',' << r.Dw << ',' << r.Dv << ',';
    if (i < sd.r_series.size())
      f << sd.r_series[i].second;
    else
      f << "NA";
    f << '\n';
  }
  auto fit_line = [&](const char* name, const PowerLawFit& p) {
    t << name << ": slope " << p.slope << " over t in [" << p.t_lo << ", " << p.t_hi << "] (" << p.points
      << " points)" << (p.reliable ? "" : ", window under one decade: unreliable") << '\n';
  };
  t << std::setprecision(6);
  t << "asymptotic freeness\n";
  t << "hand-off time for v: " << rep.t_handoff << '\n';
  fit_line("D", rep.fit);
  fit_line("D_w", rep.fit_w);
  fit_line("D_v", rep.fit_v);
  t << "scattering data H2 norm: " << sd.H2_norm << '\n';
  t << "data H2 norm: " << sd.data_H2_norm << ", source integral: " << sd.source_integral
    << ", implied constant: " << sd.implied_constant << '\n';
  t << "Duhamel horizon: " << sd.horizon << ", tail estimate: " << sd.tail_estimate << '\n';
}

}  // namespace elasto
