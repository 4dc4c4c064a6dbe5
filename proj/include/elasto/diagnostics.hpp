#pragma once

#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gamma.hpp"

namespace elasto {

inline constexpr int kMaxEnergyOrder = 4;

// Values indexed by order k (slot 0 unused); orders not computed hold NaN.
using OrderArray = std::array<double, kMaxEnergyOrder + 1>;

inline OrderArray not_computed() {
  OrderArray a;
  a.fill(std::numeric_limits<double>::quiet_NaN());
  return a;
}

inline void check_order(int k, int lowest = 1) {
  if (k < lowest || k > kMaxEnergyOrder)
    throw std::invalid_argument("diagnostics order must lie in [" + std::to_string(lowest) + ", " +
                                std::to_string(kMaxEnergyOrder) + "], got " + std::to_string(k));
}

// ---- energies ---------------------------------------------------------------------------

// E_1(f) = ‖∂_t f‖² + ‖∇f‖², from jet entries 0 and 1.
template <typename F>
inline double first_energy(const TimeJet<F>& J) {
  double s = 0.0;
  for (int c = 0; c < detail::components(J.d[0]); ++c) {
    s += spectral_norm_sq(detail::component(J.d[1], c));
    s += spectral_weighted_norm_sq(detail::component(J.d[0], c),
                                   [](double k1, double k2, double k3) { return k1 * k1 + k2 * k2 + k3 * k3; });
  }
  return s;
}

// Σ_{|α|<=m} k^{2α} over multi-indices α ∈ N³.
inline double derivative_weight(int m, double k1, double k2, double k3) {
  const double a = k1 * k1, b = k2 * k2, c = k3 * k3;
  double s = 0.0, pa = 1.0;
  for (int i = 0; i <= m; ++i, pa *= a) {
    double pb = 1.0;
    for (int j = 0; i + j <= m; ++j, pb *= b) {
      double pc = 1.0;
      for (int l = 0; i + j + l <= m; ++l, pc *= c) s += pa * pb * pc;
    }
  }
  return s;
}

// 𝓔_k = Σ_{|α|<=k-1} 𝓔_1(∇^α u), all from spectra.
inline OrderArray calE_energies(const SpectralPair& z, const MaterialParams& mp, int max_order) {
  check_order(max_order);
  OrderArray out = not_computed();
  const double a = mp.c2 * mp.c2, b = mp.c1 * mp.c1 - mp.c2 * mp.c2;
  SpectralScalarField div = spectral_divergence(z.u);
  for (int k = 1; k <= max_order; ++k) {
    auto w = [k](double k1, double k2, double k3) { return derivative_weight(k - 1, k1, k2, k3); };
    auto wk = [k](double k1, double k2, double k3) {
      return derivative_weight(k - 1, k1, k2, k3) * (k1 * k1 + k2 * k2 + k3 * k3);
    };
    double s = 0.0;
    for (int c = 0; c < 3; ++c) s += spectral_weighted_norm_sq(z.ut[c], w) + a * spectral_weighted_norm_sq(z.u[c], wk);
    s += b * spectral_weighted_norm_sq(div, w);
    out[k] = 0.5 * s;
  }
  return out;
}

// E_k = Σ_{|a|<=k-1} E_1(Γ^a f) for k = 1..max_order, one tree walk.
template <typename F>
inline OrderArray gamma_energies(const GammaContext& ctx, const TimeJet<F>& root, int max_order) {
  check_order(max_order);
  OrderArray out = not_computed();
  for (int k = 1; k <= max_order; ++k) out[k] = 0.0;
  gamma_tree<F>(ctx, {root}, max_order - 1, 2, [&](const GammaIndex& a, const std::vector<TimeJet<F>>& jets) {
    const double e = first_energy(jets[0]);
    for (int k = int(a.size()) + 1; k <= max_order; ++k) out[k] += e;
  });
  return out;
}

// ---- pointwise helpers --------------------------------------------------------------------

inline double japanese(double s) { return std::sqrt(1.0 + s * s); }

struct PointwiseMax {
  double value = 0.0;
  std::size_t where = std::numeric_limits<std::size_t>::max();

  void update(std::size_t i, double v) {
    if (v > value) {
      value = v;
      where = i;
    }
  }
};

inline std::array<double, 3> grid_point(const GridSpec& g, std::size_t idx) {
  if (idx == std::numeric_limits<std::size_t>::max()) return {0.0, 0.0, 0.0};
  const std::size_t n = std::size_t(g.n);
  return {g.coord(int(idx % n)), g.coord(int((idx / n) % n)), g.coord(int(idx / (n * n)))};
}

namespace detail {

// Pointwise |f|² summed over components.
template <typename F>
inline RealScalarField pointwise_sq(const F& f) {
  RealScalarField out(f.grid);
  for (int c = 0; c < components(f); ++c) {
    RealScalarField fc = inverse_transform(component(f, c));
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += fc[i] * fc[i];
  }
  return out;
}

// Pointwise |∂f|² = |∂_t f|² + |∇f|² from jet entries 0 and 1.
template <typename F>
inline RealScalarField spacetime_gradient_sq(const TimeJet<F>& J) {
  RealScalarField out = pointwise_sq(J.d[1]);
  for (int c = 0; c < components(J.d[0]); ++c)
    for (int a = 0; a < 3; ++a) {
      RealScalarField d = inverse_transform(spectral_derivative(component(J.d[0], c), a));
      for (std::size_t i = 0; i < out.size(); ++i) out[i] += d[i] * d[i];
    }
  return out;
}

// Second derivatives ∂_β∂_l f, β ∈ {t,1,2,3}, l ∈ {1,2,3}: returns the sum over
// (β, l) of ‖weight·∂_β∂_l f‖ and, on request, the pointwise Σ|∂_β∂_l f|².
template <typename F>
inline double second_derivative_norms(const TimeJet<F>& J, const RealScalarField& weight, RealScalarField* pointwise) {
  const GridSpec& g = J.grid();
  const int nc = components(J.d[0]);
  const double h3 = g.cell_volume();
  double total = 0.0;
  auto accumulate = [&](int beta, int l, double multiplicity) {
    double s = 0.0;
    for (int c = 0; c < nc; ++c) {
      SpectralScalarField D = beta < 0 ? spectral_derivative(component(J.d[1], c), l)
                                       : spectral_second_derivative(component(J.d[0], c), beta, l);
      RealScalarField d = inverse_transform(D);
      for (std::size_t i = 0; i < d.size(); ++i) {
        const double v = d[i] * d[i];
        s += weight[i] * weight[i] * v;
        if (pointwise) (*pointwise)[i] += multiplicity * v;
      }
    }
    total += multiplicity * std::sqrt(s * h3);
  };
  for (int l = 0; l < 3; ++l) accumulate(-1, l, 1.0);
  for (int b = 0; b < 3; ++b)
    for (int l = b; l < 3; ++l) accumulate(b, l, b == l ? 1.0 : 2.0);
  return total;
}

inline RealScalarField cone_weight(const GammaContext& ctx, double c, double t) {
  RealScalarField w(ctx.grid());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = japanese(c * t - ctx.r()[i]);
  return w;
}

}  // namespace detail

// ---- weighted norms --------------------------------------------------------------------------

// 𝓧_k of a vector field, k = 2..max_order: Σ ‖⟨c1 t − r⟩∂_β∂_lΓ^a u_cf‖ +
// ‖⟨c2 t − r⟩∂_β∂_lΓ^a u_df‖ over |a| <= k − 2. `ujet` needs max_order entries.
inline OrderArray weighted_norm_X(const GammaContext& ctx, const VectorJet& ujet, const MaterialParams& mp,
                                  int max_order) {
  check_order(max_order, 2);
  OrderArray out = not_computed();
  for (int k = 2; k <= max_order; ++k) out[k] = 0.0;
  const RealScalarField w1 = detail::cone_weight(ctx, mp.c1, ujet.t), w2 = detail::cone_weight(ctx, mp.c2, ujet.t);
  std::vector<VectorJet> roots{helmholtz_jet(ujet, true), helmholtz_jet(ujet, false)};
  gamma_tree<SpectralVectorField>(ctx, roots, max_order - 2, 2, [&](const GammaIndex& a, const std::vector<VectorJet>& J) {
    const double s = detail::second_derivative_norms(J[0], w1, nullptr) + detail::second_derivative_norms(J[1], w2, nullptr);
    for (int k = int(a.size()) + 2; k <= max_order; ++k) out[k] += s;
  });
  return out;
}

// Scalar 𝓧_k with the single weight ⟨c1 t − r⟩.
inline OrderArray weighted_norm_X(const GammaContext& ctx, const ScalarJet& jet, const MaterialParams& mp,
                                  int max_order) {
  check_order(max_order, 2);
  OrderArray out = not_computed();
  for (int k = 2; k <= max_order; ++k) out[k] = 0.0;
  const RealScalarField w = detail::cone_weight(ctx, mp.c1, jet.t);
  gamma_tree<SpectralScalarField>(ctx, {jet}, max_order - 2, 2, [&](const GammaIndex& a, const std::vector<ScalarJet>& J) {
    const double s = detail::second_derivative_norms(J[0], w, nullptr);
    for (int k = int(a.size()) + 2; k <= max_order; ++k) out[k] += s;
  });
  return out;
}

// ---- probes ---------------------------------------------------------------------------------

// One row of a probe table: ratio = lhs / rhs is the empirical constant.
struct ProbeSample {
  std::string name;
  double t = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
  double ratio = 0.0;
  std::array<double, 3> where{};
  double excluded_radius = 0.0;
};

inline double safe_ratio(double lhs, double rhs) {
  if (lhs == 0.0) return 0.0;
  return rhs > 0.0 ? lhs / rhs : std::numeric_limits<double>::infinity();
}

struct ProbeOptions {
  int kappa = 4;               // energy order of the right-hand sides
  double exclude_cells = 2.0;  // skip r < exclude_cells * h, where ω and 1/r are singular
};

struct EnergyReport {
  double t = 0.0;
  int max_order = 0;
  OrderArray E = not_computed();
  OrderArray calE = not_computed();
  OrderArray X = not_computed();
  std::vector<ProbeSample> probes;
};

namespace detail {

struct ProbeAccumulator {
  const GammaContext& ctx;
  double cutoff;
  std::map<std::string, PointwiseMax> lhs;

  void update(const std::string& name, const RealScalarField& values) {
    PointwiseMax& m = lhs[name];
    const RealScalarField& r = ctx.r();
    for (std::size_t i = 0; i < values.size(); ++i)
      if (r[i] >= cutoff) m.update(i, values[i]);
  }

  ProbeSample sample(const std::string& name, double t, double rhs) const {
    ProbeSample p;
    p.name = name;
    p.t = t;
    auto it = lhs.find(name);
    if (it != lhs.end()) {
      p.lhs = it->second.value;
      p.where = grid_point(ctx.grid(), it->second.where);
    }
    p.rhs = rhs;
    p.ratio = safe_ratio(p.lhs, rhs);
    p.excluded_radius = cutoff;
    return p;
  }
};

}  // namespace detail

// Energies, weighted norms and (optionally) the pointwise decay probes of a
// state, all at order max_order. The probes are the weighted Sobolev bounds
//   gamma_value    ⟨r⟩^{1/2}|Γ^a u|                                 vs E^{1/2},        |a| <= κ−2
//   gamma_grad     ⟨r⟩|∂Γ^a u|                                      vs E^{1/2},        |a| <= κ−3
//   cone_grad      ⟨r⟩^{1/2}(⟨c1t−r⟩|∂Γ^a u_cf| + ⟨c2t−r⟩|∂Γ^a u_df|) vs E^{1/2} + 𝓧,  |a| <= κ−3
//   cone_grad_half ⟨r⟩(⟨c1t−r⟩^{1/2}|∂Γ^a u_cf| + ...)              vs E^{1/2} + 𝓧,    |a| <= κ−3
//   cone_hessian   ⟨r⟩(⟨c1t−r⟩|∂∇Γ^a u_cf| + ...)                   vs 𝓧,              |a| <= κ−4
// and, when a potential jet is given, their scalar counterparts for φ.
inline EnergyReport diagnose(const GammaContext& ctx, const VectorJet& ujet, const MaterialParams& mp, int max_order,
                             bool probes, const ProbeOptions& popt = {}, const ScalarJet* phijet = nullptr) {
  check_order(max_order);
  EnergyReport rep;
  rep.t = ujet.t;
  rep.max_order = max_order;
  if (int(ujet.size()) < max_order + 1)
    throw std::invalid_argument("diagnose: u jet needs " + std::to_string(max_order + 1) + " entries");
  rep.calE = calE_energies(SpectralPair(ujet.d[0], ujet.d[1]), mp, max_order);

  const int kappa = max_order;
  const double t = ujet.t;
  const GridSpec& g = ctx.grid();
  const RealScalarField& r = ctx.r();
  detail::ProbeAccumulator acc{ctx, popt.exclude_cells * g.spacing(), {}};

  // Tree over Γ^a u: energies and the unsplit probes.
  rep.E = not_computed();
  for (int k = 1; k <= max_order; ++k) rep.E[k] = 0.0;
  gamma_tree<SpectralVectorField>(ctx, {ujet}, max_order - 1, 2, [&](const GammaIndex& a, const std::vector<VectorJet>& J) {
    const double e = first_energy(J[0]);
    const int d = int(a.size());
    for (int k = d + 1; k <= max_order; ++k) rep.E[k] += e;
    if (!probes) return;
    if (d + 2 <= kappa) {
      RealScalarField v = detail::pointwise_sq(J[0].d[0]);
      for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::sqrt(japanese(r[i]) * v[i]);
      acc.update("gamma_value", v);
    }
    if (d + 3 <= kappa) {
      RealScalarField v = detail::spacetime_gradient_sq(J[0]);
      for (std::size_t i = 0; i < v.size(); ++i) v[i] = japanese(r[i]) * std::sqrt(v[i]);
      acc.update("gamma_grad", v);
    }
  });

  // Tree over Γ^a u_cf and Γ^a u_df: weighted norms and cone probes.
  if (max_order >= 2) {
    rep.X = not_computed();
    for (int k = 2; k <= max_order; ++k) rep.X[k] = 0.0;
    const RealScalarField w1 = detail::cone_weight(ctx, mp.c1, t), w2 = detail::cone_weight(ctx, mp.c2, t);
    std::vector<VectorJet> roots{helmholtz_jet(ujet, true), helmholtz_jet(ujet, false)};
    gamma_tree<SpectralVectorField>(ctx, roots, max_order - 2, 2, [&](const GammaIndex& a, const std::vector<VectorJet>& J) {
      const int d = int(a.size());
      const bool hess = probes && d + 4 <= kappa;
      RealScalarField h1, h2;
      if (hess) {
        h1 = RealScalarField(g);
        h2 = RealScalarField(g);
      }
      const double s = detail::second_derivative_norms(J[0], w1, hess ? &h1 : nullptr) +
                       detail::second_derivative_norms(J[1], w2, hess ? &h2 : nullptr);
      for (int k = d + 2; k <= max_order; ++k) rep.X[k] += s;
      if (!probes) return;
      if (d + 3 <= kappa) {
        RealScalarField g1 = detail::spacetime_gradient_sq(J[0]), g2 = detail::spacetime_gradient_sq(J[1]);
        RealScalarField full(g), half(g);
        for (std::size_t i = 0; i < g1.size(); ++i) {
          const double a1 = std::sqrt(g1[i]), a2 = std::sqrt(g2[i]), rr = japanese(r[i]);
          full[i] = std::sqrt(rr) * (w1[i] * a1 + w2[i] * a2);
          half[i] = rr * (std::sqrt(w1[i]) * a1 + std::sqrt(w2[i]) * a2);
        }
        acc.update("cone_grad", full);
        acc.update("cone_grad_half", half);
      }
      if (hess) {
        for (std::size_t i = 0; i < h1.size(); ++i)
          h1[i] = japanese(r[i]) * (w1[i] * std::sqrt(h1[i]) + w2[i] * std::sqrt(h2[i]));
        acc.update("cone_hessian", h1);
      }
    });
  }

  if (probes) {
    const double sqrtE = std::sqrt(rep.E[kappa]);
    const double X = kappa >= 2 ? rep.X[kappa] : 0.0;
    if (kappa >= 2) rep.probes.push_back(acc.sample("gamma_value", t, sqrtE));
    if (kappa >= 3) {
      rep.probes.push_back(acc.sample("gamma_grad", t, sqrtE));
      rep.probes.push_back(acc.sample("cone_grad", t, sqrtE + X));
      rep.probes.push_back(acc.sample("cone_grad_half", t, sqrtE + X));
    }
    if (kappa >= 4) rep.probes.push_back(acc.sample("cone_hessian", t, X));
  }

  if (probes && phijet) {
    if (int(phijet->size()) < max_order + 1) throw std::invalid_argument("diagnose: potential jet too short");
    OrderArray Ephi = not_computed(), Xphi = not_computed();
    for (int k = 1; k <= max_order; ++k) Ephi[k] = 0.0;
    for (int k = 2; k <= max_order; ++k) Xphi[k] = 0.0;
    const RealScalarField w1 = detail::cone_weight(ctx, mp.c1, t);
    gamma_tree<SpectralScalarField>(ctx, {*phijet}, max_order - 1, 2, [&](const GammaIndex& a, const std::vector<ScalarJet>& J) {
      const int d = int(a.size());
      const double e = first_energy(J[0]);
      for (int k = d + 1; k <= max_order; ++k) Ephi[k] += e;
      if (d + 2 > kappa) return;
      const bool hess = d + 4 <= kappa;
      RealScalarField h(g);
      const double s = detail::second_derivative_norms(J[0], w1, hess ? &h : nullptr);
      for (int k = d + 2; k <= max_order; ++k) Xphi[k] += s;
      if (d + 3 <= kappa) {
        RealScalarField v = detail::spacetime_gradient_sq(J[0]);
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = japanese(r[i]) * std::sqrt(w1[i] * v[i]);
        acc.update("potential_cone_grad_half", v);
      }
      if (hess) {
        for (std::size_t i = 0; i < h.size(); ++i) h[i] = japanese(r[i]) * w1[i] * std::sqrt(h[i]);
        acc.update("potential_cone_hessian", h);
      }
    });
    const double Xp = kappa >= 2 ? Xphi[kappa] : 0.0;
    if (kappa >= 3) rep.probes.push_back(acc.sample("potential_cone_grad_half", t, std::sqrt(Ephi[kappa]) + Xp));
    if (kappa >= 4) rep.probes.push_back(acc.sample("potential_cone_hessian", t, Xp));
  }
  return rep;
}

inline EnergyReport diagnose(const SimState& s, const MaterialParams& mp, int max_order, bool probes = false,
                             const ProbeOptions& popt = {}) {
  check_order(max_order);
  GammaContext ctx(s.grid());
  VectorJet J = time_jet(s, mp, max_order);
  std::optional<ScalarJet> phi;
  if (probes && s.phi)
    phi = potential_jet(SpectralScalarPair(forward_transform(s.phi->f), forward_transform(s.phi->ft)), J, mp, max_order);
  return diagnose(ctx, J, mp, max_order, probes, popt, phi ? &*phi : nullptr);
}

// Null-form decay: the largest pointwise value of
//   r max_{i<j,l,m} |Q_ij(u^l, u^m)| / (2 |∇u| Σ_{|a|<=1} |Ω̃^a u|)
// over r >= cutoff. Points whose denominator is below 1e-6 of its maximum are
// skipped: there both sides are round-off.
inline ProbeSample null_form_probe(const GammaContext& ctx, const SpectralVectorField& U, double t,
                                   const ProbeOptions& popt = {}) {
  const GridSpec& g = ctx.grid();
  GradientFields G = gradient_fields(U);
  VectorJet J = static_jet(U, 1, t);
  GammaContext::Children<SpectralVectorField> kids(ctx, J, 1);
  RealScalarField omega_sum = detail::pointwise_sq(U);
  for (std::size_t i = 0; i < omega_sum.size(); ++i) omega_sum[i] = std::sqrt(omega_sum[i]);
  for (Generator gen : {Generator::rot12, Generator::rot13, Generator::rot23}) {
    RealScalarField v = detail::pointwise_sq(kids.make(gen).d[0]);
    for (std::size_t i = 0; i < v.size(); ++i) omega_sum[i] += std::sqrt(v[i]);
  }
  const std::size_t m = g.size();
  RealScalarField qmax(g), denom(g);
  double dmax = 0.0;
  for (std::size_t p = 0; p < m; ++p) {
    double grad2 = 0.0;
    for (int c = 0; c < 3; ++c)
      for (int a = 0; a < 3; ++a) grad2 += G[c][a][p] * G[c][a][p];
    double q = 0.0;
    for (int i = 0; i < 3; ++i)
      for (int j = i + 1; j < 3; ++j)
        for (int l = 0; l < 3; ++l)
          for (int mm = 0; mm < 3; ++mm)
            q = std::max(q, std::abs(G[l][i][p] * G[mm][j][p] - G[l][j][p] * G[mm][i][p]));
    qmax[p] = q;
    denom[p] = 2.0 * std::sqrt(grad2) * omega_sum[p];
    dmax = std::max(dmax, denom[p]);
  }
  detail::ProbeAccumulator acc{ctx, popt.exclude_cells * g.spacing(), {}};
  RealScalarField ratio(g);
  for (std::size_t p = 0; p < m; ++p)
    ratio[p] = denom[p] > 1e-6 * dmax ? ctx.r()[p] * qmax[p] / denom[p] : 0.0;
  acc.update("null_form", ratio);
  ProbeSample s = acc.sample("null_form", t, 1.0);
  return s;
}

// max |∇f − ω∂_r f + (ω∧Ωf)/r| / max|∇f| over r >= cutoff, with Ω = x∧∇ and
// every operator applied spectrally.
inline double radial_angular_residual(const GammaContext& ctx, const SpectralScalarField& F, double cutoff) {
  const GridSpec& g = ctx.grid();
  auto grad = ctx.grid_gradient(F);
  RealScalarField dr = inverse_transform(ctx.radial_derivative(F));
  // Ω = (Ω_23, Ω_31, Ω_12)
  std::array<RealScalarField, 3> om{inverse_transform(ctx.rotation_from_gradient(grad, 1, 2)),
                                    inverse_transform(ctx.rotation_from_gradient(grad, 2, 0)),
                                    inverse_transform(ctx.rotation_from_gradient(grad, 0, 1))};
  double worst = 0.0, scale_ = 0.0;
  for (std::size_t p = 0; p < g.size(); ++p) {
    const double rr = ctx.r()[p];
    double gn = 0.0;
    for (int a = 0; a < 3; ++a) gn += grad[a][p] * grad[a][p];
    scale_ = std::max(scale_, std::sqrt(gn));
    if (rr < cutoff) continue;
    const double w[3] = {ctx.x(0)[p] / rr, ctx.x(1)[p] / rr, ctx.x(2)[p] / rr};
    const double o[3] = {om[0][p], om[1][p], om[2][p]};
    const double cross[3] = {w[1] * o[2] - w[2] * o[1], w[2] * o[0] - w[0] * o[2], w[0] * o[1] - w[1] * o[0]};
    double e = 0.0;
    for (int a = 0; a < 3; ++a) {
      const double d = grad[a][p] - (w[a] * dr[p] - cross[a] / rr);
      e += d * d;
    }
    worst = std::max(worst, std::sqrt(e));
  }
  return scale_ > 0.0 ? worst / scale_ : 0.0;
}

// ---- probe tables -------------------------------------------------------------------------------

// Appends rows to <dir>/probe_<name>.csv, writing the header on first use.
class ProbeLog {
 public:
  explicit ProbeLog(std::filesystem::path dir) : dir_(std::move(dir)) {}

  void append(const ProbeSample& s) {
    auto it = files_.find(s.name);
    if (it == files_.end()) {
      auto path = dir_ / ("probe_" + s.name + ".csv");
      std::ofstream f(path, std::ios::trunc);
      if (!f) throw std::runtime_error("cannot write " + path.string());
      f << "t,ratio,lhs,rhs,argmax_x,argmax_y,argmax_z,excluded_radius\n";
      it = files_.emplace(s.name, std::move(f)).first;
    }
    std::ofstream& f = it->second;
    f << std::setprecision(17) << s.t << ',' << s.ratio << ',' << s.lhs << ',' << s.rhs << ',' << s.where[0] << ','
      << s.where[1] << ',' << s.where[2] << ',' << s.excluded_radius << '\n';
    f.flush();
  }

 private:
  std::filesystem::path dir_;
  std::map<std::string, std::ofstream> files_;
};

}  // namespace elasto
