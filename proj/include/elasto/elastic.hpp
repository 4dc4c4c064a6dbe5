#pragma once

#include <array>
#include <stdexcept>
#include <utility>

#include "fft.hpp"
#include "grid.hpp"
#include "material.hpp"
#include "spectral.hpp"

namespace elasto {

// ---- linear operator -----------------------------------------------------------

// A u = c2^2 Lap u + (c1^2 - c2^2) grad div u, so that L u = u_tt - A u.
inline SpectralVectorField spectral_apply_A(const SpectralVectorField& U, const MaterialParams& mp) {
  SpectralVectorField out(U.grid);
  const double a = mp.c2 * mp.c2, b = mp.c1 * mp.c1 - mp.c2 * mp.c2;
  for_each_mode(U.grid, [&](std::size_t i, double k1, double k2, double k3, double) {
    const double k[3] = {k1, k2, k3};
    const double kk = k1 * k1 + k2 * k2 + k3 * k3;
    const cplx kdotu = k1 * U[0].data[i] + k2 * U[1].data[i] + k3 * U[2].data[i];
    for (int c = 0; c < 3; ++c) out[c].data[i] = -a * kk * U[c].data[i] - b * k[c] * kdotu;
  });
  return out;
}

inline RealVectorField apply_A(const RealVectorField& u, const MaterialParams& mp) {
  return inverse_transform(spectral_apply_A(forward_transform(u), mp));
}

// ---- null forms and the cubic stored energy -------------------------------------

// Q_ij(f, g) = d_i f d_j g - d_j f d_i g (axes are 0-based).
inline RealScalarField null_form(int i, int j, const RealScalarField& f, const RealScalarField& g) {
  if (i < 0 || i > 2 || j < 0 || j > 2) throw std::invalid_argument("null_form: axis out of range");
  require_same_grid(f.grid, g.grid);
  SpectralScalarField F = forward_transform(f), G = forward_transform(g);
  RealScalarField fi = inverse_transform(spectral_derivative(F, i));
  RealScalarField fj = inverse_transform(spectral_derivative(F, j));
  RealScalarField gi = inverse_transform(spectral_derivative(G, i));
  RealScalarField gj = inverse_transform(spectral_derivative(G, j));
  RealScalarField out(f.grid);
  for (std::size_t p = 0; p < out.size(); ++p) out[p] = fi[p] * gj[p] - fj[p] * gi[p];
  return out;
}

// Displacement gradient on the grid: grad[c][a] = d_a u^c.
using GradientFields = std::array<std::array<RealScalarField, 3>, 3>;

inline GradientFields gradient_fields(const SpectralVectorField& U) {
  GradientFields g;
  for (int c = 0; c < 3; ++c)
    for (int a = 0; a < 3; ++a) g[c][a] = inverse_transform(spectral_derivative(U[c], a));
  return g;
}

// Symmetric second derivatives: hess[c][sym(a,b)] = d_a d_b u^c.
inline int sym_index(int a, int b) {
  static constexpr int table[3][3] = {{0, 1, 2}, {1, 3, 4}, {2, 4, 5}};
  return table[a][b];
}
using HessianFields = std::array<std::array<RealScalarField, 6>, 3>;

inline HessianFields hessian_fields(const SpectralVectorField& U) {
  HessianFields h;
  for (int c = 0; c < 3; ++c)
    for (int a = 0; a < 3; ++a)
      for (int b = a; b < 3; ++b) h[c][sym_index(a, b)] = inverse_transform(spectral_second_derivative(U[c], a, b));
  return h;
}

// Pointwise l3 from G[c][a] = d_a u^c, with the contractions
//   sum_ij Q_ij(u^i,u^j)            = (div)^2 - G^i_j G^j_i
//   sum_ijk d_k u^j Q_ij(u^i,u^k)   = sum_jk G^j_k (div G^k_j - G^i_j G^k_i)
//   sum_ijk d_k u^j Q_ik(u^i,u^j)   = div |G|^2 - G^j_k G^i_k G^j_i
inline double l3_density(const double G[3][3], const MaterialParams& mp) {
  const double div = G[0][0] + G[1][1] + G[2][2];
  const double w1 = G[2][1] - G[1][2], w2 = G[0][2] - G[2][0], w3 = G[1][0] - G[0][1];
  double trGG = 0.0, frob = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      trGG += G[i][j] * G[j][i];
      frob += G[i][j] * G[i][j];
    }
  double t4 = 0.0, t5 = 0.0;
  for (int j = 0; j < 3; ++j)
    for (int k = 0; k < 3; ++k) {
      double s4 = div * G[k][j], s5 = 0.0;
      for (int i = 0; i < 3; ++i) {
        s4 -= G[i][j] * G[k][i];
        s5 += G[i][k] * G[j][i];
      }
      t4 += G[j][k] * s4;
      t5 += G[j][k] * s5;
    }
  return mp.d1() * div * div * div + mp.d2() * div * (w1 * w1 + w2 * w2 + w3 * w3) + mp.d3() * div * (div * div - trGG) +
         mp.d4() * t4 + mp.d5() * (div * frob - t5);
}

inline double cubic_energy_l3(const RealVectorField& u, const MaterialParams& mp) {
  GradientFields g = gradient_fields(forward_transform(u));
  double s = 0.0;
  for (std::size_t p = 0; p < u.grid.size(); ++p) {
    double G[3][3];
    for (int c = 0; c < 3; ++c)
      for (int a = 0; a < 3; ++a) G[c][a] = g[c][a][p];
    s += l3_density(G, mp);
  }
  return s * u.grid.cell_volume();
}

// ---- dealiasing ------------------------------------------------------------------

// 2/3 rule: keep modes with 3|m_a| < n on every axis. Products of two kept
// fields alias only into the discarded band.
inline void dealias(SpectralScalarField& F) {
  const int n = F.grid.n;
  for_each_mode_index(F.grid, [&](std::size_t i, int m1, int m2, int m3) {
    if (3 * std::abs(m1) >= n || 3 * std::abs(m2) >= n || 3 * std::abs(m3) >= n) F.data[i] = 0.0;
  });
}
inline void dealias(SpectralVectorField& U) {
  for (int c = 0; c < 3; ++c) dealias(U[c]);
}
template <typename F>
inline F dealiased(F f) {
  dealias(f);
  return f;
}

// ---- the quadratic nonlinearity ----------------------------------------------------

// Spectra of the four pieces of N(u, v), each already dealiased, plus the
// dealiased spectrum of (curl u).(curl v), which sources the scalar potential.
struct NonlinearTerms {
  SpectralVectorField n0, n1, n2, n3;
  SpectralScalarField curl_product;

  SpectralVectorField total() const {
    SpectralVectorField s = n0;
    axpy(1.0, n1, s);
    axpy(1.0, n2, s);
    axpy(1.0, n3, s);
    return s;
  }
  // G = N2 + N3, the source of the w-split.
  SpectralVectorField source_w() const {
    SpectralVectorField s = n2;
    axpy(1.0, n3, s);
    return s;
  }
};

namespace detail {

struct FirstDerivatives {
  GradientFields g;
  RealScalarField div;
  std::array<RealScalarField, 3> curl;
};

inline FirstDerivatives first_derivatives(const SpectralVectorField& U) {
  FirstDerivatives d;
  d.g = gradient_fields(U);
  const GridSpec& gr = U.grid;
  d.div = RealScalarField(gr);
  for (int c = 0; c < 3; ++c) d.curl[c] = RealScalarField(gr);
  for (std::size_t p = 0; p < gr.size(); ++p) {
    d.div[p] = d.g[0][0][p] + d.g[1][1][p] + d.g[2][2][p];
    d.curl[0][p] = d.g[2][1][p] - d.g[1][2][p];
    d.curl[1][p] = d.g[0][2][p] - d.g[2][0][p];
    d.curl[2][p] = d.g[1][0][p] - d.g[0][1][p];
  }
  return d;
}

// One half of N3: T(u, v) with second derivatives on u and first on v, so
// that N3(u, v) = T(u, v) + T(v, u). With H^c_ab = d_a d_b u^c, G^c_a = d_a v^c,
// Dd_i = d_i div u, Lap^c = Lap u^c, the five contracted null-form sums are
//   A_i = sum_j Q_ij(div u, v^j)       = Dd_i div v - Dd_j G^j_i
//   B_i = sum_jk Q_jk(d_i u^k, v^j)    = H^k_ij G^j_k - Dd_i div v
//   C_i = sum_jk Q_ij(d_j u^k, v^k)    = H^k_ij G^k_j - Lap^k G^k_i
//   D_i = sum_jk Q_jk(d_j u^i, v^k)    = Lap^i div v - H^i_jk G^k_j
//   E_i = sum_jk Q_jk(d_j u^k, v^i)    = Lap^k G^i_k - Dd_j G^i_j
// and T_i = (d3 + d4/2)(A - B)_i + (d5/2)(C + 2D)_i - (d5/2) E_i.
inline void accumulate_T(const HessianFields& H, const GradientFields& Gv, const MaterialParams& mp,
                         std::array<RealScalarField, 3>& out) {
  const double s1 = mp.d3() + 0.5 * mp.d4(), s2 = 0.5 * mp.d5();
  const std::size_t m = out[0].size();
#pragma omp parallel for schedule(static)
  for (std::size_t p = 0; p < m; ++p) {
    double h[3][3][3], G[3][3];
    for (int c = 0; c < 3; ++c) {
      for (int a = 0; a < 3; ++a) {
        G[c][a] = Gv[c][a][p];
        for (int b = a; b < 3; ++b) h[c][a][b] = h[c][b][a] = H[c][sym_index(a, b)][p];
      }
    }
    double Dd[3], lap[3];
    const double divv = G[0][0] + G[1][1] + G[2][2];
    for (int i = 0; i < 3; ++i) {
      Dd[i] = h[0][i][0] + h[1][i][1] + h[2][i][2];
      lap[i] = h[i][0][0] + h[i][1][1] + h[i][2][2];
    }
    for (int i = 0; i < 3; ++i) {
      double A = Dd[i] * divv, B = -Dd[i] * divv, C = 0.0, D = lap[i] * divv, E = 0.0;
      for (int j = 0; j < 3; ++j) {
        A -= Dd[j] * G[j][i];
        C -= lap[j] * G[j][i];
        E += lap[j] * G[i][j] - Dd[j] * G[i][j];
        for (int k = 0; k < 3; ++k) {
          B += h[k][i][j] * G[j][k];
          C += h[k][i][j] * G[k][j];
          D -= h[i][j][k] * G[k][j];
        }
      }
      out[i][p] += s1 * (A - B) + s2 * (C + 2.0 * D) - s2 * E;
    }
  }
}

inline SpectralScalarField forward_dealiased(const RealScalarField& f) {
  SpectralScalarField F = forward_transform(f);
  dealias(F);
  return F;
}

}  // namespace detail

// Evaluate N(u, v) = N0 + N1 + N2 + N3 from spectra. V == nullptr means v = u,
// which halves the work. Inputs are dealiased first; each product is formed on
// the grid, transformed and dealiased again before the outer derivative.
inline NonlinearTerms nonlinear_terms(const SpectralVectorField& Uin, const SpectralVectorField* Vin,
                                      const MaterialParams& mp) {
  const GridSpec& gr = Uin.grid;
  NonlinearTerms out{SpectralVectorField(gr), SpectralVectorField(gr), SpectralVectorField(gr), SpectralVectorField(gr),
                     SpectralScalarField(gr)};
  const bool same = (Vin == nullptr);
  SpectralVectorField U = dealiased(Uin);
  SpectralVectorField V = same ? SpectralVectorField() : dealiased(*Vin);
  const SpectralVectorField& Vr = same ? U : V;

  const bool need_first = mp.d1() != 0.0 || mp.d2() != 0.0 || mp.d3() != 0.0 || mp.d4() != 0.0 || mp.d5() != 0.0;
  if (!need_first) return out;

  detail::FirstDerivatives du = detail::first_derivatives(U);
  detail::FirstDerivatives dv_storage;
  if (!same) dv_storage = detail::first_derivatives(Vr);
  const detail::FirstDerivatives& dv = same ? du : dv_storage;
  const std::size_t m = gr.size();

  if (mp.d1() != 0.0) {
    RealScalarField prod(gr);
    for (std::size_t p = 0; p < m; ++p) prod[p] = du.div[p] * dv.div[p];
    SpectralScalarField P = detail::forward_dealiased(prod);
    out.n0 = spectral_gradient(P);
    scale(out.n0, 3.0 * mp.d1());
  }

  if (mp.d2() != 0.0) {
    RealScalarField prod(gr);
    for (std::size_t p = 0; p < m; ++p)
      prod[p] = du.curl[0][p] * dv.curl[0][p] + du.curl[1][p] * dv.curl[1][p] + du.curl[2][p] * dv.curl[2][p];
    out.curl_product = detail::forward_dealiased(prod);
    out.n1 = spectral_gradient(out.curl_product);
    scale(out.n1, mp.d2());

    RealVectorField q(gr);
    for (int c = 0; c < 3; ++c)
      for (std::size_t p = 0; p < m; ++p) q[c][p] = du.div[p] * dv.curl[c][p] + dv.div[p] * du.curl[c][p];
    SpectralVectorField Q(gr);
    for (int c = 0; c < 3; ++c) Q[c] = detail::forward_dealiased(q[c]);
    out.n2 = spectral_curl(Q);
    scale(out.n2, -mp.d2());
  }

  if (mp.d3() != 0.0 || mp.d4() != 0.0 || mp.d5() != 0.0) {
    std::array<RealScalarField, 3> t{RealScalarField(gr), RealScalarField(gr), RealScalarField(gr)};
    {
      HessianFields hu = hessian_fields(U);
      detail::accumulate_T(hu, dv.g, mp, t);
    }
    if (same) {
      for (int c = 0; c < 3; ++c) scale(t[c], 2.0);
    } else {
      HessianFields hv = hessian_fields(Vr);
      detail::accumulate_T(hv, du.g, mp, t);
    }
    for (int c = 0; c < 3; ++c) out.n3[c] = detail::forward_dealiased(t[c]);
  }
  return out;
}

inline SpectralVectorField spectral_nonlinearity(const SpectralVectorField& U, const SpectralVectorField* V,
                                                 const MaterialParams& mp) {
  return nonlinear_terms(U, V, mp).total();
}

inline RealVectorField nonlinearity(const RealVectorField& u, const RealVectorField& v, const MaterialParams& mp) {
  require_same_grid(u.grid, v.grid);
  SpectralVectorField U = forward_transform(u), V = forward_transform(v);
  return inverse_transform(spectral_nonlinearity(U, &V, mp));
}

// Individual pieces, mainly for tests and reports.
enum class NonlinearPiece { N0, N1, N2, N3 };

inline RealVectorField nonlinearity_piece(NonlinearPiece which, const RealVectorField& u, const RealVectorField& v,
                                          const MaterialParams& mp) {
  SpectralVectorField U = forward_transform(u), V = forward_transform(v);
  NonlinearTerms t = nonlinear_terms(U, &V, mp);
  switch (which) {
    case NonlinearPiece::N0: return inverse_transform(t.n0);
    case NonlinearPiece::N1: return inverse_transform(t.n1);
    case NonlinearPiece::N2: return inverse_transform(t.n2);
    case NonlinearPiece::N3: return inverse_transform(t.n3);
  }
  throw std::logic_error("unreachable");
}

struct SplitSources {
  RealVectorField G;  // N2 + N3, drives w
  RealVectorField F;  // N1 = d2 grad |curl u|^2, drives v
};

inline SplitSources decompose_sources(const RealVectorField& u, const MaterialParams& mp) {
  if (!mp.null_condition_holds())
    throw std::invalid_argument("decompose_sources: d1 != 0, N0 belongs to neither the w nor the v equation");
  NonlinearTerms t = nonlinear_terms(forward_transform(u), nullptr, mp);
  return {inverse_transform(t.source_w()), inverse_transform(t.n1)};
}

}  // namespace elasto
