#pragma once

#include <cmath>
#include <numbers>
#include <utility>
#include <vector>

#include "fft.hpp"
#include "grid.hpp"

namespace elasto {

// Effective wavenumbers. The Nyquist index m = -n/2 has no partner +n/2 on the
// grid, so its derivative is not representable as a real field; we give it
// k = 0. Every operator in the library uses these same values, which keeps
// all spectral identities (curl grad = 0, Helmholtz, group law) exact and all
// spectra Hermitian.
struct Wavenumbers {
  std::vector<double> full;  // axes 2 and 3, index 0..n-1
  std::vector<double> half;  // axis 1, index 0..n/2

  explicit Wavenumbers(const GridSpec& g) : full(g.n), half(g.half()) {
    const double dk = 2.0 * std::numbers::pi / g.box_length;
    for (int j = 0; j < g.n; ++j) {
      int m = j < g.n / 2 ? j : j - g.n;
      full[j] = (j == g.n / 2) ? 0.0 : dk * m;
    }
    for (int j = 0; j < g.half(); ++j) half[j] = (j == g.n / 2) ? 0.0 : dk * j;
  }
};

// Visit every stored mode: fn(index, k1, k2, k3, weight). weight is the number
// of full-spectrum modes the stored coefficient represents (1 or 2).
template <typename Fn>
inline void for_each_mode(const GridSpec& g, Fn&& fn) {
  Wavenumbers w(g);
  const int n = g.n, nh = g.half();
#pragma omp parallel for schedule(static)
  for (int i3 = 0; i3 < n; ++i3)
    for (int i2 = 0; i2 < n; ++i2) {
      std::size_t base = std::size_t(nh) * (std::size_t(i2) + std::size_t(n) * i3);
      for (int m1 = 0; m1 < nh; ++m1) {
        double weight = (m1 == 0 || m1 == n / 2) ? 1.0 : 2.0;
        fn(base + m1, w.half[m1], w.full[i2], w.full[i3], weight);
      }
    }
}

// Integer mode numbers (m1, m2, m3) of a stored coefficient, m in [-n/2, n/2).
template <typename Fn>
inline void for_each_mode_index(const GridSpec& g, Fn&& fn) {
  const int n = g.n, nh = g.half();
  for (int i3 = 0; i3 < n; ++i3)
    for (int i2 = 0; i2 < n; ++i2) {
      std::size_t base = std::size_t(nh) * (std::size_t(i2) + std::size_t(n) * i3);
      int m3 = i3 < n / 2 ? i3 : i3 - n;
      int m2 = i2 < n / 2 ? i2 : i2 - n;
      for (int m1 = 0; m1 < nh; ++m1) fn(base + m1, m1 == n / 2 ? -n / 2 : m1, m2, m3);
    }
}

// ---- inner products via Parseval ---------------------------------------------

// Box inner product h^3 sum_x f g, evaluated from spectra.
inline double spectral_dot(const SpectralScalarField& F, const SpectralScalarField& G) {
  require_same_grid(F.grid, G.grid);
  const GridSpec& g = F.grid;
  const int n = g.n, nh = g.half();
  double s = 0.0;
  for (std::size_t row = 0; row < std::size_t(n) * n; ++row) {
    const cplx* a = &F.data[row * nh];
    const cplx* b = &G.data[row * nh];
    double inner = 0.0;
    for (int m1 = 1; m1 < n / 2; ++m1) inner += a[m1].real() * b[m1].real() + a[m1].imag() * b[m1].imag();
    s += 2.0 * inner;
    s += a[0].real() * b[0].real() + a[0].imag() * b[0].imag();
    s += a[n / 2].real() * b[n / 2].real() + a[n / 2].imag() * b[n / 2].imag();
  }
  return s * g.cell_volume() / double(g.size());
}

inline double spectral_dot(const SpectralVectorField& F, const SpectralVectorField& G) {
  return spectral_dot(F[0], G[0]) + spectral_dot(F[1], G[1]) + spectral_dot(F[2], G[2]);
}

inline double spectral_norm_sq(const SpectralScalarField& F) { return spectral_dot(F, F); }
inline double spectral_norm_sq(const SpectralVectorField& F) { return spectral_dot(F, F); }

// Sum over modes of weight(k) |F(k)|^2, scaled to the box inner product.
template <typename W>
inline double spectral_weighted_norm_sq(const SpectralScalarField& F, W&& weight_of_k) {
  const GridSpec& g = F.grid;
  std::vector<double> partial(g.n, 0.0);
  Wavenumbers w(g);
  const int n = g.n, nh = g.half();
#pragma omp parallel for schedule(static)
  for (int i3 = 0; i3 < n; ++i3) {
    double s = 0.0;
    for (int i2 = 0; i2 < n; ++i2) {
      std::size_t base = std::size_t(nh) * (std::size_t(i2) + std::size_t(n) * i3);
      for (int m1 = 0; m1 < nh; ++m1) {
        double mult = (m1 == 0 || m1 == n / 2) ? 1.0 : 2.0;
        s += mult * weight_of_k(w.half[m1], w.full[i2], w.full[i3]) * std::norm(F.data[base + m1]);
      }
    }
    partial[i3] = s;
  }
  double total = 0.0;
  for (double p : partial) total += p;
  return total * g.cell_volume() / double(g.size());
}

// ---- spectral multipliers ----------------------------------------------------

inline SpectralScalarField spectral_derivative(const SpectralScalarField& F, int axis) {
  SpectralScalarField out(F.grid);
  for_each_mode(F.grid, [&](std::size_t i, double k1, double k2, double k3, double) {
    double k = axis == 0 ? k1 : (axis == 1 ? k2 : k3);
    out.data[i] = cplx(0.0, k) * F.data[i];
  });
  return out;
}

inline SpectralScalarField spectral_second_derivative(const SpectralScalarField& F, int a, int b) {
  SpectralScalarField out(F.grid);
  for_each_mode(F.grid, [&](std::size_t i, double k1, double k2, double k3, double) {
    const double k[3] = {k1, k2, k3};
    out.data[i] = -k[a] * k[b] * F.data[i];
  });
  return out;
}

inline SpectralVectorField spectral_gradient(const SpectralScalarField& F) {
  SpectralVectorField out;
  out.grid = F.grid;
  for (int a = 0; a < 3; ++a) out[a] = spectral_derivative(F, a);
  return out;
}

inline SpectralScalarField spectral_divergence(const SpectralVectorField& U) {
  SpectralScalarField out(U.grid);
  for_each_mode(U.grid, [&](std::size_t i, double k1, double k2, double k3, double) {
    out.data[i] = cplx(0.0, 1.0) * (k1 * U[0].data[i] + k2 * U[1].data[i] + k3 * U[2].data[i]);
  });
  return out;
}

inline SpectralVectorField spectral_curl(const SpectralVectorField& U) {
  SpectralVectorField out(U.grid);
  const cplx I(0.0, 1.0);
  for_each_mode(U.grid, [&](std::size_t i, double k1, double k2, double k3, double) {
    const cplx a = U[0].data[i], b = U[1].data[i], c = U[2].data[i];
    out[0].data[i] = I * (k2 * c - k3 * b);
    out[1].data[i] = I * (k3 * a - k1 * c);
    out[2].data[i] = I * (k1 * b - k2 * a);
  });
  return out;
}

inline SpectralScalarField spectral_laplacian(const SpectralScalarField& F) {
  SpectralScalarField out(F.grid);
  for_each_mode(F.grid, [&](std::size_t i, double k1, double k2, double k3, double) {
    out.data[i] = -(k1 * k1 + k2 * k2 + k3 * k3) * F.data[i];
  });
  return out;
}

inline SpectralVectorField spectral_laplacian(const SpectralVectorField& U) {
  SpectralVectorField out;
  out.grid = U.grid;
  for (int c = 0; c < 3; ++c) out[c] = spectral_laplacian(U[c]);
  return out;
}

// Riesz transform R_j = d_j / sqrt(-Laplacian): multiplier i k_j/|k|, zero at k = 0.
inline SpectralScalarField spectral_riesz(const SpectralScalarField& F, int axis) {
  SpectralScalarField out(F.grid);
  for_each_mode(F.grid, [&](std::size_t i, double k1, double k2, double k3, double) {
    double kk = std::sqrt(k1 * k1 + k2 * k2 + k3 * k3);
    double k = axis == 0 ? k1 : (axis == 1 ? k2 : k3);
    out.data[i] = kk > 0.0 ? cplx(0.0, k / kk) * F.data[i] : cplx(0.0, 0.0);
  });
  return out;
}

// Modes with zero effective wavevector: the mean plus the pure-Nyquist modes.
// They belong to neither Helmholtz part and are carried separately.
inline SpectralVectorField spectral_zero_mode_part(const SpectralVectorField& U) {
  SpectralVectorField out(U.grid);
  for_each_mode(U.grid, [&](std::size_t i, double k1, double k2, double k3, double) {
    if (k1 == 0.0 && k2 == 0.0 && k3 == 0.0)
      for (int c = 0; c < 3; ++c) out[c].data[i] = U[c].data[i];
  });
  return out;
}

// u_cf = -R(R.u) = khat (khat . u), u_df = R^(R^u) = u - u_cf - zero-mode part.
inline std::pair<SpectralVectorField, SpectralVectorField> spectral_helmholtz(const SpectralVectorField& U) {
  SpectralVectorField cf(U.grid), df(U.grid);
  for_each_mode(U.grid, [&](std::size_t i, double k1, double k2, double k3, double) {
    double kk2 = k1 * k1 + k2 * k2 + k3 * k3;
    if (kk2 == 0.0) return;
    const double k[3] = {k1, k2, k3};
    cplx proj = (k1 * U[0].data[i] + k2 * U[1].data[i] + k3 * U[2].data[i]) / kk2;
    for (int c = 0; c < 3; ++c) {
      cf[c].data[i] = k[c] * proj;
      df[c].data[i] = U[c].data[i] - cf[c].data[i];
    }
  });
  return {std::move(cf), std::move(df)};
}

inline SpectralVectorField spectral_curl_free_part(const SpectralVectorField& U) { return spectral_helmholtz(U).first; }

// ---- physical-space wrappers ---------------------------------------------------

inline RealVectorField gradient(const RealScalarField& f) { return inverse_transform(spectral_gradient(forward_transform(f))); }

inline RealScalarField divergence(const RealVectorField& u) {
  return inverse_transform(spectral_divergence(forward_transform(u)));
}

inline RealVectorField curl(const RealVectorField& u) { return inverse_transform(spectral_curl(forward_transform(u))); }

inline RealScalarField laplacian(const RealScalarField& f) {
  return inverse_transform(spectral_laplacian(forward_transform(f)));
}

inline RealVectorField laplacian(const RealVectorField& u) {
  return inverse_transform(spectral_laplacian(forward_transform(u)));
}

inline RealScalarField derivative(const RealScalarField& f, int axis) {
  return inverse_transform(spectral_derivative(forward_transform(f), axis));
}

inline RealScalarField riesz(int axis, const RealScalarField& f) {
  return inverse_transform(spectral_riesz(forward_transform(f), axis));
}

struct HelmholtzParts {
  RealVectorField curl_free;
  RealVectorField div_free;
};

inline HelmholtzParts helmholtz(const RealVectorField& u) {
  auto [cf, df] = spectral_helmholtz(forward_transform(u));
  return {inverse_transform(cf), inverse_transform(df)};
}

// Remove everything a periodic derivative cannot see (mean and pure-Nyquist modes).
inline RealVectorField remove_zero_modes(const RealVectorField& u) {
  SpectralVectorField U = forward_transform(u);
  SpectralVectorField Z = spectral_zero_mode_part(U);
  axpy(-1.0, Z, U);
  return inverse_transform(U);
}

// Spectral band-limiting: drop Nyquist planes so the sampled field is exactly
// representable by the derivative operators.
inline RealScalarField band_limit(const RealScalarField& f) {
  SpectralScalarField F = forward_transform(f);
  const int n = f.grid.n;
  for_each_mode_index(f.grid, [&](std::size_t i, int m1, int m2, int m3) {
    if (m1 == -n / 2 || m2 == -n / 2 || m3 == -n / 2) F.data[i] = 0.0;
  });
  return inverse_transform(F);
}

inline RealVectorField band_limit(const RealVectorField& u) {
  RealVectorField out;
  out.grid = u.grid;
  for (int c = 0; c < 3; ++c) out[c] = band_limit(u[c]);
  return out;
}

}  // namespace elasto
