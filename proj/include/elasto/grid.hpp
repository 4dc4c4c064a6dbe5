#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdlib>
#include <new>
#include <stdexcept>
#include <string>
#include <vector>

namespace elasto {

using cplx = std::complex<double>;

// 64-byte aligned storage so FFTW can use its SIMD kernels on every field.
template <typename T>
struct AlignedAllocator {
  using value_type = T;
  AlignedAllocator() noexcept = default;
  template <typename U>
  AlignedAllocator(const AlignedAllocator<U>&) noexcept {}

  T* allocate(std::size_t count) {
    std::size_t bytes = ((count * sizeof(T) + 63) / 64) * 64;
    void* p = std::aligned_alloc(64, bytes == 0 ? 64 : bytes);
    if (!p) throw std::bad_alloc();
    return static_cast<T*>(p);
  }
  void deallocate(T* p, std::size_t) noexcept { std::free(p); }

  template <typename U>
  bool operator==(const AlignedAllocator<U>&) const noexcept { return true; }
};

using RealBuffer = std::vector<double, AlignedAllocator<double>>;
using ComplexBuffer = std::vector<cplx, AlignedAllocator<cplx>>;

// Periodic cube [-L/2, L/2)^3 sampled at n points per axis. Sample (i1, i2, i3)
// sits at x_a = -L/2 + i_a h, so the box center is an exact grid point.
struct GridSpec {
  int n = 32;
  double box_length = 1.0;

  double spacing() const { return box_length / n; }
  std::size_t size() const { return std::size_t(n) * n * n; }
  // r2c layout: axis 1 is halved and fastest.
  int half() const { return n / 2 + 1; }
  std::size_t spectral_size() const { return std::size_t(half()) * n * n; }
  double cell_volume() const {
    double h = spacing();
    return h * h * h;
  }
  double volume() const { return box_length * box_length * box_length; }
  double coord(int i) const { return -0.5 * box_length + i * spacing(); }
  std::size_t index(int i1, int i2, int i3) const {
    return std::size_t(i1) + std::size_t(n) * (std::size_t(i2) + std::size_t(n) * i3);
  }

  void validate() const {
    if (n < 8 || (n & (n - 1)) != 0)
      throw std::invalid_argument("grid: n must be a power of two >= 8, got " + std::to_string(n));
    if (!(box_length > 0.0) || !std::isfinite(box_length))
      throw std::invalid_argument("grid: box length must be positive");
  }

  bool operator==(const GridSpec& o) const { return n == o.n && box_length == o.box_length; }
};

inline void require_same_grid(const GridSpec& a, const GridSpec& b) {
  if (!(a == b)) throw std::invalid_argument("grid mismatch between operands");
}

struct RealScalarField {
  GridSpec grid;
  RealBuffer data;

  RealScalarField() = default;
  explicit RealScalarField(const GridSpec& g) : grid(g), data(g.size(), 0.0) {}

  double& operator[](std::size_t i) { return data[i]; }
  double operator[](std::size_t i) const { return data[i]; }
  std::size_t size() const { return data.size(); }
};

struct RealVectorField {
  GridSpec grid;
  std::array<RealScalarField, 3> comp;

  RealVectorField() = default;
  explicit RealVectorField(const GridSpec& g) : grid(g), comp{RealScalarField(g), RealScalarField(g), RealScalarField(g)} {}

  RealScalarField& operator[](int c) { return comp[c]; }
  const RealScalarField& operator[](int c) const { return comp[c]; }
};

struct SpectralScalarField {
  GridSpec grid;
  ComplexBuffer data;

  SpectralScalarField() = default;
  explicit SpectralScalarField(const GridSpec& g) : grid(g), data(g.spectral_size(), cplx(0.0, 0.0)) {}

  cplx& operator[](std::size_t i) { return data[i]; }
  const cplx& operator[](std::size_t i) const { return data[i]; }
  std::size_t size() const { return data.size(); }
};

struct SpectralVectorField {
  GridSpec grid;
  std::array<SpectralScalarField, 3> comp;

  SpectralVectorField() = default;
  explicit SpectralVectorField(const GridSpec& g)
      : grid(g), comp{SpectralScalarField(g), SpectralScalarField(g), SpectralScalarField(g)} {}

  SpectralScalarField& operator[](int c) { return comp[c]; }
  const SpectralScalarField& operator[](int c) const { return comp[c]; }
};

// ---- elementwise arithmetic -------------------------------------------------

template <typename F>
inline void axpy(double a, const F& x, F& y) {
  require_same_grid(x.grid, y.grid);
  const std::size_t m = y.data.size();
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < m; ++i) y.data[i] += a * x.data[i];
}

inline void axpy(double a, const RealVectorField& x, RealVectorField& y) {
  for (int c = 0; c < 3; ++c) axpy(a, x[c], y[c]);
}
inline void axpy(double a, const SpectralVectorField& x, SpectralVectorField& y) {
  for (int c = 0; c < 3; ++c) axpy(a, x[c], y[c]);
}

template <typename F>
inline void scale(F& x, double a) {
  for (auto& v : x.data) v *= a;
}
inline void scale(RealVectorField& x, double a) {
  for (int c = 0; c < 3; ++c) scale(x[c], a);
}
inline void scale(SpectralVectorField& x, double a) {
  for (int c = 0; c < 3; ++c) scale(x[c], a);
}

template <typename F>
inline F add(const F& a, const F& b, double sb = 1.0) {
  F out = a;
  axpy(sb, b, out);
  return out;
}

template <typename F>
inline F scaled(const F& a, double s) {
  F out = a;
  scale(out, s);
  return out;
}

// ---- norms on the box (grid sum times h^3) ----------------------------------

inline double l2_norm_sq(const RealScalarField& f) {
  double s = 0.0;
  for (double v : f.data) s += v * v;
  return s * f.grid.cell_volume();
}
inline double l2_norm_sq(const RealVectorField& f) {
  return l2_norm_sq(f[0]) + l2_norm_sq(f[1]) + l2_norm_sq(f[2]);
}
template <typename F>
inline double l2_norm(const F& f) {
  return std::sqrt(l2_norm_sq(f));
}

inline double max_abs(const RealScalarField& f) {
  double m = 0.0;
  for (double v : f.data) m = std::max(m, std::abs(v));
  return m;
}
inline double max_abs(const RealVectorField& f) {
  return std::max({max_abs(f[0]), max_abs(f[1]), max_abs(f[2])});
}

inline bool all_finite(const RealScalarField& f) {
  for (double v : f.data)
    if (!std::isfinite(v)) return false;
  return true;
}
inline bool all_finite(const RealVectorField& f) { return all_finite(f[0]) && all_finite(f[1]) && all_finite(f[2]); }
inline bool all_finite(const SpectralScalarField& f) {
  for (const cplx& v : f.data)
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
  return true;
}
inline bool all_finite(const SpectralVectorField& f) {
  return all_finite(f[0]) && all_finite(f[1]) && all_finite(f[2]);
}

inline double mean(const RealScalarField& f) {
  double s = 0.0;
  for (double v : f.data) s += v;
  return s / double(f.size());
}

// Fill a scalar field from a function of the physical coordinates.
template <typename Fn>
inline RealScalarField sample(const GridSpec& g, Fn&& fn) {
  RealScalarField f(g);
  for (int i3 = 0; i3 < g.n; ++i3)
    for (int i2 = 0; i2 < g.n; ++i2)
      for (int i1 = 0; i1 < g.n; ++i1) f[g.index(i1, i2, i3)] = fn(g.coord(i1), g.coord(i2), g.coord(i3));
  return f;
}

// Radius |x| of every grid point.
inline RealScalarField radius_field(const GridSpec& g) {
  return sample(g, [](double x, double y, double z) { return std::sqrt(x * x + y * y + z * z); });
}

inline RealScalarField coordinate_field(const GridSpec& g, int axis) {
  return sample(g, [axis](double x, double y, double z) { return axis == 0 ? x : (axis == 1 ? y : z); });
}

}  // namespace elasto
