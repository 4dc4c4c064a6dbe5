#pragma once

#include <fftw3.h>

#include <cstring>
#include <map>
#include <memory>
#include <mutex>

#include "grid.hpp"

namespace elasto {

// Transform pair normalization: forward is the unnormalized DFT
//   F(m) = sum_x f(x) exp(-i k(m).x_index),
// inverse divides by n^3, so inverse(forward(f)) == f. Parseval then reads
//   sum_x |f|^2 = n^{-3} sum_m |F(m)|^2   (sum over the full spectrum).
// Axis 1 is stored halved (r2c), so modes with 0 < m1 < n/2 stand for two.
namespace detail {

struct PlanPair {
  fftw_plan forward = nullptr;
  fftw_plan inverse = nullptr;
  ~PlanPair() {
    if (forward) fftw_destroy_plan(forward);
    if (inverse) fftw_destroy_plan(inverse);
  }
};

inline std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

// FFTW's planner is not reentrant; plans are built once per grid size under a
// lock and executed lock-free afterwards. FFTW_ESTIMATE keeps plan choice, and
// therefore rounding, independent of machine timing.
inline const PlanPair& plans_for(int n) {
  static std::map<int, std::unique_ptr<PlanPair>> cache;
  std::lock_guard<std::mutex> lock(planner_mutex());
  auto it = cache.find(n);
  if (it != cache.end()) return *it->second;
  GridSpec g{n, 1.0};
  RealBuffer r(g.size());
  ComplexBuffer c(g.spectral_size());
  auto p = std::make_unique<PlanPair>();
  auto* cp = reinterpret_cast<fftw_complex*>(c.data());
  p->forward = fftw_plan_dft_r2c_3d(n, n, n, r.data(), cp, FFTW_ESTIMATE);
  p->inverse = fftw_plan_dft_c2r_3d(n, n, n, cp, r.data(), FFTW_ESTIMATE);
  auto& ref = *p;
  cache.emplace(n, std::move(p));
  return ref;
}

}  // namespace detail

inline SpectralScalarField forward_transform(const RealScalarField& f) {
  SpectralScalarField out(f.grid);
  const auto& p = detail::plans_for(f.grid.n);
  // r2c with FFTW_ESTIMATE preserves its input, but the API is non-const.
  fftw_execute_dft_r2c(p.forward, const_cast<double*>(f.data.data()), reinterpret_cast<fftw_complex*>(out.data.data()));
  return out;
}

inline RealScalarField inverse_transform(const SpectralScalarField& F) {
  RealScalarField out(F.grid);
  const auto& p = detail::plans_for(F.grid.n);
  ComplexBuffer scratch(F.data);  // c2r destroys its input
  fftw_execute_dft_c2r(p.inverse, reinterpret_cast<fftw_complex*>(scratch.data()), out.data.data());
  const double s = 1.0 / double(F.grid.size());
  for (double& v : out.data) v *= s;
  return out;
}

inline SpectralVectorField forward_transform(const RealVectorField& f) {
  SpectralVectorField out;
  out.grid = f.grid;
  for (int c = 0; c < 3; ++c) out[c] = forward_transform(f[c]);
  return out;
}

inline RealVectorField inverse_transform(const SpectralVectorField& F) {
  RealVectorField out;
  out.grid = F.grid;
  for (int c = 0; c < 3; ++c) out[c] = inverse_transform(F[c]);
  return out;
}

}  // namespace elasto
