#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

#include "spectral.hpp"

namespace elasto {

enum class DataKind { cf_bump, df_bump, mixed, file };

inline const char* data_kind_name(DataKind k) {
  switch (k) {
    case DataKind::cf_bump: return "cf_bump";
    case DataKind::df_bump: return "df_bump";
    case DataKind::mixed: return "mixed";
    case DataKind::file: return "file";
  }
  return "?";
}

inline DataKind parse_data_kind(const std::string& s) {
  for (DataKind k : {DataKind::cf_bump, DataKind::df_bump, DataKind::mixed, DataKind::file})
    if (s == data_kind_name(k)) return k;
  throw std::invalid_argument("unknown initial data kind '" + s + "' (expected cf_bump, df_bump, mixed or file)");
}

// Bump data centered at the origin, g = exp(-|x|²/width²):
//   cf_bump  u0 = u1 = ε ∇g
//   df_bump  u0 = u1 = ε ∇∧(g e3)
//   mixed    the sum of both.
// Derivatives are spectral, so every field has zero mean.
inline std::pair<RealVectorField, RealVectorField> bump_data(const GridSpec& g, DataKind kind, double eps,
                                                             double width) {
  if (kind == DataKind::file) throw std::invalid_argument("bump_data: file data has no closed form");
  if (!(width > 0.0)) throw std::invalid_argument("bump_data: width must be positive");
  const RealScalarField bump = sample(g, [&](double x, double y, double z) {
    return std::exp(-(x * x + y * y + z * z) / (width * width));
  });
  RealVectorField u(g);
  if (kind == DataKind::cf_bump || kind == DataKind::mixed) axpy(eps, gradient(bump), u);
  if (kind == DataKind::df_bump || kind == DataKind::mixed) {
    RealVectorField a(g);
    a[2] = bump;
    axpy(eps, curl(a), u);
  }
  return {u, u};
}

}  // namespace elasto
