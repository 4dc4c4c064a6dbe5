#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

namespace elasto {

// Isotropic hyperelastic material truncated at cubic order. c1 and c2 are the
// pressure and shear speeds; d[0..4] are the cubic coefficients d1..d5.
struct MaterialParams {
  double c1 = std::sqrt(3.0);
  double c2 = 1.0;
  std::array<double, 5> d{0.0, 0.0, 0.0, 0.0, 0.0};

  double d1() const { return d[0]; }
  double d2() const { return d[1]; }
  double d3() const { return d[2]; }
  double d4() const { return d[3]; }
  double d5() const { return d[4]; }

  bool null_condition_holds() const { return d[0] == 0.0; }
  bool is_linear() const { return d[0] == 0.0 && d[1] == 0.0 && d[2] == 0.0 && d[3] == 0.0 && d[4] == 0.0; }

  void validate() const {
    if (!(c2 > 0.0) || !(c1 > c2) || !std::isfinite(c1))
      throw std::invalid_argument("material: need 0 < c2 < c1, got c1=" + std::to_string(c1) +
                                  " c2=" + std::to_string(c2));
    for (double v : d)
      if (!std::isfinite(v)) throw std::invalid_argument("material: cubic coefficients must be finite");
  }

  bool operator==(const MaterialParams&) const = default;
};

}  // namespace elasto
