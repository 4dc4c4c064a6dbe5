#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include "elastic.hpp"
#include "propagator.hpp"

namespace elasto {

// ---- generators ----------------------------------------------------------------------

// Γ = (∂_t, ∂_1, ∂_2, ∂_3, Ω̃_12, Ω̃_13, Ω̃_23, S̃) with Ω̃_ij u = Ω_ij u + U_ij u on
// vectors (U_ij = e_i⊗e_j − e_j⊗e_i), Ω̃_ij = Ω_ij on scalars, and S̃ = t∂_t + r∂_r − 1.
enum class Generator { dt, d1, d2, d3, rot12, rot13, rot23, scale };

inline constexpr std::array<Generator, 8> kGenerators = {Generator::dt,    Generator::d1,    Generator::d2,
                                                         Generator::d3,    Generator::rot12, Generator::rot13,
                                                         Generator::rot23, Generator::scale};
inline constexpr std::size_t kMaxGammaOrder = 3;

inline const char* generator_name(Generator g) {
  switch (g) {
    case Generator::dt: return "dt";
    case Generator::d1: return "d1";
    case Generator::d2: return "d2";
    case Generator::d3: return "d3";
    case Generator::rot12: return "O12";
    case Generator::rot13: return "O13";
    case Generator::rot23: return "O23";
    case Generator::scale: return "S";
  }
  return "?";
}

// Γ^a = Γ_{a[0]} Γ_{a[1]} ... Γ_{a[k-1]}; the last entry acts first.
using GammaIndex = std::vector<Generator>;

inline void validate_gamma_index(const GammaIndex& a) {
  if (a.size() > kMaxGammaOrder)
    throw std::invalid_argument("gamma index of length " + std::to_string(a.size()) + " exceeds the cap of " +
                                std::to_string(kMaxGammaOrder));
}

inline std::string gamma_label(const GammaIndex& a) {
  if (a.empty()) return "id";
  std::string s;
  for (std::size_t i = 0; i < a.size(); ++i) s += (i ? "." : "") + std::string(generator_name(a[i]));
  return s;
}

// ---- time jets -----------------------------------------------------------------------

// d[j] = ∂_t^j f at time t. Generators act on whole jets so that t∂_t and
// repeated ∂_t never need time differencing.
template <typename F>
struct TimeJet {
  double t = 0.0;
  std::vector<F> d;

  std::size_t size() const { return d.size(); }
  const GridSpec& grid() const { return d.front().grid; }
};

using VectorJet = TimeJet<SpectralVectorField>;
using ScalarJet = TimeJet<SpectralScalarField>;

namespace detail {

inline constexpr int components(const SpectralScalarField&) { return 1; }
inline constexpr int components(const SpectralVectorField&) { return 3; }
inline SpectralScalarField& component(SpectralScalarField& f, int) { return f; }
inline const SpectralScalarField& component(const SpectralScalarField& f, int) { return f; }
inline SpectralScalarField& component(SpectralVectorField& f, int c) { return f[c]; }
inline const SpectralScalarField& component(const SpectralVectorField& f, int c) { return f[c]; }

inline std::pair<int, int> rotation_axes(Generator g) {
  switch (g) {
    case Generator::rot12: return {0, 1};
    case Generator::rot13: return {0, 2};
    case Generator::rot23: return {1, 2};
    default: throw std::invalid_argument("not a rotation generator");
  }
}

inline double binomial(int n, int k) {
  double b = 1.0;
  for (int i = 1; i <= k; ++i) b = b * (n - k + i) / i;
  return b;
}

// Dealiased spectrum of (curl u)·(curl v), the bilinear form behind the
// potential's source d2 |curl u|^2.
inline SpectralScalarField curl_product(const SpectralVectorField& U, const SpectralVectorField& V) {
  RealVectorField cu = inverse_transform(spectral_curl(dealiased(U)));
  RealVectorField cv = inverse_transform(spectral_curl(dealiased(V)));
  RealScalarField p(U.grid);
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = cu[0][i] * cv[0][i] + cu[1][i] * cv[1][i] + cu[2][i] * cv[2][i];
  return forward_dealiased(p);
}

}  // namespace detail

// Jet of u up to ∂_t^order, higher derivatives taken from the equation:
//   ∂_t^{j+2} u = A ∂_t^j u + Σ_i C(j,i) N(∂_t^i u, ∂_t^{j-i} u).
inline VectorJet time_jet(const SpectralPair& z, double t, const MaterialParams& mp, int order) {
  if (order < 1) throw std::invalid_argument("time_jet: order must be >= 1");
  VectorJet J;
  J.t = t;
  J.d.push_back(z.u);
  J.d.push_back(z.ut);
  for (int j = 0; j + 2 <= order; ++j) {
    SpectralVectorField next = spectral_apply_A(J.d[j], mp);
    if (!mp.is_linear()) {
      for (int i = 0; 2 * i <= j; ++i) {
        const int k = j - i;
        const double c = (i == k) ? detail::binomial(j, i) : 2.0 * detail::binomial(j, i);
        SpectralVectorField n = spectral_nonlinearity(J.d[i], i == k ? nullptr : &J.d[k], mp);
        axpy(c, n, next);
      }
    }
    J.d.push_back(std::move(next));
  }
  return J;
}

inline VectorJet time_jet(const SimState& s, const MaterialParams& mp, int order) {
  return time_jet(SpectralPair(forward_transform(s.u), forward_transform(s.ut)), s.t, mp, order);
}

// Jet of the potential, ∂_t²φ = c1² Δφ + d2 |curl u|², given the jet of u
// (entries 0..order-2 are needed).
inline ScalarJet potential_jet(const SpectralScalarPair& phi, const VectorJet& ujet, const MaterialParams& mp,
                               int order) {
  if (order < 1) throw std::invalid_argument("potential_jet: order must be >= 1");
  if (int(ujet.size()) < order - 1) throw std::invalid_argument("potential_jet: u jet too short");
  ScalarJet J;
  J.t = ujet.t;
  J.d.push_back(phi.f);
  J.d.push_back(phi.ft);
  const double c2 = mp.c1 * mp.c1;
  for (int j = 0; j + 2 <= order; ++j) {
    SpectralScalarField next = spectral_laplacian(J.d[j]);
    scale(next, c2);
    if (mp.d2() != 0.0) {
      for (int i = 0; 2 * i <= j; ++i) {
        const int k = j - i;
        const double c = (i == k) ? detail::binomial(j, i) : 2.0 * detail::binomial(j, i);
        axpy(c * mp.d2(), detail::curl_product(ujet.d[i], ujet.d[k]), next);
      }
    }
    J.d.push_back(std::move(next));
  }
  return J;
}

// Spectral jet of a static field: f at any t with zero time derivatives.
template <typename F>
inline TimeJet<F> static_jet(const F& f, std::size_t length, double t = 0.0) {
  TimeJet<F> J;
  J.t = t;
  J.d.push_back(f);
  for (std::size_t i = 1; i < length; ++i) J.d.push_back(F(f.grid));
  return J;
}

// Curl-free or divergence-free part of every jet entry (projections commute with ∂_t).
inline VectorJet helmholtz_jet(const VectorJet& J, bool curl_free) {
  VectorJet out;
  out.t = J.t;
  for (const auto& e : J.d) {
    auto [cf, df] = spectral_helmholtz(e);
    out.d.push_back(curl_free ? std::move(cf) : std::move(df));
  }
  return out;
}

// ---- the generator engine ----------------------------------------------------------------

// Holds the coordinate fields of a grid and applies Γ generators (and the plain
// operators of the commutator suite) to jets. Multiplication by x_a happens on
// the grid, so test fields must vanish near the box faces, where x_a jumps.
class GammaContext {
 public:
  explicit GammaContext(const GridSpec& g)
      : grid_(g), x_{coordinate_field(g, 0), coordinate_field(g, 1), coordinate_field(g, 2)}, r_(radius_field(g)) {}

  const GridSpec& grid() const { return grid_; }
  const RealScalarField& x(int a) const { return x_[a]; }
  const RealScalarField& r() const { return r_; }

  template <typename F>
  class Children;

  // Apply one generator. `keep` caps the number of jet entries produced.
  template <typename F>
  TimeJet<F> apply(Generator g, const TimeJet<F>& J, std::size_t keep = std::numeric_limits<std::size_t>::max()) const;

  template <typename F>
  TimeJet<F> apply(const GammaIndex& a, TimeJet<F> J) const {
    validate_gamma_index(a);
    for (auto it = a.rbegin(); it != a.rend(); ++it) J = apply(*it, J);
    return J;
  }

  // Ω_ij f from the grid gradient of f: x_i ∂_j f − x_j ∂_i f.
  SpectralScalarField rotation_from_gradient(const std::array<RealScalarField, 3>& grad, int i, int j) const {
    RealScalarField p(grid_);
    const std::size_t m = grid_.size();
#pragma omp parallel for schedule(static)
    for (std::size_t q = 0; q < m; ++q) p[q] = x_[i][q] * grad[j][q] - x_[j][q] * grad[i][q];
    return forward_transform(p);
  }

  // r∂_r f = x·∇f from the grid gradient of f.
  SpectralScalarField radial_scaling_from_gradient(const std::array<RealScalarField, 3>& grad) const {
    RealScalarField p(grid_);
    const std::size_t m = grid_.size();
#pragma omp parallel for schedule(static)
    for (std::size_t q = 0; q < m; ++q) p[q] = x_[0][q] * grad[0][q] + x_[1][q] * grad[1][q] + x_[2][q] * grad[2][q];
    return forward_transform(p);
  }

  std::array<RealScalarField, 3> grid_gradient(const SpectralScalarField& F) const {
    return {inverse_transform(spectral_derivative(F, 0)), inverse_transform(spectral_derivative(F, 1)),
            inverse_transform(spectral_derivative(F, 2))};
  }

  // ∂_r f = ω·∇f, set to zero at r = 0.
  SpectralScalarField radial_derivative(const SpectralScalarField& F) const {
    auto g = grid_gradient(F);
    RealScalarField p(grid_);
    for (std::size_t q = 0; q < p.size(); ++q)
      p[q] = r_[q] > 0.0 ? (x_[0][q] * g[0][q] + x_[1][q] * g[1][q] + x_[2][q] * g[2][q]) / r_[q] : 0.0;
    return forward_transform(p);
  }

  // Multiply by a grid function g(x) and return the spectrum.
  template <typename Fn>
  SpectralScalarField multiply(const SpectralScalarField& F, Fn&& weight) const {
    RealScalarField f = inverse_transform(F);
    for (std::size_t q = 0; q < f.size(); ++q) f[q] *= weight(q);
    return forward_transform(f);
  }

 private:
  GridSpec grid_;
  std::array<RealScalarField, 3> x_;
  RealScalarField r_;
};

// Children Γ_g J of one parent jet. Real-space gradients of the parent are
// computed once (only when a rotation or scaling child is requested) and
// shared by all children.
template <typename F>
class GammaContext::Children {
 public:
  Children(const GammaContext& ctx, const TimeJet<F>& J, std::size_t keep) : ctx_(ctx), J_(J) {
    if (J.d.empty()) throw std::invalid_argument("gamma: empty jet");
    require_same_grid(J.grid(), ctx.grid());
    nc_ = detail::components(J.d.front());
    len_space_ = std::min(keep, J.size());
    len_time_ = std::min(keep, J.size() - 1);
  }

  TimeJet<F> make(Generator g) {
    const GridSpec& grid = ctx_.grid();
    TimeJet<F> child;
    child.t = J_.t;
    switch (g) {
      case Generator::dt:
        if (len_time_ == 0) throw std::invalid_argument("gamma: jet too short for a time derivative");
        for (std::size_t e = 0; e < len_time_; ++e) child.d.push_back(J_.d[e + 1]);
        break;
      case Generator::d1:
      case Generator::d2:
      case Generator::d3: {
        const int a = int(g) - int(Generator::d1);
        for (std::size_t e = 0; e < len_space_; ++e) {
          F f(grid);
          for (int c = 0; c < nc_; ++c) detail::component(f, c) = spectral_derivative(detail::component(J_.d[e], c), a);
          child.d.push_back(std::move(f));
        }
        break;
      }
      case Generator::rot12:
      case Generator::rot13:
      case Generator::rot23: {
        auto [i, j] = detail::rotation_axes(g);
        ensure_gradients(len_space_);
        for (std::size_t e = 0; e < len_space_; ++e) {
          F f(grid);
          for (int c = 0; c < nc_; ++c) detail::component(f, c) = ctx_.rotation_from_gradient(grad_[e][c], i, j);
          if constexpr (std::is_same_v<F, SpectralVectorField>) {
            // U_ij u = e_i u^j − e_j u^i
            axpy(1.0, J_.d[e][j], f[i]);
            axpy(-1.0, J_.d[e][i], f[j]);
          }
          child.d.push_back(std::move(f));
        }
        break;
      }
      case Generator::scale: {
        if (len_time_ == 0) throw std::invalid_argument("gamma: jet too short for the scaling field");
        ensure_gradients(len_time_);
        // ∂_t^e (t ∂_t f + r ∂_r f − f) = t f_{e+1} + (e − 1) f_e + r∂_r f_e
        for (std::size_t e = 0; e < len_time_; ++e) {
          F f(grid);
          for (int c = 0; c < nc_; ++c) detail::component(f, c) = ctx_.radial_scaling_from_gradient(grad_[e][c]);
          axpy(J_.t, J_.d[e + 1], f);
          axpy(double(e) - 1.0, J_.d[e], f);
          child.d.push_back(std::move(f));
        }
        break;
      }
    }
    return child;
  }

 private:
  void ensure_gradients(std::size_t entries) {
    for (std::size_t e = grad_.size(); e < entries; ++e) {
      std::vector<std::array<RealScalarField, 3>> per(nc_);
      for (int c = 0; c < nc_; ++c) per[c] = ctx_.grid_gradient(detail::component(J_.d[e], c));
      grad_.push_back(std::move(per));
    }
  }

  const GammaContext& ctx_;
  const TimeJet<F>& J_;
  int nc_ = 1;
  std::size_t len_space_ = 0, len_time_ = 0;
  std::vector<std::vector<std::array<RealScalarField, 3>>> grad_;  // grad_[e][c][a]
};

template <typename F>
TimeJet<F> GammaContext::apply(Generator g, const TimeJet<F>& J, std::size_t keep) const {
  return Children<F>(*this, J, keep).make(g);
}

// Depth-first walk over all Γ^a, |a| <= max_depth, applied simultaneously to
// several roots. visit(a, jets) sees every node once; each jet is truncated to
// `tail` + remaining depth entries, which is all the descendants can use.
template <typename F, typename Visit>
inline void gamma_tree(const GammaContext& ctx, const std::vector<TimeJet<F>>& roots, int max_depth, int tail,
                       Visit&& visit) {
  if (max_depth < 0) return;
  if (max_depth > int(kMaxGammaOrder)) throw std::invalid_argument("gamma_tree: depth beyond the cap");
  for (const auto& r : roots)
    if (int(r.size()) < tail + max_depth)
      throw std::invalid_argument("gamma_tree: root jet has " + std::to_string(r.size()) + " entries, need " +
                                  std::to_string(tail + max_depth));
  GammaIndex a;
  // Recursive lambda over the current node's jets.
  auto rec = [&](auto&& self, const std::vector<TimeJet<F>>& jets) -> void {
    visit(static_cast<const GammaIndex&>(a), jets);
    const int depth = int(a.size());
    if (depth == max_depth) return;
    const std::size_t keep = std::size_t(tail + max_depth - depth - 1);
    std::vector<GammaContext::Children<F>> kids;
    kids.reserve(jets.size());
    for (const auto& J : jets) kids.emplace_back(ctx, J, keep);
    for (Generator g : kGenerators) {
      std::vector<TimeJet<F>> next;
      next.reserve(jets.size());
      for (auto& k : kids) next.push_back(k.make(g));
      a.push_back(g);
      self(self, next);
      a.pop_back();
    }
  };
  rec(rec, roots);
}

// Γ^a u for the current state; ∂_t derivatives come from the equation.
inline RealVectorField apply_gamma(const GammaIndex& a, const SimState& s, const MaterialParams& mp) {
  validate_gamma_index(a);
  GammaContext ctx(s.grid());
  VectorJet J = time_jet(s, mp, std::max<int>(1, int(a.size())));
  return inverse_transform(ctx.apply(a, J).d.front());
}

inline RealScalarField apply_gamma(const GammaIndex& a, const ScalarJet& J, const GammaContext& ctx) {
  validate_gamma_index(a);
  return inverse_transform(ctx.apply(a, J).d.front());
}

// ---- commutator suite ------------------------------------------------------------------

// Plain operators: Ω_ij without the matrix term and S = t∂_t + r∂_r.
enum class Operator { dt, d1, d2, d3, rot12, rot13, rot23, scale, radial };

inline constexpr std::array<Operator, 9> kOperators = {Operator::dt,    Operator::d1,    Operator::d2,
                                                       Operator::d3,    Operator::rot12, Operator::rot13,
                                                       Operator::rot23, Operator::scale, Operator::radial};

inline const char* operator_name(Operator o) {
  switch (o) {
    case Operator::dt: return "dt";
    case Operator::d1: return "d1";
    case Operator::d2: return "d2";
    case Operator::d3: return "d3";
    case Operator::rot12: return "O12";
    case Operator::rot13: return "O13";
    case Operator::rot23: return "O23";
    case Operator::scale: return "S";
    case Operator::radial: return "dr";
  }
  return "?";
}

namespace detail {

inline bool is_rotation(Operator o) { return o == Operator::rot12 || o == Operator::rot13 || o == Operator::rot23; }
inline bool is_space_derivative(Operator o) { return o == Operator::d1 || o == Operator::d2 || o == Operator::d3; }
inline int axis_of(Operator o) { return int(o) - int(Operator::d1); }
inline std::pair<int, int> rotation_axes(Operator o) {
  switch (o) {
    case Operator::rot12: return {0, 1};
    case Operator::rot13: return {0, 2};
    case Operator::rot23: return {1, 2};
    default: throw std::invalid_argument("not a rotation operator");
  }
}
inline Operator derivative_op(int a) { return Operator(int(Operator::d1) + a); }

}  // namespace detail

inline ScalarJet apply_operator(const GammaContext& ctx, Operator o, const ScalarJet& J) {
  ScalarJet out;
  out.t = J.t;
  const std::size_t n = J.size();
  switch (o) {
    case Operator::dt:
      if (n < 2) throw std::invalid_argument("apply_operator: jet too short");
      for (std::size_t e = 0; e + 1 < n; ++e) out.d.push_back(J.d[e + 1]);
      break;
    case Operator::d1:
    case Operator::d2:
    case Operator::d3:
      for (const auto& f : J.d) out.d.push_back(spectral_derivative(f, detail::axis_of(o)));
      break;
    case Operator::rot12:
    case Operator::rot13:
    case Operator::rot23: {
      auto [i, j] = detail::rotation_axes(o);
      for (const auto& f : J.d) out.d.push_back(ctx.rotation_from_gradient(ctx.grid_gradient(f), i, j));
      break;
    }
    case Operator::scale:
      if (n < 2) throw std::invalid_argument("apply_operator: jet too short");
      for (std::size_t e = 0; e + 1 < n; ++e) {
        SpectralScalarField f = ctx.radial_scaling_from_gradient(ctx.grid_gradient(J.d[e]));
        axpy(J.t, J.d[e + 1], f);
        axpy(double(e), J.d[e], f);
        out.d.push_back(std::move(f));
      }
      break;
    case Operator::radial:
      for (const auto& f : J.d) out.d.push_back(ctx.radial_derivative(f));
      break;
  }
  return out;
}

// How [Ω_ij, ∂_r] is tabulated. `zero` is the correct value (∂_r is rotation
// invariant); `inverse_radius` is the form −r⁻¹Ω_ij, which agrees with it
// only on radial functions.
enum class RotationRadialForm { zero, inverse_radius };

namespace detail {

// `op0(o)` returns the value slot of o applied to f.
template <class Op0>
SpectralScalarField commutator_rhs_from(const GammaContext& ctx, Operator A, Operator B, Op0&& op0,
                                        RotationRadialForm form) {
  const GridSpec& g = ctx.grid();
  // Ω_ij f for any ordered pair, using Ω_ji = −Ω_ij.
  auto rot = [&](int i, int j) -> SpectralScalarField {
    if (i == j) return SpectralScalarField(g);
    const int lo = std::min(i, j), hi = std::max(i, j);
    SpectralScalarField f0 = op0(lo == 0 ? (hi == 1 ? Operator::rot12 : Operator::rot13) : Operator::rot23);
    return i < j ? f0 : scaled(f0, -1.0);
  };
  auto delta = [](int a, int b) { return a == b ? 1.0 : 0.0; };
  SpectralScalarField zero(g);
  if (A == B) return zero;

  // Tabulate one orientation, the other follows by antisymmetry.
  auto table = [&](Operator P, Operator Q) -> std::optional<SpectralScalarField> {
    if (P == Operator::dt) {
      if (Q == Operator::scale) return op0(Operator::dt);
      return zero;
    }
    if (detail::is_space_derivative(P) && detail::is_space_derivative(Q)) return zero;
    if (detail::is_rotation(P) && detail::is_space_derivative(Q)) {
      auto [i, j] = detail::rotation_axes(P);
      const int k = detail::axis_of(Q);
      SpectralScalarField s(g);
      if (j == k) axpy(1.0, op0(detail::derivative_op(i)), s);
      if (i == k) axpy(-1.0, op0(detail::derivative_op(j)), s);
      return s;
    }
    if (P == Operator::scale && detail::is_space_derivative(Q)) return scaled(op0(Q), -1.0);
    if (detail::is_rotation(P) && Q == Operator::scale) return zero;
    if (detail::is_rotation(P) && detail::is_rotation(Q)) {
      auto [i, j] = detail::rotation_axes(P);
      auto [k, l] = detail::rotation_axes(Q);
      SpectralScalarField s(g);
      axpy(delta(j, k), rot(i, l), s);
      axpy(-delta(i, k), rot(j, l), s);
      axpy(-delta(j, l), rot(i, k), s);
      axpy(delta(i, l), rot(j, k), s);
      return s;
    }
    if (detail::is_rotation(P) && Q == Operator::radial) {
      if (form == RotationRadialForm::zero) return zero;
      const RealScalarField& r = ctx.r();
      return ctx.multiply(op0(P), [&](std::size_t q) { return r[q] > 0.0 ? -1.0 / r[q] : 0.0; });
    }
    if (P == Operator::scale && Q == Operator::radial) return scaled(op0(Operator::radial), -1.0);
    if (detail::is_space_derivative(P) && Q == Operator::radial) {
      // r⁻¹(∂_k f − ω_k ∂_r f)
      const int k = detail::axis_of(P);
      RealScalarField dk = inverse_transform(op0(P));
      RealScalarField dr = inverse_transform(op0(Operator::radial));
      const RealScalarField& r = ctx.r();
      RealScalarField p(g);
      for (std::size_t q = 0; q < p.size(); ++q)
        p[q] = r[q] > 0.0 ? (dk[q] - ctx.x(k)[q] / r[q] * dr[q]) / r[q] : 0.0;
      return forward_transform(p);
    }
    return std::nullopt;
  };
  if (auto s = table(A, B)) return *s;
  if (auto s = table(B, A)) return scaled(*s, -1.0);
  throw std::logic_error("commutator_rhs: pair not tabulated");
}

}  // namespace detail

// Right side of [A, B] f in terms of first-order operators on f (entry 0 only).
inline SpectralScalarField commutator_rhs(const GammaContext& ctx, Operator A, Operator B, const ScalarJet& f,
                                          RotationRadialForm form = RotationRadialForm::zero) {
  auto op0 = [&](Operator o) {
    ScalarJet head;
    head.t = f.t;
    head.d.assign(f.d.begin(), f.d.begin() + std::ptrdiff_t(std::min<std::size_t>(f.size(), 2)));
    return apply_operator(ctx, o, head).d.front();
  };
  return detail::commutator_rhs_from(ctx, A, B, op0, form);
}

// sqrt(Σ_{|α|<=2} ‖∂^α f‖²) with multi-index α.
inline double h2_norm(const SpectralScalarField& F) {
  return std::sqrt(spectral_weighted_norm_sq(F, [](double k1, double k2, double k3) {
    const double a = k1 * k1, b = k2 * k2, c = k3 * k3;
    return 1.0 + a + b + c + a * a + b * b + c * c + a * b + a * c + b * c;
  }));
}

// Evaluates ‖[A,B]f − rhs‖₂ / ‖f‖_{H²} on the value slot of a jet f with at
// least three entries. First applications A f are cached, so sweeping all
// pairs costs one application per operator plus two per pair.
class CommutatorProbe {
 public:
  CommutatorProbe(const GammaContext& ctx, ScalarJet f) : ctx_(&ctx), f_(std::move(f)) {
    if (f_.size() < 3) throw std::invalid_argument("CommutatorProbe: jet needs three entries");
    f_.d.resize(3);
    const double n = h2_norm(f_.d.front());
    h2_ = n > 0.0 ? n : 1.0;
  }

  // o f, lazily computed on the whole jet.
  const ScalarJet& first(Operator o) {
    auto& slot = cache_[std::size_t(o)];
    if (!slot) slot = apply_operator(*ctx_, o, f_);
    return *slot;
  }

  double residual(Operator A, Operator B, RotationRadialForm form = RotationRadialForm::zero) {
    SpectralScalarField ab = second(A, B);
    axpy(-1.0, second(B, A), ab);
    axpy(-1.0, detail::commutator_rhs_from(*ctx_, A, B, [&](Operator o) { return first(o).d.front(); }, form), ab);
    return std::sqrt(spectral_norm_sq(ab)) / h2_;
  }

 private:
  static std::size_t reads_ahead(Operator o) { return (o == Operator::dt || o == Operator::scale) ? 1 : 0; }

  // Value slot of A(B f).
  SpectralScalarField second(Operator A, Operator B) {
    const ScalarJet& bf = first(B);
    ScalarJet head;
    head.t = bf.t;
    head.d.assign(bf.d.begin(), bf.d.begin() + std::ptrdiff_t(1 + reads_ahead(A)));
    return apply_operator(*ctx_, A, head).d.front();
  }

  const GammaContext* ctx_;
  ScalarJet f_;
  double h2_ = 1.0;
  std::array<std::optional<ScalarJet>, kOperators.size()> cache_;
};

inline double commutator_residual(const GammaContext& ctx, Operator A, Operator B, const ScalarJet& f,
                                  RotationRadialForm form = RotationRadialForm::zero) {
  return CommutatorProbe(ctx, f).residual(A, B, form);
}

}  // namespace elasto
