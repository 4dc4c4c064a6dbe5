#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "elastic.hpp"
#include "fft.hpp"
#include "grid.hpp"
#include "material.hpp"
#include "spectral.hpp"

namespace elasto {

struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// (f, f_t) in spectral form.
struct SpectralPair {
  SpectralVectorField u, ut;

  SpectralPair() = default;
  explicit SpectralPair(const GridSpec& g) : u(g), ut(g) {}
  SpectralPair(SpectralVectorField a, SpectralVectorField b) : u(std::move(a)), ut(std::move(b)) {}
  const GridSpec& grid() const { return u.grid; }
};

struct SpectralScalarPair {
  SpectralScalarField f, ft;

  SpectralScalarPair() = default;
  explicit SpectralScalarPair(const GridSpec& g) : f(g), ft(g) {}
  SpectralScalarPair(SpectralScalarField f0, SpectralScalarField f1) : f(std::move(f0)), ft(std::move(f1)) {}
};

inline void axpy(double a, const SpectralPair& x, SpectralPair& y) {
  axpy(a, x.u, y.u);
  axpy(a, x.ut, y.ut);
}
inline void axpy(double a, const SpectralScalarPair& x, SpectralScalarPair& y) {
  axpy(a, x.f, y.f);
  axpy(a, x.ft, y.ft);
}

// ---- exact linear group ------------------------------------------------------------

namespace detail {

// Harmonic rotation of one mode: (a, b) -> (cos a + sin/w b, -w sin a + cos b),
// and (a, b) -> (a + t b, b) when w = 0.
struct Rotation {
  double c, s_over_w, w_s;
  Rotation(double w, double t) {
    if (w == 0.0) {
      c = 1.0;
      s_over_w = t;
      w_s = 0.0;
    } else {
      c = std::cos(w * t);
      s_over_w = std::sin(w * t) / w;
      w_s = w * std::sin(w * t);
    }
  }
};

}  // namespace detail

// S(t) acting in place. Per mode the longitudinal part khat (khat . u) rotates
// at c1|k| and the transverse remainder at c2|k|; the k = 0 modes drift freely.
inline void propagate(SpectralPair& z, double t, const MaterialParams& mp) {
  const GridSpec& g = z.grid();
  for_each_mode(g, [&](std::size_t i, double k1, double k2, double k3, double) {
    const double kk2 = k1 * k1 + k2 * k2 + k3 * k3;
    cplx a[3], b[3];
    for (int c = 0; c < 3; ++c) {
      a[c] = z.u[c].data[i];
      b[c] = z.ut[c].data[i];
    }
    if (kk2 == 0.0) {
      for (int c = 0; c < 3; ++c) z.u[c].data[i] = a[c] + t * b[c];
      return;
    }
    const double kn = std::sqrt(kk2);
    const double k[3] = {k1 / kn, k2 / kn, k3 / kn};
    const cplx pa = k[0] * a[0] + k[1] * a[1] + k[2] * a[2];
    const cplx pb = k[0] * b[0] + k[1] * b[1] + k[2] * b[2];
    const detail::Rotation L(mp.c1 * kn, t), T(mp.c2 * kn, t);
    for (int c = 0; c < 3; ++c) {
      const cplx aL = k[c] * pa, bL = k[c] * pb;
      const cplx aT = a[c] - aL, bT = b[c] - bL;
      z.u[c].data[i] = L.c * aL + L.s_over_w * bL + T.c * aT + T.s_over_w * bT;
      z.ut[c].data[i] = -L.w_s * aL + L.c * bL - T.w_s * aT + T.c * bT;
    }
  });
}

// Scalar wave group at speed c (used for the potential phi with c = c1).
inline void propagate(SpectralScalarPair& z, double t, double c) {
  for_each_mode(z.f.grid, [&](std::size_t i, double k1, double k2, double k3, double) {
    const detail::Rotation R(c * std::sqrt(k1 * k1 + k2 * k2 + k3 * k3), t);
    const cplx a = z.f.data[i], b = z.ft.data[i];
    z.f.data[i] = R.c * a + R.s_over_w * b;
    z.ft.data[i] = -R.w_s * a + R.c * b;
  });
}

inline SpectralPair propagated(SpectralPair z, double t, const MaterialParams& mp) {
  propagate(z, t, mp);
  return z;
}

// y += a * S(t)(0, F).
inline void add_propagated_source(SpectralPair& y, double a, const SpectralVectorField& F, double t,
                                  const MaterialParams& mp) {
  for_each_mode(F.grid, [&](std::size_t i, double k1, double k2, double k3, double) {
    const double kk2 = k1 * k1 + k2 * k2 + k3 * k3;
    if (kk2 == 0.0) {
      for (int c = 0; c < 3; ++c) {
        y.u[c].data[i] += a * t * F[c].data[i];
        y.ut[c].data[i] += a * F[c].data[i];
      }
      return;
    }
    const double kn = std::sqrt(kk2);
    const double k[3] = {k1 / kn, k2 / kn, k3 / kn};
    const cplx pb = k[0] * F[0].data[i] + k[1] * F[1].data[i] + k[2] * F[2].data[i];
    const detail::Rotation L(mp.c1 * kn, t), T(mp.c2 * kn, t);
    for (int c = 0; c < 3; ++c) {
      const cplx bL = k[c] * pb, bT = F[c].data[i] - bL;
      y.u[c].data[i] += a * (L.s_over_w * bL + T.s_over_w * bT);
      y.ut[c].data[i] += a * (L.c * bL + T.c * bT);
    }
  });
}

inline void add_propagated_source(SpectralScalarPair& y, double a, const SpectralScalarField& F, double t, double c) {
  for_each_mode(F.grid, [&](std::size_t i, double k1, double k2, double k3, double) {
    const detail::Rotation R(c * std::sqrt(k1 * k1 + k2 * k2 + k3 * k3), t);
    y.f.data[i] += a * R.s_over_w * F.data[i];
    y.ft.data[i] += a * R.c * F.data[i];
  });
}

// Physical-space form of S(t) on data (u0, u1).
inline std::pair<RealVectorField, RealVectorField> linear_group(const RealVectorField& u0, const RealVectorField& u1,
                                                                double t, const MaterialParams& mp) {
  require_same_grid(u0.grid, u1.grid);
  SpectralPair z(forward_transform(u0), forward_transform(u1));
  propagate(z, t, mp);
  return {inverse_transform(z.u), inverse_transform(z.ut)};
}

// 𝓔1 = 1/2 ∫ |u_t|^2 + c2^2 |grad u|^2 + (c1^2 - c2^2)(div u)^2.
inline double spectral_energy1(const SpectralPair& z, const MaterialParams& mp) {
  const double a = mp.c2 * mp.c2, b = mp.c1 * mp.c1 - mp.c2 * mp.c2;
  double s = spectral_norm_sq(z.ut);
  for (int c = 0; c < 3; ++c)
    s += a * spectral_weighted_norm_sq(z.u[c], [](double k1, double k2, double k3) { return k1 * k1 + k2 * k2 + k3 * k3; });
  s += b * spectral_norm_sq(spectral_divergence(z.u));
  return 0.5 * s;
}

// ---- simulation state --------------------------------------------------------------

struct FieldPair {
  RealVectorField f, ft;
};

struct ScalarPair {
  RealScalarField f, ft;
};

struct SimState {
  RealVectorField u, ut;
  double t = 0.0;
  std::optional<FieldPair> w, v;  // split parts, u = w + v
  std::optional<ScalarPair> phi;  // curl-free potential, v = grad phi

  const GridSpec& grid() const { return u.grid; }
};

inline SimState make_state(const RealVectorField& u, const RealVectorField& ut, double t = 0.0) {
  SimState s;
  s.u = u;
  s.ut = ut;
  s.t = t;
  return s;
}

// ---- integrating-factor RK4 ----------------------------------------------------------

struct StepperOptions {
  bool split = false;     // co-evolve w (source G) and v (source F)
  bool phi = false;       // co-evolve the potential with source d2 |curl u|^2
  double cfl_safety = 0.5;
};

// Classical RK4 applied to the profile S(-t) z, i.e. the Lawson scheme
//   k1 = f(z_n)
//   k2 = f(S(h/2)(z_n + h/2 k1))
//   k3 = f(S(h/2) z_n + h/2 k2)
//   k4 = f(S(h) z_n + h S(h/2) k3)
//   z_{n+1} = S(h) z_n + h/6 [S(h) k1 + 2 S(h/2)(k2 + k3) + k4]
// with f(z) = (0, N(u, u)). The split and potential variables obey the same
// affine recursion with sources computed from the u stages, so u = w + v
// holds to round-off after every step.
class Stepper {
 public:
  Stepper(const GridSpec& grid, const MaterialParams& mp, StepperOptions opt = {})
      : grid_(grid), mp_(mp), opt_(opt), u_(grid) {
    grid.validate();
    mp.validate();
    if (opt_.split && !mp.null_condition_holds())
      throw std::invalid_argument("split evolution requires the null condition d1 = 0");
    if (opt_.phi && !opt_.split) throw std::invalid_argument("phi evolution requires the split to be active");
    if (opt_.split) {
      w_ = SpectralPair(grid);
      v_ = SpectralPair(grid);
    }
    if (opt_.phi) phi_ = SpectralScalarPair(grid);
  }

  void set_state(const SimState& s) {
    require_same_grid(s.grid(), grid_);
    t_ = s.t;
    u_ = SpectralPair(forward_transform(s.u), forward_transform(s.ut));
    if (opt_.split) {
      if (s.w && s.v) {
        w_ = SpectralPair(forward_transform(s.w->f), forward_transform(s.w->ft));
        v_ = SpectralPair(forward_transform(s.v->f), forward_transform(s.v->ft));
      } else {
        // Fresh split: all data goes to w, v starts from rest.
        w_ = u_;
        v_ = SpectralPair(grid_);
      }
    }
    if (opt_.phi) {
      phi_ = SpectralScalarPair(grid_);
      if (s.phi) {
        phi_->f = forward_transform(s.phi->f);
        phi_->ft = forward_transform(s.phi->ft);
      }
    }
  }

  SimState state() const {
    SimState s;
    s.t = t_;
    s.u = inverse_transform(u_.u);
    s.ut = inverse_transform(u_.ut);
    if (opt_.split) {
      s.w = FieldPair{inverse_transform(w_->u), inverse_transform(w_->ut)};
      s.v = FieldPair{inverse_transform(v_->u), inverse_transform(v_->ut)};
    }
    if (opt_.phi) s.phi = ScalarPair{inverse_transform(phi_->f), inverse_transform(phi_->ft)};
    return s;
  }

  double time() const { return t_; }
  const SpectralPair& u() const { return u_; }
  const std::optional<SpectralPair>& w() const { return w_; }
  const std::optional<SpectralPair>& v() const { return v_; }
  const std::optional<SpectralScalarPair>& phi() const { return phi_; }
  const GridSpec& grid() const { return grid_; }
  const MaterialParams& material() const { return mp_; }
  const StepperOptions& options() const { return opt_; }

  double max_stable_dt() const { return opt_.cfl_safety * grid_.spacing() / mp_.c1; }

  // Called once per step with the time and the w-source G(u(t_n)), which is
  // exactly the first RK stage; used to sample the Duhamel integrand.
  std::function<void(double, const SpectralVectorField&)> on_source_sample;

  // Evaluate the sources at a given u (also used for the final Duhamel sample).
  NonlinearTerms sources_at(const SpectralVectorField& U) const { return nonlinear_terms(U, nullptr, mp_); }

  void step(double h) {
    if (!(h > 0.0)) throw std::invalid_argument("step: dt must be positive");
    if (h > max_stable_dt() * (1.0 + 1e-12))
      throw std::invalid_argument("step: dt=" + std::to_string(h) + " violates dt <= cfl*h/c1 = " +
                                  std::to_string(max_stable_dt()));
    if (mp_.is_linear()) {
      propagate(u_, h, mp_);
      if (w_) propagate(*w_, h, mp_);
      if (v_) propagate(*v_, h, mp_);
      if (phi_) propagate(*phi_, h, mp_.c1);
      if (on_source_sample) on_source_sample(t_, SpectralVectorField(grid_));
      t_ += h;
      return;
    }

    const double h2 = 0.5 * h;
    // Accumulators for S(h) k1 + 2 S(h/2)(k2 + k3) + k4 of each variable.
    SpectralPair acc_u(grid_);
    std::optional<SpectralPair> acc_w, acc_v;
    std::optional<SpectralScalarPair> acc_phi;
    if (opt_.split) {
      acc_w = SpectralPair(grid_);
      acc_v = SpectralPair(grid_);
    }
    if (opt_.phi) acc_phi = SpectralScalarPair(grid_);

    auto accumulate = [&](const NonlinearTerms& k, double weight, double lag) {
      add_propagated_source(acc_u, weight, k.total(), lag, mp_);
      if (opt_.split) {
        add_propagated_source(*acc_w, weight, k.source_w(), lag, mp_);
        add_propagated_source(*acc_v, weight, k.n1, lag, mp_);
      }
      if (opt_.phi) add_propagated_source(*acc_phi, weight * mp_.d2(), k.curl_product, lag, mp_.c1);
    };

    // stage 1
    NonlinearTerms k1 = sources_at(u_.u);
    if (on_source_sample) on_source_sample(t_, k1.source_w());
    accumulate(k1, 1.0, h);
    SpectralPair z = u_;
    axpy(h2, k1.total(), z.ut);
    propagate(z, h2, mp_);
    k1 = NonlinearTerms{};

    // stage 2
    NonlinearTerms k2 = sources_at(z.u);
    accumulate(k2, 2.0, h2);
    z = propagated(u_, h2, mp_);
    axpy(h2, k2.total(), z.ut);
    k2 = NonlinearTerms{};

    // stage 3
    NonlinearTerms k3 = sources_at(z.u);
    accumulate(k3, 2.0, h2);
    z = propagated(u_, h, mp_);
    add_propagated_source(z, h, k3.total(), h2, mp_);
    k3 = NonlinearTerms{};

    // stage 4
    NonlinearTerms k4 = sources_at(z.u);
    accumulate(k4, 1.0, 0.0);
    k4 = NonlinearTerms{};

    auto finish = [&](SpectralPair& y, const SpectralPair& acc) {
      propagate(y, h, mp_);
      axpy(h / 6.0, acc, y);
    };
    finish(u_, acc_u);
    if (opt_.split) {
      finish(*w_, *acc_w);
      finish(*v_, *acc_v);
    }
    if (opt_.phi) {
      propagate(*phi_, h, mp_.c1);
      axpy(h / 6.0, *acc_phi, *phi_);
    }
    t_ += h;
    if (!all_finite(u_.u) || !all_finite(u_.ut))
      throw NumericalError("non-finite values in u after step to t=" + std::to_string(t_));
  }

 private:
  GridSpec grid_;
  MaterialParams mp_;
  StepperOptions opt_;
  SpectralPair u_;
  std::optional<SpectralPair> w_, v_;
  std::optional<SpectralScalarPair> phi_;
  double t_ = 0.0;
};

// One step on a physical-space state.
inline SimState step_nonlinear(const SimState& s, double dt, const MaterialParams& mp, StepperOptions opt = {}) {
  opt.split = opt.split || (s.w.has_value() && s.v.has_value());
  opt.phi = opt.phi || s.phi.has_value();
  Stepper st(s.grid(), mp, opt);
  st.set_state(s);
  st.step(dt);
  return st.state();
}

// ---- Duhamel quadrature ----------------------------------------------------------------

// Composite Simpson for ∫_0^T S(-tau)(0, G(tau)) dtau on uniform samples, with
// the 3/8 rule closing an odd number of intervals.
inline SpectralPair duhamel_integral(const std::vector<SpectralVectorField>& G, double T, const MaterialParams& mp) {
  if (G.size() < 3) throw std::invalid_argument("duhamel: need at least 3 samples");
  const std::size_t N = G.size() - 1;
  const double h = T / double(N);
  std::vector<double> w(N + 1, 0.0);
  std::size_t simpson_end = (N % 2 == 0) ? N : N - 3;
  for (std::size_t i = 0; i + 2 <= simpson_end; i += 2) {
    w[i] += h / 3.0;
    w[i + 1] += 4.0 * h / 3.0;
    w[i + 2] += h / 3.0;
  }
  if (N % 2 == 1) {
    const double e = 3.0 * h / 8.0;
    w[N - 3] += e;
    w[N - 2] += 3.0 * e;
    w[N - 1] += 3.0 * e;
    w[N] += e;
  }
  SpectralPair acc(G.front().grid);
  for (std::size_t i = 0; i <= N; ++i) add_propagated_source(acc, w[i], G[i], -double(i) * h, mp);
  return acc;
}

struct ScatteringPair {
  RealVectorField w0bar, w1bar;
};

// (w̄0, w̄1) = (w0, w1) + ∫_0^T S(-tau)(0, G(tau)) dtau, samples uniform on [0, T].
inline ScatteringPair duhamel_backward(const std::vector<RealVectorField>& G_samples, const RealVectorField& w0,
                                       const RealVectorField& w1, double T, const MaterialParams& mp) {
  if (G_samples.size() < 3) throw std::invalid_argument("duhamel_backward: need at least 3 samples");
  std::vector<SpectralVectorField> G;
  G.reserve(G_samples.size());
  for (const auto& g : G_samples) G.push_back(forward_transform(g));
  SpectralPair I = duhamel_integral(G, T, mp);
  axpy(1.0, forward_transform(w0), I.u);
  axpy(1.0, forward_transform(w1), I.ut);
  return {inverse_transform(I.u), inverse_transform(I.ut)};
}

// Streaming Simpson accumulator for runs too large to keep G in memory.
// Samples must arrive at tau = 0, dt, 2 dt, ...; the interval count must be
// even when the integral is read.
class DuhamelAccumulator {
 public:
  DuhamelAccumulator(const GridSpec& g, const MaterialParams& mp, double dt)
      : mp_(mp), dt_(dt), first_(g), odd_(g), even_(g), last_(g) {}

  void add(double tau, const SpectralVectorField& G) {
    const double expected = double(count_) * dt_;
    if (std::abs(tau - expected) > 1e-9 * std::max(1.0, std::abs(expected)))
      throw std::invalid_argument("duhamel accumulator: samples must be uniformly spaced from 0");
    SpectralPair p(G.grid);
    add_propagated_source(p, 1.0, G, -tau, mp_);
    if (count_ == 0) {
      first_ = p;
    } else if (count_ % 2 == 1) {
      axpy(1.0, p, odd_);
    } else {
      axpy(1.0, p, even_);
    }
    last_ = std::move(p);
    norms_.push_back({tau, std::sqrt(spectral_norm_sq(G))});
    double h1 = 0.0;
    for (int c = 0; c < 3; ++c)
      h1 += spectral_weighted_norm_sq(G[c], [](double k1, double k2, double k3) { return 1.0 + k1 * k1 + k2 * k2 + k3 * k3; });
    h1_norms_.push_back({tau, std::sqrt(h1)});
    ++count_;
  }

  std::size_t samples() const { return count_; }
  double horizon() const { return count_ == 0 ? 0.0 : double(count_ - 1) * dt_; }

  SpectralPair integral() const {
    if (count_ < 3) throw std::invalid_argument("duhamel: need at least 3 samples");
    if ((count_ - 1) % 2 != 0) throw std::invalid_argument("duhamel accumulator: interval count must be even");
    SpectralPair s = first_;
    axpy(4.0, odd_, s);
    axpy(2.0, even_, s);
    axpy(-1.0, last_, s);  // last sample sits in the even sum with weight 2
    SpectralPair out(first_.grid());
    axpy(dt_ / 3.0, s, out);
    return out;
  }

  // Bound on the neglected ∫_T^∞ from the measured decay ‖G(t)‖ <~ A t^{-3/2}:
  // the tail of the integral is at most 2 A T^{-1/2}.
  double tail_estimate() const {
    if (count_ < 3) return 0.0;
    const double T = horizon();
    double A = 0.0;
    for (const auto& [tau, g] : norms_)
      if (tau >= 0.5 * T && tau > 0.0) A = std::max(A, g * std::pow(tau, 1.5));
    return T > 0.0 ? 2.0 * A / std::sqrt(T) : 0.0;
  }

  const std::vector<std::pair<double, double>>& source_norms() const { return norms_; }
  const std::vector<std::pair<double, double>>& source_h1_norms() const { return h1_norms_; }

  // Simpson value of ∫_0^T ‖G‖_{H¹} dτ.
  double source_h1_integral() const {
    if (count_ < 3 || (count_ - 1) % 2 != 0) throw std::invalid_argument("duhamel accumulator: interval count must be even");
    double s = 0.0;
    for (std::size_t i = 0; i < count_; ++i) {
      const double w = (i == 0 || i + 1 == count_) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
      s += w * h1_norms_[i].second;
    }
    return s * dt_ / 3.0;
  }

 private:
  MaterialParams mp_;
  double dt_;
  std::size_t count_ = 0;
  SpectralPair first_, odd_, even_, last_;
  std::vector<std::pair<double, double>> norms_, h1_norms_;
};

}  // namespace elasto
