#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "test_support.hpp"

using namespace elasto;
using elasto::testing::random_vector;

namespace {

MaterialParams cubic_material(std::array<double, 5> d = {0.0, 1.0, 1.0, 1.0, 1.0}) {
  MaterialParams mp;
  mp.d = d;
  return mp;
}

// Band-limited state with |m| <= 4 on n = 32: quadratic products stay inside
// the dealiased band and cubic ones below Nyquist, so the pointwise identity
// has no aliasing error.
SimState band_limited_state(unsigned seed, double amp) {
  GridSpec g{32, 2.0 * M_PI};
  std::mt19937_64 rng(seed);
  RealVectorField u = random_vector(g, rng, 4, true), ut = random_vector(g, rng, 4, true);
  scale(u, amp);
  scale(ut, amp);
  return make_state(u, ut);
}

SimState shifted(const SimState& s, const RealVectorField& utt, double h) {
  SimState o = s;
  axpy(h, s.ut, o.u);
  axpy(h, utt, o.ut);
  return o;
}

double l2(const RealScalarField& f) { return std::sqrt(l2_norm_sq(f) * f.grid.cell_volume()); }

std::vector<std::vector<int>> all_alphas() { return {{}, {0}, {1}, {2}}; }

}  // namespace

TEST(FluxDensities, ZeroStateGivesZeroDensities) {
  GridSpec g{16, 10.0};
  SimState s = make_state(RealVectorField(g), RealVectorField(g));
  for (const auto& a : all_alphas()) {
    FluxDensities f = flux_densities(s, cubic_material(), a);
    for (const RealScalarField* x : {&f.e1, &f.e2, &f.e3, &f.q2, &f.q3, &f.e, &f.q}) EXPECT_EQ(max_abs(*x), 0.0);
    for (const RealVectorField* x : {&f.p1, &f.p2, &f.p3, &f.p}) EXPECT_EQ(max_abs(*x), 0.0);
  }
}

TEST(FluxDensities, InvalidIndicesAndMaterialsAreRejected) {
  SimState s = band_limited_state(1, 0.1);
  EXPECT_THROW(flux_densities(s, cubic_material(), {0, 1}), std::invalid_argument);
  EXPECT_THROW(flux_densities(s, cubic_material(), {3}), std::invalid_argument);
  EXPECT_THROW(flux_densities(s, cubic_material({0.5, 1.0, 0.0, 0.0, 0.0}), {}), std::invalid_argument);
}

TEST(FluxDensities, LinearMaterialLeavesOnlyFirstGroup) {
  SimState s = band_limited_state(2, 0.3);
  for (const auto& a : all_alphas()) {
    FluxDensities f = flux_densities(s, MaterialParams{}, a);
    for (const RealScalarField* x : {&f.e2, &f.e3, &f.q2, &f.q3, &f.q}) EXPECT_EQ(max_abs(*x), 0.0);
    EXPECT_EQ(max_abs(f.p2), 0.0);
    EXPECT_EQ(max_abs(f.p3), 0.0);
    EXPECT_EQ(max_abs(add(f.e, f.e1, -1.0)), 0.0);
    EXPECT_GT(max_abs(f.e1), 0.0);
  }
}

TEST(FluxDensities, FirstEnergyIntegratesToCalE1) {
  SimState s = band_limited_state(3, 0.2);
  const MaterialParams mp = cubic_material();
  SpectralVectorField U = forward_transform(s.u), Ut = forward_transform(s.ut);
  for (const auto& a : all_alphas()) {
    SpectralVectorField V = U, Vt = Ut;
    for (int ax : a)
      for (int c = 0; c < 3; ++c) {
        V[c] = spectral_derivative(V[c], ax);
        Vt[c] = spectral_derivative(Vt[c], ax);
      }
    const double expect = spectral_energy1(SpectralPair(V, Vt), mp);
    FluxDensities f = flux_densities(s, mp, a);
    EXPECT_NEAR(integrate(f.e1), expect, 1e-12 * expect);
    for (std::size_t i = 0; i < f.e1.size(); ++i) ASSERT_GE(f.e1[i], 0.0);
  }
}

// Index-by-index evaluation of every density at a few points, with the flux
// p3 written in its long form (one d5 product listed twice) plus the single
// correcting term that restores the pointwise identity.
TEST(FluxDensities, MatchesNaiveSummation) {
  SimState s = band_limited_state(4, 0.2);
  const MaterialParams mp = cubic_material({0.0, 0.7, -0.4, 1.3, 0.9});
  const double c1 = mp.c1, c2 = mp.c2, d2 = mp.d2(), s1 = mp.d3() + 0.5 * mp.d4(), d5 = mp.d5();
  for (const auto& a : all_alphas()) {
    const double c = a.empty() ? 1.0 : 2.0;
    RealVectorField v = s.u, vt = s.ut;
    for (int ax : a)
      for (int k = 0; k < 3; ++k) {
        v[k] = derivative(v[k], ax);
        vt[k] = derivative(vt[k], ax);
      }
    RealScalarField Du[3][3], Dut[3][3], Dv[3][3];
    for (int k = 0; k < 3; ++k)
      for (int i = 0; i < 3; ++i) {
        Du[k][i] = derivative(s.u[k], i);
        Dut[k][i] = derivative(s.ut[k], i);
        Dv[k][i] = derivative(v[k], i);
      }
    FluxDensities f = flux_densities(s, mp, a);
    for (std::size_t p : {std::size_t(0), std::size_t(777), std::size_t(12345), std::size_t(30000)}) {
      auto du = [&](int k, int i) { return Du[k][i][p]; };
      auto dut = [&](int k, int i) { return Dut[k][i][p]; };
      auto dv = [&](int k, int i) { return Dv[k][i][p]; };
      auto w = [&](int k) { return vt[k][p]; };
      auto Q = [](auto df, auto dg, int i, int j) { return df(i) * dg(j) - df(j) * dg(i); };
      auto grad = [](auto D, int k) { return [D, k](int i) { return D(k, i); }; };

      double e1 = 0, divv = 0;
      for (int k = 0; k < 3; ++k) {
        e1 += w(k) * w(k);
        divv += dv(k, k);
        for (int i = 0; i < 3; ++i) e1 += c2 * c2 * dv(k, i) * dv(k, i);
      }
      e1 = 0.5 * (e1 + (c1 * c1 - c2 * c2) * divv * divv);

      const double divu = du(0, 0) + du(1, 1) + du(2, 2), divut = dut(0, 0) + dut(1, 1) + dut(2, 2);
      auto curl_of = [](auto D) {
        return std::array<double, 3>{D(2, 1) - D(1, 2), D(0, 2) - D(2, 0), D(1, 0) - D(0, 1)};
      };
      auto cu = curl_of(du), cv = curl_of(dv), cut = curl_of(dut);
      double e2 = 0, q2 = 0, cucv = 0;
      for (int i = 0; i < 3; ++i) {
        e2 += -c * d2 * cv[i] * (0.5 * divu * cv[i] + cu[i] * divv);
        q2 += c * d2 * cv[i] * (0.5 * divut * cv[i] + cut[i] * divv);
        cucv += cu[i] * cv[i];
      }
      std::array<double, 3> in{}, p2{};
      for (int i = 0; i < 3; ++i) in[i] = divu * cv[i] + cu[i] * divv;
      for (int i = 0; i < 3; ++i) {
        const int j = (i + 1) % 3, k = (i + 2) % 3;
        p2[i] = c * d2 * (w(i) * cucv + w(j) * in[k] - w(k) * in[j]);
      }

      double e3 = 0, q3 = 0;
      std::array<double, 3> p3{};
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
          for (int k = 0; k < 3; ++k) {
            e3 += c * s1 * (dv(k, k) * Q(grad(du, j), grad(dv, i), i, j) - dv(i, k) * Q(grad(du, k), grad(dv, j), i, j));
            e3 += c / 2 * d5 *
                  (dv(k, j) * Q(grad(du, k), grad(dv, i), i, j) - dv(k, j) * Q(grad(du, i), grad(dv, k), i, j) -
                   du(k, j) * Q(grad(dv, i), grad(dv, k), i, j));
            q3 += c * s1 *
                  (-dv(k, k) * Q(grad(dut, j), grad(dv, i), i, j) + dv(i, k) * Q(grad(dut, k), grad(dv, j), i, j));
            q3 += c / 2 * d5 *
                  (-dv(k, j) * Q(grad(dut, k), grad(dv, i), i, j) + dv(k, j) * Q(grad(dut, i), grad(dv, k), i, j) +
                   dut(k, j) * Q(grad(dv, i), grad(dv, k), i, j));
            p3[i] += c * s1 * (2 * du(j, j) * dv(k, k) * w(i) - du(k, j) * dv(i, k) * w(j) - du(i, j) * dv(j, k) * w(k));
            p3[i] += c / 2 * d5 *
                     (2 * du(k, j) * w(i) * dv(k, j) - du(k, j) * w(j) * dv(k, i) - du(k, j) * w(k) * dv(i, j) -
                      du(k, j) * w(k) * dv(j, i) - du(k, i) * w(j) * dv(k, j) + 2 * du(k, i) * w(k) * dv(j, j) -
                      du(k, i) * w(j) * dv(j, k) - du(k, i) * w(j) * dv(k, j) - du(i, k) * w(j) * dv(j, k) +
                      2 * du(k, k) * w(j) * dv(j, i));
            p3[i] += c / 2 * d5 * du(k, i) * dv(k, j) * w(j);
          }

      const double tol = 1e-12;
      EXPECT_NEAR(f.e1[p], e1, tol);
      EXPECT_NEAR(f.e2[p], e2, tol);
      EXPECT_NEAR(f.e3[p], e3, tol);
      EXPECT_NEAR(f.q2[p], q2, tol);
      EXPECT_NEAR(f.q3[p], q3, tol);
      for (int i = 0; i < 3; ++i) {
        EXPECT_NEAR(f.p2[i][p], p2[i], tol);
        EXPECT_NEAR(f.p3[i][p], p3[i], tol) << "component " << i << " at point " << p;
      }
    }
  }
}

// ∂_t e is taken along (u_t, u_tt) with u_tt from the equation. e is a cubic
// polynomial in the state, so the five-point difference is exact up to round-off.
TEST(FluxDensities, IdentityHoldsPointwiseForBandLimitedFields) {
  const MaterialParams mp = cubic_material({0.0, 0.8, -0.6, 1.1, 1.4});
  SimState s = band_limited_state(5, 0.15);
  const RealVectorField utt = inverse_transform(time_jet(s, mp, 2).d[2]);
  const double h = 1e-3;
  for (const auto& a : all_alphas()) {
    auto e_at = [&](double step) { return flux_densities(shifted(s, utt, step), mp, a).e; };
    RealScalarField ep = e_at(h), em = e_at(-h), ep2 = e_at(2 * h), em2 = e_at(-2 * h);
    FluxDensities f = flux_densities(s, mp, a);
    RealScalarField divp = divergence(f.p);
    RealScalarField et(s.grid()), res(s.grid());
    for (std::size_t i = 0; i < et.size(); ++i) {
      et[i] = (8.0 * (ep[i] - em[i]) - (ep2[i] - em2[i])) / (12.0 * h);
      res[i] = et[i] + divp[i] - f.q[i];
    }
    const double scale = l2(et) + l2(f.q);
    EXPECT_GT(l2(f.q), 1e-2 * l2(et)) << "cubic terms too small to test";
    EXPECT_LE(l2(res), 1e-10 * scale) << "alpha size " << a.size();
  }
}

TEST(FluxDensities, FluxDivergenceIntegratesToZero) {
  SimState s = band_limited_state(6, 0.2);
  for (const auto& a : all_alphas()) {
    FluxDensities f = flux_densities(s, cubic_material(), a);
    RealScalarField divp = divergence(f.p);
    EXPECT_LE(std::abs(integrate(divp)), 1e-12 * integrate_abs(divp));
  }
}

TEST(FluxDensities, QuadraticAndCubicGroupsScaleWithAmplitude) {
  const MaterialParams mp = cubic_material();
  for (const auto& a : all_alphas()) {
    auto groups = [&](double eps) {
      FluxDensities f = flux_densities(band_limited_state(7, eps), mp, a);
      return std::array<double, 3>{integrate_abs(f.e1), integrate_abs(add(f.e2, f.e3)), integrate_abs(f.q)};
    };
    auto lo = groups(0.01), hi = groups(0.02);
    EXPECT_NEAR(std::log2(hi[0] / lo[0]), 2.0, 0.1);
    EXPECT_NEAR(std::log2(hi[1] / lo[1]), 3.0, 0.15);
    EXPECT_NEAR(std::log2(hi[2] / lo[2]), 3.0, 0.15);
  }
}

TEST(FluxDensities, EquivalenceConstantApproachesOneForSmallFields) {
  const MaterialParams mp = cubic_material();
  double prev = 1e300;
  for (double eps : {0.02, 0.01, 0.005}) {
    double worst = 1.0;
    for (const auto& a : all_alphas())
      worst = std::max(worst, pointwise_equivalence_constant(flux_densities(band_limited_state(8, eps), mp, a)));
    EXPECT_LT(worst, prev);
    EXPECT_LE(worst, 2.0);
    prev = worst;
  }
  EXPECT_LT(prev, 1.2);
}

TEST(FluxIdentity, FewerThanThreeFramesAreRejected) {
  GridSpec g{16, 10.0};
  RunRecord rec(g, MaterialParams{}, 0.1);
  rec.add_frame(make_state(RealVectorField(g), RealVectorField(g), 0.0));
  rec.add_frame(make_state(RealVectorField(g), RealVectorField(g), 0.1));
  EXPECT_THROW(flux_identity_residual(rec, MaterialParams{}, {}), std::invalid_argument);
}

TEST(FluxIdentity, LinearRunConservesAndPointwiseResidualIsSecondOrder) {
  GridSpec g{32, 32.0};
  const MaterialParams mp;
  auto [u0, u1] = bump_data(g, DataKind::mixed, 0.05, 3.0);
  RecordOptions o;
  o.dt = 0.25;
  o.steps = 8;
  RunRecord fine = record_run(make_state(u0, u1), mp, o);
  RunRecord coarse(g, mp, 2 * o.dt);
  for (std::size_t i = 0; i < fine.frames(); i += 2) coarse.add_frame(fine.frame(i));
  for (const auto& a : all_alphas()) {
    auto sf = flux_identity_residual(fine, mp, a), sc = flux_identity_residual(coarse, mp, a);
    for (const auto& x : sf) {
      EXPECT_EQ(x.Q, 0.0);
      EXPECT_LE(std::abs(x.dEdt), 1e-12 * integrate(flux_densities(fine.frame(1), mp, a).e));
    }
    // Compare at a common time (t = 1, fine index 3, coarse index 1).
    const double ratio = sc[1].pointwise / sf[3].pointwise;
    EXPECT_NEAR(sc[1].t, sf[3].t, 1e-12);
    EXPECT_NEAR(ratio, 4.0, 0.8);
  }
}

TEST(FluxIdentity, NonlinearRunResidualIsSmallAndSecondOrder) {
  GridSpec g{64, 32.0};
  const MaterialParams mp = cubic_material();
  auto [u0, u1] = bump_data(g, DataKind::mixed, 0.05, 3.0);
  RecordOptions o;
  o.dt = 0.01;
  o.steps = 12;
  RunRecord fine = record_run(make_state(u0, u1), mp, o);
  RunRecord coarse(g, mp, 2 * o.dt);
  for (std::size_t i = 0; i < fine.frames(); i += 2) coarse.add_frame(fine.frame(i));
  auto sf = flux_identity_residual(fine, mp, {}), sc = flux_identity_residual(coarse, mp, {});
  double worst = 0.0;
  for (const auto& x : sf) {
    worst = std::max(worst, x.rho);
    EXPECT_LE(x.equivalence, 2.0);
  }
  EXPECT_LE(worst, 1e-3);
  for (std::size_t k = 0; k < sc.size(); ++k) {
    const auto& f = sf[2 * k + 1];
    ASSERT_NEAR(f.t, sc[k].t, 1e-12);
    EXPECT_NEAR(sc[k].rho / f.rho, 4.0, 0.8) << "t=" << f.t;
  }
}

TEST(Rigidity, ZeroSolutionIsTheExactZeroCase) {
  std::vector<EnergySample> s{{0.0, 0.0, 0.0}, {0.5, 0.0, 0.0}, {1.0, 0.0, 0.0}};
  RigidityReport r = rigidity_check(s, 1.0, 1e-14);
  EXPECT_TRUE(r.exact_zero);
  EXPECT_EQ(r.ratio, 0.0);
  EXPECT_EQ(r.holds_fraction, 1.0);
}

TEST(Rigidity, InputsAreValidated) {
  std::vector<EnergySample> s{{0.0, 1.0, 1.0}, {0.5, 1.0, 1.0}, {1.0, 1.0, 1.0}};
  EXPECT_THROW(rigidity_check(s, 2.0, 1e-14), std::invalid_argument);
  EXPECT_THROW(rigidity_check(std::vector<EnergySample>{{0.0, 1.0, 1.0}}, 0.0, 1e-14), std::invalid_argument);
  std::vector<EnergySample> unordered{{0.0, 1.0, 1.0}, {0.0, 1.0, 1.0}, {1.0, 1.0, 1.0}};
  EXPECT_THROW(rigidity_check(unordered, 1.0, 1e-14), std::invalid_argument);
}

// Hand-evaluated trapezoid sums on three samples.
TEST(Rigidity, FittedConstantMatchesHandComputation) {
  const double E4 = 4.0;
  std::vector<EnergySample> s{{0.0, 3.0, E4}, {1.0, 2.5, E4}, {2.0, 1.0, E4}};
  auto f = [&](double t, double e) { return std::pow(1.0 + t * t, -0.75) * 2.0 * e; };
  const double I1 = 0.5 * (f(1.0, 2.5) + f(2.0, 1.0));
  const double I0 = I1 + 0.5 * (f(0.0, 3.0) + f(1.0, 2.5));
  RigidityReport r = rigidity_check(s, 2.0, 1e-14);
  const double C = std::max(1.0, 2.5 / (1.0 + I1));
  EXPECT_NEAR(r.C, C, 1e-14);
  EXPECT_NEAR(r.ratio, 3.0, 1e-15);
  ASSERT_EQ(r.rows.size(), 3u);
  EXPECT_NEAR(r.rows[0].rhs, C * (1.0 + I0), 1e-13);
  EXPECT_NEAR(r.rows[1].margin, C * (1.0 + I1) - 2.5, 1e-13);
  EXPECT_NEAR(r.rows[2].margin, C - 1.0, 1e-13);
}

TEST(Rigidity, ConstantIsClampedAtOne) {
  std::vector<EnergySample> s{{0.0, 1.0, 1.0}, {1.0, 0.1, 1.0}, {2.0, 1.0, 1.0}};
  RigidityReport r = rigidity_check(s, 2.0, 1e-14);
  EXPECT_EQ(r.C, 1.0);
}

TEST(Rigidity, LinearRunHasUnitRatio) {
  GridSpec g{32, 32.0};
  const MaterialParams mp;
  auto [u0, u1] = bump_data(g, DataKind::mixed, 0.01, 3.0);
  RecordOptions o;
  o.dt = 0.2;
  o.steps = 8;
  o.stride = 2;
  RunRecord rec = record_run(make_state(u0, u1), mp, o);
  RigidityReport r = rigidity_check(rec, mp, 1.6);
  EXPECT_FALSE(r.exact_zero);
  EXPECT_NEAR(r.ratio, 1.0, 1e-12);
  EXPECT_NEAR(r.C, 1.0, 1e-12);
  EXPECT_EQ(r.holds_fraction, 1.0);
  EXPECT_EQ(r.rows.size(), 5u);
}

TEST(Rigidity, ReportFileHasHeaderRowsAndRatio) {
  std::vector<EnergySample> s{{0.0, 3.0, 4.0}, {1.0, 2.5, 4.0}, {2.0, 1.0, 4.0}};
  RigidityReport r = rigidity_check(s, 2.0, 1e-14);
  auto dir = std::filesystem::temp_directory_path() / "elasto_rigidity_test";
  std::filesystem::create_directories(dir);
  write_rigidity_report(dir / "rigidity_report.csv", r);
  std::ifstream in(dir / "rigidity_report.csv");
  std::vector<std::string> lines;
  for (std::string l; std::getline(in, l);) lines.push_back(l);
  ASSERT_EQ(lines.size(), 5u);
  EXPECT_EQ(lines[0], "t,calE2,E4,lhs_431,rhs_431,margin");
  EXPECT_EQ(lines[4].rfind("# rigidity_ratio=3 ", 0), 0u) << lines[4];
  std::filesystem::remove_all(dir);
}

TEST(Rigidity, SmallNonlinearRunHasBoundedRatio) {
  GridSpec g{32, 32.0};
  const MaterialParams mp = cubic_material();
  auto [u0, u1] = bump_data(g, DataKind::mixed, 0.01, 3.0);
  RecordOptions o;
  o.dt = 0.5 * g.spacing() / mp.c1;
  o.steps = 12;
  o.stride = 3;
  RunRecord rec = record_run(make_state(u0, u1), mp, o);
  RigidityReport r = rigidity_check(rec, mp, rec.times().back());
  EXPECT_FALSE(r.exact_zero);
  EXPECT_LE(r.ratio, 10.0);
  EXPECT_GE(r.ratio, 0.1);
  EXPECT_GE(r.holds_fraction, 0.95);
}
