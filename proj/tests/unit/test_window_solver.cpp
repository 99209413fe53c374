#include <gtest/gtest.h>

#include <cmath>

#include "agechem/error.hpp"
#include "agechem/oracle.hpp"
#include "agechem/state.hpp"
#include "agechem/window_solver.hpp"
#include "fixtures.hpp"

using namespace agechem;

namespace {

double trap(const std::vector<double>& v, double h) {
  if (v.size() < 2) return 0.0;
  double acc = 0.5 * (v.front() + v.back());
  for (std::size_t i = 1; i + 1 < v.size(); ++i) acc += v[i];
  return acc * h;
}

}  // namespace

TEST(WindowLength, HandEvaluatedConstant) {
  const auto m = fixtures::constant_rate_model();
  EXPECT_NEAR(window_constant(m), 11.5, 1e-12);
  EXPECT_NEAR(max_window(m, 1.0, 0.0), 1.0 / 46.0, 1e-14);
}

TEST(WindowLength, MonotoneAndVanishingAtEdges) {
  const auto m = fixtures::age_dependent_model();
  double prev = max_window(m, 0.7, 0.0);
  for (double r = 0.5; r < 20.0; r += 0.5) {
    const double cur = max_window(m, 0.7, r);
    EXPECT_LE(cur, prev);
    prev = cur;
  }
  EXPECT_LT(max_window(m, 1e-9, 1.0), 1e-8);
  EXPECT_LT(max_window(m, m.s_in - 1e-9, 1.0), 1e-8);
}

TEST(Kernels, ForcingAtZeroIsBirthIntegral) {
  const auto m = fixtures::age_dependent_model();
  const auto st = make_compatible_exponential(m, 1.0, 1.0, 0.01);
  const auto k = window_kernels(m, DilutionSignal::constant(0.4), st, 0.1, 0.01);
  std::vector<double> kf(st.f.size());
  for (std::size_t i = 0; i < kf.size(); ++i) kf[i] = m.k(static_cast<double>(i) * 0.01) * st.f[i];
  EXPECT_NEAR(k.g_bar[0], trap(kf, 0.01), 1e-14);
}

TEST(Kernels, ForcingShiftInvariantWithoutMortality) {
  auto m = fixtures::constant_rate_model();
  m.beta = AgeProfile::constant(0.0);
  m.k = AgeProfile::constant(1.7);
  const auto st = make_compatible_exponential(m, 1.0, 2.0, 0.01);
  const auto k = window_kernels(m, DilutionSignal::constant(0.0), st, 0.5, 0.01);
  const double expect = 1.7 * l1_norm(st.f);
  for (double g : k.g_bar) EXPECT_NEAR(g, expect, 1e-12);
}

TEST(Kernels, ForcingAgainstFineQuadrature) {
  const auto m = fixtures::age_dependent_model();
  const double h = 0.01;
  const double lambda = compatible_decay_rate(m, 1.0);
  const auto st = make_compatible_exponential(m, 1.0, 1.0, h);
  const auto k = window_kernels(m, DilutionSignal::constant(0.3), st, 0.2, h);
  const double extent = st.f.extent();
  // Integrand f0(u) exp(-(B(u+t) - B(u))) k(u+t) on a 10x finer grid.
  for (std::size_t j = 0; j <= k.steps; j += 5) {
    const double t = static_cast<double>(j) * h;
    const double hf = h / 10.0;
    const auto n = static_cast<std::size_t>(std::llround(extent / hf));
    std::vector<double> v(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
      const double u = static_cast<double>(i) * hf;
      v[i] = std::exp(-lambda * u) * survival(m, u, u + t) * m.k(u + t);
    }
    EXPECT_NEAR(k.g_bar[j], trap(v, hf), 5.0 * h * h) << "t = " << t;
  }
}

TEST(Operator, EmptyIntegralsAtZero) {
  const auto m = fixtures::age_dependent_model();
  const auto st = make_compatible_exponential(m, 1.0, 1.0, 0.01);
  const auto k = window_kernels(m, DilutionSignal::constant(0.4), st, 0.1, 0.01);
  const std::vector<double> y(k.steps + 1, 0.3), z(k.steps + 1, -0.1);
  const auto img = apply_T(m, k, y, z, st.s);
  EXPECT_EQ(img.t1[0], 0.0);
  EXPECT_EQ(img.t2[0], 0.0);
}

TEST(Operator, FirstPicardIterateWithoutDilution) {
  const auto m = fixtures::age_dependent_model();
  const double h = 0.01;
  const auto st = make_compatible_exponential(m, 0.8, 1.0, h);
  const auto k = window_kernels(m, DilutionSignal::constant(0.0), st, 0.2, h);
  const std::size_t n = k.steps + 1;
  const std::vector<double> zero(n, 0.0);
  const auto img = apply_T(m, k, zero, zero, st.s);
  const double mu0 = m.mu(st.s);
  // I0(tau) = int_0^tau q~(a) mu(S0) g(tau - a) da, then T2 = -int mu (h + I0).
  std::vector<double> integrand(n);
  for (std::size_t j = 0; j < n; ++j) {
    std::vector<double> inner(j + 1);
    for (std::size_t i = 0; i <= j; ++i) inner[i] = k.q_tilde[i] * mu0 * k.g_bar[j - i];
    integrand[j] = mu0 * (k.h_bar[j] + trap(inner, h));
  }
  for (std::size_t j = 0; j < n; ++j) {
    const std::vector<double> part(integrand.begin(), integrand.begin() + static_cast<long>(j) + 1);
    EXPECT_NEAR(img.t2[j], -trap(part, h), 1e-13) << j;
  }
}

TEST(Operator, ConvergesUnderRefinement) {
  const auto m = fixtures::age_dependent_model();
  const auto d = DilutionSignal::constant(0.4);
  const double s0 = 1.0;
  const double lambda = compatible_decay_rate(m, s0);
  std::vector<double> t2_at_end;
  for (double h : {0.01, 0.005, 0.0025}) {
    const auto f = fixtures::tabulate(h, 40.0, [&](double a) { return std::exp(-lambda * a); }, Extension::Zero);
    const ChemostatState st{f, s0};
    const auto k = window_kernels(m, d, st, 0.2, h);
    const std::vector<double> y(k.steps + 1, 0.05), z(k.steps + 1, -0.02);
    t2_at_end.push_back(apply_T(m, k, y, z, s0).t2.back());
  }
  const double e1 = std::abs(t2_at_end[0] - t2_at_end[1]);
  const double e2 = std::abs(t2_at_end[1] - t2_at_end[2]);
  EXPECT_GT(e1 / e2, 3.0);
}

TEST(Solve, ContractionOnGuaranteedWindow) {
  for (const auto& m : {fixtures::constant_rate_model(), fixtures::age_dependent_model()}) {
    const auto st = make_compatible_exponential(m, 1.0, 1.0, 0.001);
    const double r = l1_norm(st.f) + 0.4;
    const double delta = std::floor(max_window(m, st.s, r) / 0.001) * 0.001;
    ASSERT_GT(delta, 0.0);
    const auto sol = solve_window(m, DilutionSignal::constant(0.4), st, delta, 0.001);
    EXPECT_LT(sol.diagnostics.contraction_ratio, 1.0);
    EXPECT_LT(sol.diagnostics.theoretical_ratio, 1.0);
    EXPECT_LE(sol.diagnostics.ball_norm, sol.diagnostics.ball_radius * 1.1);
  }
}

TEST(Solve, InitialValuesExact) {
  const auto m = fixtures::age_dependent_model();
  const auto st = make_compatible_exponential(m, 1.0, 1.0, 0.001);
  const auto sol = solve_window(m, DilutionSignal::constant(0.2), st, 0.01, 0.001);
  EXPECT_EQ(sol.y[0], 0.0);
  EXPECT_EQ(sol.z[0], 0.0);
  EXPECT_EQ(sol.s[0], st.s);
  const double tol = 1e-8 + birth_rate(m, st).quadrature_estimate;
  EXPECT_NEAR(sol.x[0], st.f[0], tol);
}

TEST(Solve, MatchesMomentOracleOnOneWindow) {
  const auto m = fixtures::constant_rate_model();
  const auto d = DilutionSignal::constant(0.0);
  const double dt = 1e-3;
  const auto st = make_compatible_exponential(m, 1.0, 1.0, dt);
  const auto sol = solve_window(m, d, st, 0.021, dt);
  const auto p = *constant_rate_params(m, d);
  const auto ode = moment_ode_oracle(p, l1_norm(st.f), st.s, 0.021, dt);
  ASSERT_EQ(ode.s.size(), sol.s.size());
  for (std::size_t j = 0; j < sol.s.size(); ++j) EXPECT_NEAR(sol.s[j], ode.s[j], 1e-4);
}

TEST(Solve, RejectsOffLatticeWindow) {
  const auto m = fixtures::constant_rate_model();
  const auto st = make_compatible_exponential(m, 1.0, 1.0, 0.01);
  EXPECT_THROW(solve_window(m, DilutionSignal::constant(0.1), st, 0.015, 0.01), Error);
}

TEST(Reconstruct, IdentityAndBoundary) {
  const auto m = fixtures::age_dependent_model();
  const auto d = DilutionSignal::constant(0.3);
  const double dt = 0.01;
  const auto st = make_compatible_exponential(m, 1.0, 1.0, dt);
  const auto sol = solve_window(m, d, st, 0.1, dt);
  for (double a : {0.0, 0.37, 2.0}) EXPECT_EQ(reconstruct_density(m, d, sol.x, dt, st.f, 0.0, a), st.f(a));
  // At t = 0 both branches meet; x(0) matches f0(0) only to quadrature accuracy.
  EXPECT_NEAR(sol.x[0], st.f[0], 1e-8 + birth_rate(m, st).quadrature_estimate);
  for (std::size_t j = 1; j < sol.x.size(); ++j) {
    const double t = static_cast<double>(j) * dt;
    EXPECT_NEAR(reconstruct_density(m, d, sol.x, dt, st.f, t, 0.0), sol.x[j], 1e-14 * (1.0 + sol.x[j]));
  }
}

TEST(Reconstruct, ClosedFormTransport) {
  auto m = fixtures::constant_rate_model();
  m.beta = AgeProfile::constant(0.0);
  const double dval = 0.35;
  const auto d = DilutionSignal::constant(dval);
  const double dt = 0.01;
  const auto st = make_compatible_exponential(m, 1.0, 1.0, dt);
  const auto sol = solve_window(m, d, st, 0.05, dt);
  for (double t : {0.01, 0.03, 0.05}) {
    for (double a : {0.05, 0.5, 3.0}) {
      EXPECT_NEAR(reconstruct_density(m, d, sol.x, dt, st.f, t, a), st.f(a - t) * std::exp(-dval * t), 1e-15);
    }
  }
}

TEST(Reconstruct, MatchesNodeDensity) {
  const auto m = fixtures::age_dependent_model();
  const auto d = DilutionSignal::constant(0.3);
  const double dt = 0.01;
  const auto st = make_compatible_exponential(m, 1.0, 1.0, dt);
  const auto sol = solve_window(m, d, st, 0.2, dt);
  const auto tables = AgeTables::build(m, dt, st.f.size() + sol.steps + 1);
  const auto dens = sol.density(sol.steps, tables);
  const double t = sol.delta;
  for (std::size_t i = 0; i < dens.size(); i += 7) {
    const double a = static_cast<double>(i) * dt;
    EXPECT_NEAR(dens[i], reconstruct_density(m, d, sol.x, dt, st.f, t, a), 1e-12 * (1.0 + dens[i])) << i;
  }
}
