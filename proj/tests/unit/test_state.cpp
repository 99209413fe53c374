#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "agechem/error.hpp"
#include "agechem/state.hpp"
#include "fixtures.hpp"

using namespace agechem;

namespace {

AgeProfile scaled(const AgeProfile& f, double c) {
  std::vector<double> v(f.values().begin(), f.values().end());
  for (double& x : v) x *= c;
  return AgeProfile(f.spacing(), std::move(v), f.extension());
}

ChemostatState random_state(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return {AgeProfile(0.1, std::move(v), Extension::Zero), u(rng)};
}

}  // namespace

TEST(L1Norm, ZeroProfile) { EXPECT_EQ(l1_norm(AgeProfile(0.1, std::vector<double>(50, 0.0), Extension::Zero)), 0.0); }

TEST(L1Norm, ExponentialAgainstClosedForm) {
  const auto f = fixtures::tabulate(0.01, 30.0, [](double a) { return std::exp(-a); }, Extension::Zero);
  EXPECT_NEAR(l1_norm(f), 1.0 - std::exp(-30.0), 1e-4);
  EXPECT_EQ(l1_norm(scaled(f, 2.0)), 2.0 * l1_norm(f));
}

TEST(Metric, Axioms) {
  std::mt19937_64 rng(7);
  const auto a = random_state(rng, 40);
  EXPECT_EQ(metric(a, a), 0.0);
  auto b = a;
  b.s += 0.1;
  EXPECT_NEAR(metric(a, b), 0.1, 1e-15);
  for (int trial = 0; trial < 100; ++trial) {
    const auto x = random_state(rng, 30 + trial % 7);
    const auto y = random_state(rng, 30 + trial % 5);
    const auto z = random_state(rng, 30 + trial % 3);
    EXPECT_LE(metric(x, z), metric(x, y) + metric(y, z) + 1e-12);
    EXPECT_NEAR(metric(x, y), metric(y, x), 1e-15);
  }
}

TEST(Metric, RejectsMismatchedSpacing) {
  const ChemostatState a{AgeProfile(0.1, {1.0, 1.0}, Extension::Zero), 0.5};
  const ChemostatState b{AgeProfile(0.2, {1.0, 1.0}, Extension::Zero), 0.5};
  EXPECT_THROW(metric(a, b), Error);
  EXPECT_NO_THROW(metric(a, b, true));
}

TEST(DecayRate, ConstantKernelClosedForm) {
  auto m = fixtures::constant_rate_model();
  m.k = AgeProfile::constant(2.0);
  EXPECT_NEAR(compatible_decay_rate(m, 1.0), 1.0, 1e-10);
  m.k = AgeProfile::constant(1.0);
  EXPECT_NEAR(compatible_decay_rate(m, 1.5), 0.6, 1e-10);
}

TEST(DecayRate, CompactKernelAgainstScan) {
  auto m = fixtures::constant_rate_model();
  m.k = fixtures::tabulate(0.01, 1.0, [](double a) { return 4.0 * a; }, Extension::Zero);
  const double s0 = 1.2;
  const double mu = m.mu(s0);
  // 4 a e^{-l a} on [0, 1] by composite Simpson with 2e4 panels.
  auto g = [&](double l) {
    const int n = 20000;
    double acc = 0.0;
    for (int i = 0; i <= n; ++i) {
      const double a = static_cast<double>(i) / n;
      const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
      acc += w * 4.0 * a * std::exp(-l * a);
    }
    return mu * acc / (3.0 * n) - 1.0;
  };
  double lo = -1.0;
  for (double l = 1e-6; l < 50.0; l += 1e-3) {
    if (g(l) < 0.0) {
      lo = l - 1e-3;
      break;
    }
  }
  ASSERT_GT(lo, -1.0);
  double hi = lo + 1e-3;
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) > 0.0 ? lo : hi) = mid;
  }
  EXPECT_NEAR(compatible_decay_rate(m, s0), 0.5 * (lo + hi), 1e-10);
}

TEST(DecayRate, ZeroGrowthIsDomainError) {
  const auto m = fixtures::constant_rate_model();
  try {
    compatible_decay_rate(m, 0.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Domain);
  }
}

TEST(Membership, CompatibleExponentialPasses) {
  const auto m = fixtures::constant_rate_model();
  const auto st = make_compatible_exponential(m, 1.0, 1.0, 0.01);
  const auto r = check_membership(st, m, 1e-8, 1e-9);
  EXPECT_TRUE(r.ok()) << r.residual << " > " << r.tolerance;
}

TEST(Membership, SubstrateAtInflowFails) {
  const auto m = fixtures::constant_rate_model();
  auto st = make_compatible_exponential(m, 1.0, 1.0, 0.01);
  st.s = m.s_in;
  const auto r = check_membership(st, m, 1e-8, 1e-9);
  EXPECT_FALSE(r.s_in_range);
  EXPECT_FALSE(r.ok());
}

TEST(Membership, ResidualMatchesDirectQuadrature) {
  const auto m = fixtures::age_dependent_model();
  const auto st = make_compatible_exponential(m, 1.0, 1.0, 0.01);
  const double h = st.f.spacing();
  // Renewal right side by an independent trapezoid loop.
  auto rhs = [&](const AgeProfile& f) {
    double acc = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
      const double w = (i == 0 || i + 1 == f.size()) ? 0.5 : 1.0;
      acc += w * m.k(static_cast<double>(i) * h) * f[i];
    }
    return m.mu(st.s) * acc * h;
  };
  const ChemostatState doubled{scaled(st.f, 2.0), st.s};
  const auto r = check_membership(doubled, m, 1e-8, 1e-9);
  EXPECT_NEAR(r.residual, std::abs(doubled.f[0] - rhs(doubled.f)), 1e-13);

  // Doubling the interior while keeping f(0) breaks the renewal condition.
  std::vector<double> v(doubled.f.values().begin(), doubled.f.values().end());
  v[0] = st.f[0];
  const ChemostatState skewed{AgeProfile(h, v, Extension::Zero), st.s};
  const auto rs = check_membership(skewed, m, 1e-8, 1e-9);
  EXPECT_FALSE(rs.compatible);
  EXPECT_NEAR(rs.residual, std::abs(skewed.f[0] - rhs(skewed.f)), 1e-13);
}

TEST(Membership, FirstNonpositiveNode) {
  const auto m = fixtures::constant_rate_model();
  const ChemostatState st{AgeProfile(0.1, {1.0, 0.5, 0.0, 0.2}, Extension::Zero), 1.0};
  const auto r = check_membership(st, m, 1e-8, 1.0);
  EXPECT_FALSE(r.positive);
  ASSERT_TRUE(r.first_nonpositive.has_value());
  EXPECT_EQ(*r.first_nonpositive, 2u);
}

TEST(Resample, PreservesLinearProfile) {
  const auto f = fixtures::tabulate(0.1, 3.0, [](double a) { return 2.0 - 0.5 * a; }, Extension::Zero);
  const auto g = resample(f, 0.05);
  EXPECT_EQ(g.size(), 61u);
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(g[i], 2.0 - 0.025 * static_cast<double>(i), 1e-12);
}
