#include <gtest/gtest.h>

#include <cmath>

#include "agechem/error.hpp"
#include "agechem/flow.hpp"
#include "agechem/window_solver.hpp"
#include "fixtures.hpp"

using namespace agechem;

namespace {

Numerics numerics(double dt, bool history = false) {
  Numerics n;
  n.dt = dt;
  n.keep_history = history;
  return n;
}

void expect_same_series(const Trajectory& a, const Trajectory& b) {
  ASSERT_EQ(a.nodes(), b.nodes());
  for (std::size_t j = 0; j < a.nodes(); ++j) {
    EXPECT_EQ(a.t[j], b.t[j]) << j;
    EXPECT_EQ(a.s[j], b.s[j]) << j;
    EXPECT_EQ(a.mass[j], b.mass[j]) << j;
    EXPECT_EQ(a.boundary[j], b.boundary[j]) << j;
  }
  EXPECT_EQ(a.terminal, b.terminal);
}

}  // namespace

TEST(Lattice, NodeIndex) {
  EXPECT_EQ(lattice_node(0.3, 0.01), 30u);
  EXPECT_THROW(lattice_node(0.305, 0.01), Error);
}

TEST(Advance, ShortHorizonIsOneWindow) {
  const auto m = fixtures::constant_rate_model();
  const auto d = fixtures::step_dilution();
  const double dt = 0.001;
  const auto st = make_compatible_exponential(m, 1.0, 1.0, dt);
  const auto traj = advance(m, d, st, 0.005, numerics(dt));
  ASSERT_EQ(traj.windows.size(), 1u);
  EXPECT_FALSE(traj.windows[0].diagnostics.below_guarantee);
  const auto sol = solve_window(m, d, st, 0.005, dt);
  const auto tables = AgeTables::build(m, dt, st.f.size() + sol.steps + 1);
  EXPECT_EQ(traj.terminal.s, sol.s.back());
  EXPECT_LT(metric(traj.terminal, sol.state_at(sol.steps, tables)), 1e-15);
}

TEST(Advance, MassGrowthBound) {
  const auto m = fixtures::age_dependent_model();
  const auto d = fixtures::early_step_dilution();
  const auto st = make_compatible_exponential(m, 1.0, 1.0, 0.01);
  const auto traj = advance(m, d, st, 2.0, numerics(0.01));
  const double rate = growth_constants(m.mu, m.s_in).m_box * m.k.sup();
  for (std::size_t j = 0; j < traj.nodes(); ++j) {
    EXPECT_LE(traj.mass[j], std::exp(rate * traj.t[j]) * traj.mass[0] * (1.0 + 1e-12));
  }
}

TEST(Advance, RejectsInvalidInitialState) {
  const auto m = fixtures::constant_rate_model();
  auto st = make_compatible_exponential(m, 1.0, 1.0, 0.01);
  st.s = m.s_in;
  try {
    advance(m, fixtures::step_dilution(), st, 1.0, numerics(0.01));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Domain);
    EXPECT_NE(std::string(e.what()).find("X-membership"), std::string::npos);
  }
}

TEST(Advance, StrictWindowRefusesShortGuarantee) {
  const auto m = fixtures::constant_rate_model();
  const auto st = make_compatible_exponential(m, 1.0, 1.0, 0.05);
  auto n = numerics(0.05);
  n.strict_window = true;
  try {
    advance(m, fixtures::step_dilution(), st, 1.0, n);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::RefineGrid);
    EXPECT_NE(std::string(e.what()).find("at t = 0"), std::string::npos);
  }
}

TEST(FlowMap, IdentityAtZero) {
  const auto m = fixtures::age_dependent_model();
  const auto st = make_compatible_exponential(m, 1.0, 1.0, 0.01);
  EXPECT_EQ(flow_map(m, fixtures::early_step_dilution(), st, 0.0, numerics(0.01)), st);
}

TEST(FlowMap, CausalityBitIdentical) {
  const auto m = fixtures::age_dependent_model();
  const auto d = fixtures::early_step_dilution();
  const std::pair<double, double> steps[] = {{0.0, 0.3}, {0.5, 0.6}, {1.0, 2.5}};
  const auto altered = DilutionSignal::schedule(steps);
  const auto st = make_compatible_exponential(m, 1.0, 1.0, 0.01);
  EXPECT_EQ(flow_map(m, d, st, 1.0, numerics(0.01)), flow_map(m, altered, st, 1.0, numerics(0.01)));
}

TEST(FlowMap, SemigroupOnLattice) {
  const auto m = fixtures::age_dependent_model();
  const auto d = fixtures::early_step_dilution();
  auto n = numerics(0.01);
  const auto st = make_compatible_exponential(m, 1.0, 1.0, 0.01);
  n.eps_tail_abs = n.eps_tail_rel * st.f.sup();
  const auto direct = flow_map(m, d, st, 1.4, n);
  const auto mid = flow_map(m, d, st, 0.6, n);
  const auto composed = flow_map(m, shift(d, 0.6), mid, 0.8, n);
  EXPECT_LE(metric(direct, composed), 5e-6 + 1e-3 * 0.01);
}

TEST(Concat, EmptyIsNeutral) {
  const auto m = fixtures::constant_rate_model();
  const auto st = make_compatible_exponential(m, 1.0, 1.0, 0.01);
  const auto traj = advance(m, fixtures::step_dilution(), st, 0.5, numerics(0.01));
  expect_same_series(concat(traj, Trajectory{}), traj);
  expect_same_series(concat(Trajectory{}, traj), traj);
}

TEST(Concat, SplitAtWindowBoundaryReproduces) {
  const auto m = fixtures::age_dependent_model();
  const auto d = fixtures::early_step_dilution();
  const double dt = 0.01;
  auto n = numerics(dt);
  const auto st = make_compatible_exponential(m, 1.0, 1.0, dt);
  n.eps_tail_abs = n.eps_tail_rel * st.f.sup();
  const auto whole = advance(m, d, st, 2.0, n);
  ASSERT_GE(whole.windows.size(), 3u);
  const auto& cut = whole.windows[whole.windows.size() / 2];
  const double tc = static_cast<double>(cut.start_node) * dt;
  const auto first = advance(m, d, st, tc, n);
  const auto second = advance(m, shift(d, tc), first.terminal, 2.0 - tc, n);
  expect_same_series(concat(first, second), whole);
}

TEST(Concat, JunctionContinuity) {
  const auto m = fixtures::age_dependent_model();
  const auto d = fixtures::early_step_dilution();
  const double dt = 0.01;
  const auto st = make_compatible_exponential(m, 1.0, 1.0, dt);
  const auto first = advance(m, d, st, 1.0, numerics(dt, true));
  const auto second = advance(m, shift(d, 1.0), first.terminal, 1.0, numerics(dt, true));
  const auto joined = concat(first, second);
  const std::size_t j = first.nodes() - 1;
  EXPECT_LE(metric(joined.state(j - 1), joined.state(j + 1), true), 10.0 * dt);
}

TEST(Concat, RejectsMismatchedStart) {
  const auto m = fixtures::constant_rate_model();
  const auto st = make_compatible_exponential(m, 1.0, 1.0, 0.01);
  const auto a = advance(m, fixtures::step_dilution(), st, 0.3, numerics(0.01));
  const auto b = advance(m, fixtures::step_dilution(), st, 0.3, numerics(0.01));
  try {
    concat(a, b);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Splice);
  }
}

TEST(Trajectory, RenewalWithinTolerance) {
  const auto m = fixtures::age_dependent_model();
  const auto st = make_compatible_exponential(m, 1.0, 1.0, 0.01);
  const auto traj = advance(m, fixtures::early_step_dilution(), st, 2.0, numerics(0.01));
  EXPECT_LE(traj.max_renewal_excess(), 0.0);
}
