#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "agechem/error.hpp"
#include "agechem/io.hpp"
#include "agechem/scenario.hpp"

using namespace agechem;
namespace fs = std::filesystem;

namespace {

const char* kConstantRate = R"(# constant rates
[model]
kinetics = monod
mu_max = 1
K_S = 1
S_in = 2
beta = 0.1
k = 1
q = 1

[initial]
type = exponential
S0 = 1
C = 1

[dilution]
schedule = 0:0.5, 2:0.2

[run]
T = 1

[numerics]
dt = 0.02

[output]
sample_times = 0.5
snapshot_times = 0.5, 1
)";

const char* kAgeDependent = R"([model]
kinetics = monod
mu_max = 1.5
K_S = 0.8
S_in = 2
beta = grid:0.5:0.1,0.125,0.15,0.175,0.2
beta_extension = constant
k = grid:0.25:0,0.39,0.61,0.71,0.74,0.72,0.67,0.6,0.54,0.47,0.41,0.35,0.3,0.25,0.21,0.17,0.15,0.12,0.1,0.08,0.07,0.05,0.04,0.03,0.02,0.01,0
q = grid:0.5:0.5,0.7,0.82,0.89,0.93,0.96,0.98,0.99,1
q_extension = constant

[initial]
S0 = 1

[dilution]
schedule = 0:0.3, 0.5:0.6

[run]
T = 1

[numerics]
dt = 0.02
)";

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("agechem_unit_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string replace(std::string text, const std::string& from, const std::string& to) {
  const auto pos = text.find(from);
  if (pos != std::string::npos) text.replace(pos, from.size(), to);
  return text;
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return static_cast<ErrorCode>(0);
}

}  // namespace

TEST(Config, ParsesConstantRateScenario) {
  const auto sc = parse_scenario(kConstantRate);
  EXPECT_EQ(sc.model.s_in, 2.0);
  EXPECT_EQ(sc.model.beta.constant_value(), 0.1);
  EXPECT_EQ(sc.initial.kind, InitialSpec::Kind::Exponential);
  EXPECT_EQ(sc.dilution.breakpoints().size(), 2u);
  EXPECT_EQ(sc.horizon, 1.0);
  EXPECT_EQ(sc.numerics.dt, 0.02);
  EXPECT_EQ(sc.output.snapshot_times.size(), 2u);
}

TEST(Config, RenderRoundTrip) {
  for (const char* text : {kConstantRate, kAgeDependent}) {
    const auto sc = parse_scenario(text);
    const auto rendered = render_scenario(sc);
    EXPECT_EQ(render_scenario(parse_scenario(rendered)), rendered);
  }
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
  EXPECT_EQ(code_of([] { parse_scenario(replace(kConstantRate, "C = 1", "C = 1\ncolour = red")); }),
            ErrorCode::Config);
  EXPECT_EQ(code_of([] { parse_scenario(replace(kConstantRate, "kinetics = monod", "kinetics = tessier")); }),
            ErrorCode::Config);
  EXPECT_EQ(code_of([] { parse_scenario(replace(kConstantRate, "dt = 0.02", "dt = -1")); }), ErrorCode::Config);
  EXPECT_EQ(code_of([] { parse_scenario(replace(kConstantRate, "k = 1", "k = 0")); }), ErrorCode::Config);
}

TEST(Config, ProfileFromFile) {
  const auto dir = scratch("profile");
  {
    std::ofstream out(dir / "k.csv");
    out << "# age, k\n0, 0\n0.5, 1\n1.0, 0.5\n1.5, 0\n";
  }
  const auto sc = parse_scenario(replace(kConstantRate, "k = 1", "k = file:k.csv"), dir.string());
  EXPECT_EQ(sc.model.k.size(), 4u);
  EXPECT_DOUBLE_EQ(sc.model.k(0.75), 0.75);
  EXPECT_EQ(code_of([&] { parse_scenario(replace(kConstantRate, "k = 1", "k = file:none.csv"), dir.string()); }),
            ErrorCode::Io);
}

TEST(Io, ProfileTableValidation) {
  std::istringstream uneven("0 1\n0.1 2\n0.3 3\n");
  EXPECT_THROW(parse_profile_table(uneven, Extension::Zero, "uneven"), Error);
  std::istringstream late("0.1 1\n0.2 2\n");
  EXPECT_THROW(parse_profile_table(late, Extension::Zero, "late"), Error);
  std::istringstream ok("0,1\n0.1,2\n0.2,3\n");
  const auto p = parse_profile_table(ok, Extension::ConstantLast, "ok");
  EXPECT_DOUBLE_EQ(p(1.0), 3.0);
}

TEST(Io, SnapshotRoundTripExact) {
  const auto dir = scratch("snap");
  const ChemostatState st{AgeProfile(0.01, {1.0 / 3.0, 0.1, 2e-300, 0.7}, Extension::Zero), 1.0 / 7.0};
  write_snapshot((dir / "s.csv").string(), st, 0.25);
  double t = 0.0;
  const auto back = read_snapshot((dir / "s.csv").string(), &t);
  EXPECT_EQ(back, st);
  EXPECT_EQ(t, 0.25);
}

TEST(Run, WritesArtifactsDeterministically) {
  const auto sc = parse_scenario(kConstantRate);
  const auto a = scratch("run_a");
  const auto b = scratch("run_b");
  const auto res = run_scenario(sc, a.string());
  run_scenario(sc, b.string());
  for (const char* f : {"manifest.ini", "timeseries.csv", "validation.txt"}) EXPECT_TRUE(fs::exists(a / f)) << f;
  int snaps = 0;
  for (const auto& e : fs::directory_iterator(a)) snaps += e.path().filename().string().rfind("snapshot_", 0) == 0;
  EXPECT_EQ(snaps, 2);
  EXPECT_EQ(slurp(a / "timeseries.csv"), slurp(b / "timeseries.csv"));
  EXPECT_TRUE(res.validation.passed());
  const auto header = slurp(a / "timeseries.csv").substr(0, 12);
  EXPECT_EQ(header, "# t,S,N,x,D\n");
}

TEST(Run, ManifestReproducesRun) {
  const auto sc = parse_scenario(kAgeDependent);
  const auto a = scratch("manifest_a");
  const auto b = scratch("manifest_b");
  run_scenario(sc, a.string());
  run_scenario(load_scenario((a / "manifest.ini").string()), b.string());
  EXPECT_EQ(slurp(a / "timeseries.csv"), slurp(b / "timeseries.csv"));
}

TEST(Run, SubstrateAtInflowRejected) {
  const auto sc = parse_scenario(replace(kConstantRate, "S0 = 1", "S0 = 2"));
  try {
    run_scenario(sc, scratch("bad").string());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Domain);
    EXPECT_NE(std::string(e.what()).find("X-membership"), std::string::npos) << e.what();
  }
}

TEST(Refine, RejectsDegenerateLevels) {
  const auto sc = parse_scenario(kConstantRate);
  const double same[] = {0.02, 0.02, 0.01};
  EXPECT_THROW(refine_study(sc, same, 1), Error);
  const double two[] = {0.02, 0.01};
  EXPECT_THROW(refine_study(sc, two, 1), Error);
  EXPECT_THROW(halving_levels(0.02, 2), Error);
  EXPECT_EQ(halving_levels(0.02, 3), (std::vector<double>{0.02, 0.01, 0.005}));
}

TEST(Refine, ConstantRateOrders) {
  const auto sc = parse_scenario(kConstantRate);
  const auto dts = halving_levels(0.02, 3);
  const auto table = refine_study(sc, dts, 2);
  ASSERT_EQ(table.orders.size(), 2u);
  for (const auto& row : table.orders) {
    for (std::size_t f = 0; f < row.size(); ++f) EXPECT_GE(row[f], 1.0) << table.functions[f];
  }
  EXPECT_TRUE(std::isfinite(table.richardson_gap));
  EXPECT_GT(table.richardson_gap, 0.0);
  EXPECT_NE(render_refine_table(table).find("richardson"), std::string::npos);
}

TEST(Perturb, DegenerateAndOutOfRange) {
  const auto sc = parse_scenario(kConstantRate);
  EXPECT_EQ(code_of([&] { perturb_experiment(sc, 0.0); }), ErrorCode::Argument);
  const auto edge = parse_scenario(replace(kConstantRate, "S0 = 1", "S0 = 1.95"));
  EXPECT_EQ(code_of([&] { perturb_experiment(edge, 0.05); }), ErrorCode::Domain);
}

TEST(Perturb, BoundHoldsAndScalesLinearly) {
  const auto sc = parse_scenario(kAgeDependent);
  const auto big = perturb_experiment(sc, 1e-2, 2);
  const auto small = perturb_experiment(sc, 1e-3, 2);
  EXPECT_TRUE(big.dependence.holds);
  EXPECT_TRUE(small.dependence.holds);
  const double ratio = big.terminal_distance / small.terminal_distance;
  EXPECT_GE(ratio, 5.0);
  EXPECT_LE(ratio, 20.0);
}

TEST(OracleCompare, MomentNeedsConstantRates) {
  EXPECT_EQ(code_of([] { compare_with_moment_oracle(parse_scenario(kAgeDependent)); }), ErrorCode::Config);
  const auto c = compare_with_moment_oracle(parse_scenario(kConstantRate));
  EXPECT_TRUE(c.passed);
}

TEST(Parallel, RethrowsWorkerFailure) {
  std::vector<int> hit(8, 0);
  parallel_for(8, 3, [&](std::size_t i) { hit[i] = 1; });
  for (int h : hit) EXPECT_EQ(h, 1);
  EXPECT_THROW(parallel_for(4, 2, [](std::size_t i) {
                 if (i == 2) fail(ErrorCode::Numeric, "boom");
               }),
               Error);
}
