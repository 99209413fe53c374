#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "agechem/flow.hpp"
#include "agechem/model.hpp"
#include "agechem/signal.hpp"
#include "agechem/state.hpp"
#include "agechem/validate.hpp"

namespace agechem {

struct InitialSpec {
  enum class Kind { Exponential, Table };
  Kind kind = Kind::Exponential;
  double s0 = 0.0;
  double c = 1.0;                    // exponential amplitude
  std::optional<AgeProfile> table;   // tabulated f0
};

struct OutputSpec {
  std::vector<double> sample_times;
  std::vector<double> snapshot_times;
  std::string dir = "out";
};

struct Scenario {
  ChemostatModel model{GrowthKinetics::monod(1.0, 1.0), AgeProfile::constant(0.0),
                       AgeProfile::constant(1.0), AgeProfile::constant(1.0), 1.0};
  InitialSpec initial;
  DilutionSignal dilution;
  double horizon = 1.0;
  Numerics numerics;
  OutputSpec output;
};

// INI-style text, see docs/config.md. Relative file: paths resolve against
// base_dir.
Scenario parse_scenario(const std::string& text, const std::string& base_dir = ".");
Scenario load_scenario(const std::string& path);

// Resolved scenario in the same format, all numbers at 17 digits and all
// profiles inline, so the text alone reproduces the run.
std::string render_scenario(const Scenario& sc);

// Initial state on the dt grid; exponential states are re-solved for
// compatibility, tables are resampled.
ChemostatState build_initial_state(const Scenario& sc);

struct ValidationSummary {
  double max_renewal_excess = 0.0;  // <= 0 passes
  EnvelopeReport envelopes;
  std::size_t samples = 0;
  std::size_t samples_in_x = 0;
  double max_contraction_ratio = 0.0;
  std::size_t windows = 0;
  std::size_t windows_below_guarantee = 0;
  double min_s = 0.0;
  double max_s = 0.0;
  std::vector<std::pair<std::string, double>> weak_form;  // at T, when history was kept
  std::optional<MomentReport> moment;
  bool passed() const;
};

ValidationSummary summarize(const Trajectory& traj, const ChemostatModel& model, const DilutionSignal& d);
std::string render_validation_text(const ValidationSummary& v);
std::string render_validation_kv(const ValidationSummary& v);

struct RunResult {
  Trajectory trajectory;
  ValidationSummary validation;
  std::vector<std::string> files;
};

// Writes manifest.ini, timeseries.csv, snapshot_*.csv and validation.txt
// into out_dir (created if missing); with_kv adds validation.kv and the
// weak-form battery.
RunResult run_scenario(const Scenario& sc, const std::string& out_dir, bool with_kv = false);

struct RefineLevel {
  double dt = 0.0;
  std::vector<double> weak_form;  // one per battery function, at T
  double gap_to_next = 0.0;       // metric to the next finer level at T
  ChemostatState terminal;
};

struct RefineTable {
  std::vector<std::string> functions;
  std::vector<RefineLevel> levels;
  std::vector<std::vector<double>> orders;  // [level pair][function]
  std::vector<double> gap_orders;
  double richardson_gap = 0.0;  // extrapolated error of the finest level
};

// dts must be strictly decreasing (at least 3).
RefineTable refine_study(const Scenario& sc, std::span<const double> dts, int threads = 1);
std::vector<double> halving_levels(double dt, int levels);
std::string render_refine_table(const RefineTable& t);

struct PerturbReport {
  double epsilon = 0.0;
  DependenceReport dependence;
  double terminal_distance = 0.0;
};

// epsilon in (0, 0.1): S0 and C scaled by 1 + epsilon, decay rate re-solved.
PerturbReport perturb_experiment(const Scenario& sc, double epsilon, int threads = 1);
std::string render_perturb_report(const PerturbReport& r);

struct OracleComparison {
  double max_rel_error_n = 0.0;
  double max_rel_error_s = 0.0;
  double seconds = 0.0;
  bool passed = false;  // both errors <= 1e-3
};

// Moment-closure comparison; configuration error unless k, beta, q are
// constant.
OracleComparison compare_with_moment_oracle(const Scenario& sc);
std::string render_oracle_comparison(const OracleComparison& c);

struct MutualConvergence {
  std::vector<double> dts;
  std::vector<double> gaps;           // metric between the two solvers at T
  std::vector<double> relative_gaps;  // gap / (||f[T]||_1 + S(T))
  std::vector<double> orders;         // log of successive gap ratios over log dt ratio
  double overall_order = 0.0;         // coarsest against finest
  bool monotone = false;
};

// Fixed-point solver against the upwind oracle on each dt.
MutualConvergence compare_with_upwind(const Scenario& sc, std::span<const double> dts, int threads = 1);
std::string render_mutual_convergence(const MutualConvergence& m);

// Runs fn(i) for i in [0, n) on up to `threads` worker threads.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

}  // namespace agechem
