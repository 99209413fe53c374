#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <vector>

#include "agechem/model.hpp"
#include "agechem/signal.hpp"
#include "agechem/state.hpp"
#include "agechem/window_solver.hpp"

namespace agechem {

struct Numerics {
  double dt = 0.01;          // time step, equal to the age spacing
  double tol_fp = -1.0;      // negative: 1e-12 * (1 + R) per window
  int max_iter = 200;
  double delta_cap = 0.5;    // upper bound on a window length
  double eps_tail_rel = 1e-10;
  double eps_tail_abs = -1.0;  // positive: overrides eps_tail_rel * sup f0
  double tol_compat = 1e-8;
  // Fail with a refine-grid error when the guaranteed window is shorter
  // than dt. Otherwise such a window takes one dt step and is flagged.
  bool strict_window = false;
  bool keep_history = false;  // store the profile at every node
};

struct WindowRecord {
  std::size_t start_node = 0;
  std::size_t steps = 0;
  double start_time = 0.0;
  double delta = 0.0;
  WindowDiagnostics diagnostics;
};

// Per-node series on the lattice t_j = j dt, plus window records and the
// states kept for later checks.
struct Trajectory {
  double dt = 0.0;
  std::vector<double> t;
  std::vector<double> s;
  std::vector<double> mass;        // ||f[t]||_1
  std::vector<double> boundary;    // f(t, 0)
  std::vector<double> dilution;    // D(t)
  std::vector<double> renewal_residual;
  std::vector<double> renewal_tolerance;
  std::vector<WindowRecord> windows;
  ChemostatState initial;
  ChemostatState terminal;
  std::map<std::size_t, ChemostatState> samples;  // keyed by node
  std::vector<AgeProfile> history;                // every node, when kept
  double eps_tail = 0.0;
  double tol_compat = 0.0;

  bool empty() const noexcept { return t.empty(); }
  std::size_t nodes() const noexcept { return t.size(); }
  double horizon() const { return t.empty() ? 0.0 : t.back(); }

  int total_iterations() const;
  double max_renewal_excess() const;  // max of residual - tolerance
  double min_s() const;
  double max_s() const;
  bool has_state(std::size_t node) const;
  // Stored state at a node: a sample, or a history entry.
  ChemostatState state(std::size_t node) const;
  std::size_t node_of(double time) const;  // argument error off the lattice
};

// Index j with t = j dt; argument error when t is off the lattice.
std::size_t lattice_node(double t, double dt);

// Global solution on [0, T] by consecutive windows. sample_times are kept as
// states in addition to 0 and T; all must lie on the dt lattice.
Trajectory advance(const ChemostatModel& model, const DilutionSignal& d, const ChemostatState& state0,
                   double horizon, const Numerics& numerics,
                   std::span<const double> sample_times = {});

// Terminal state of advance(); t = 0 returns state0 unchanged.
ChemostatState flow_map(const ChemostatModel& model, const DilutionSignal& d,
                        const ChemostatState& state0, double t, const Numerics& numerics);

// Splices second after first. second must start from first's terminal state.
Trajectory concat(const Trajectory& first, const Trajectory& second);

}  // namespace agechem
