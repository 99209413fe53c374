#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "agechem/model.hpp"
#include "agechem/signal.hpp"
#include "agechem/state.hpp"

namespace agechem {

// Model rates sampled on the solver's age grid a_i = i * spacing. The
// cumulative mortality is exact, so survival between nodes carries no
// quadrature error.
struct AgeTables {
  double spacing = 0.0;
  std::vector<double> k;
  std::vector<double> q;
  std::vector<double> cum_beta;
  std::vector<double> k_tilde;  // k(a) exp(-B(a))
  std::vector<double> q_tilde;

  static AgeTables build(const ChemostatModel& model, double spacing, std::size_t nodes);

  std::size_t size() const noexcept { return k.size(); }
  double survival(std::size_t i1, std::size_t i2) const;
};

// Constant K of the window-length formula, assembled from sup norms of k, q
// and the growth constants.
double window_constant(const ChemostatModel& model);

// Guaranteed window length min(s, S_in - s) / (2 K S_in (r + 1)), clamped to (0, 1].
double max_window(const ChemostatModel& model, double s0, double r);

struct WindowKernels {
  double dt = 0.0;
  std::size_t steps = 0;
  std::vector<double> g_bar;         // forcing of the birth integral, t_j = j dt
  std::vector<double> h_bar;         // forcing of the consumption integral
  std::vector<double> b;             // exp(-int_0^t D)
  std::vector<double> one_minus_b;   // 1 - b without cancellation
  std::vector<double> cum_dilution;  // int_0^t D
  std::vector<double> k_tilde;       // on the window's age nodes 0..steps
  std::vector<double> q_tilde;
};

WindowKernels window_kernels(const ChemostatModel& model, const DilutionSignal& d,
                             const ChemostatState& state0, double delta, double dt);
WindowKernels window_kernels(const AgeTables& tables, const DilutionSignal& d,
                             const ChemostatState& state0, std::size_t steps);

struct OperatorImage {
  std::vector<double> t1;
  std::vector<double> t2;
};

// The Volterra operator (T1, T2) on the window grid: trapezoid convolutions
// with inner integrals of T2 shared across the outer sweep.
OperatorImage apply_T(const ChemostatModel& model, const WindowKernels& kernels,
                      std::span<const double> y, std::span<const double> z, double s0);

struct SolveOptions {
  double tol_fp = -1.0;  // negative: 1e-12 * (1 + R)
  int max_iter = 200;
  double ball_slack = 0.1;
  // Guaranteed window length when the caller already knows it; negative
  // means compute it from a one-unit lookahead of D.
  double guaranteed_delta = -1.0;
};

struct WindowDiagnostics {
  int iterations = 0;
  double final_update = 0.0;
  double contraction_ratio = 0.0;
  double theoretical_ratio = 0.0;  // Lipschitz bound of T on the ball
  double ball_radius = 0.0;
  double ball_norm = 0.0;  // ||y|| + ||z|| at the fixed point
  double guaranteed_delta = 0.0;
  bool below_guarantee = false;
  std::vector<double> update_norms;
};

struct WindowSolution {
  double delta = 0.0;
  double dt = 0.0;
  std::size_t steps = 0;
  double s0 = 0.0;
  std::vector<double> y, z, x, s;
  std::vector<double> b;
  std::vector<double> cum_dilution;
  AgeProfile initial;  // f0 of the window
  WindowDiagnostics diagnostics;

  // f(t_j, a_i) for i = 0 .. n0 + j, straight from the characteristics formula.
  std::vector<double> density(std::size_t j, const AgeTables& tables) const;
  ChemostatState state_at(std::size_t j, const AgeTables& tables) const;
};

WindowSolution solve_window(const ChemostatModel& model, const DilutionSignal& d,
                            const ChemostatState& state0, double delta, double dt,
                            const SolveOptions& options = {});
WindowSolution solve_window(const ChemostatModel& model, const AgeTables& tables,
                            const DilutionSignal& d, const ChemostatState& state0,
                            std::size_t steps, const SolveOptions& options = {});

// f(t, a) from the boundary series x (node spacing dt, linear in between)
// and the initial profile f0.
double reconstruct_density(const ChemostatModel& model, const DilutionSignal& d,
                           std::span<const double> x, double dt, const AgeProfile& f0, double t,
                           double a);

}  // namespace agechem
