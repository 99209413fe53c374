#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "agechem/flow.hpp"
#include "agechem/model.hpp"
#include "agechem/signal.hpp"
#include "agechem/state.hpp"

namespace agechem {

// A test function phi(t, a) with its derivative along characteristics,
// dphi/da + dphi/dt, and sup-norm bounds for both.
struct TestFunction {
  std::string name;
  std::function<double(double, double)> phi;
  std::function<double(double, double)> transport;
  double phi_bound = 0.0;
  double transport_bound = 0.0;
  bool age_only = false;  // then transport(t, a) = phi'(a)
};

TestFunction constant_one();
TestFunction exp_decay();         // e^{-a}
TestFunction rational_decay();    // 1 / (1 + a)
TestFunction exp_cos();           // e^{-a} cos t
// exp(-int_t^tau D~ - (B(a + tau - t) - B(a))) g(a + tau - t) with
// g(r) = e^{-r^2} and D~ = 0.3 on [0, tau/2), 0.6 after.
TestFunction characteristic_member(const ChemostatModel& model, double tau);
std::vector<TestFunction> test_battery(const ChemostatModel& model, double tau);

struct RenewalResidual {
  double residual = 0.0;
  double quadrature_estimate = 0.0;
};
RenewalResidual renewal_residual(const ChemostatModel& model, const ChemostatState& state);

// |LHS - RHS| of the integral identity at time t, trapezoid in s and a over
// the stored history. Needs a trajectory run with keep_history.
double weak_form_residual(const Trajectory& traj, const ChemostatModel& model, const DilutionSignal& d,
                          const TestFunction& phi, double t);

struct MomentReport {
  double max_residual = 0.0;
  double worst_time = 0.0;
  std::size_t nodes_checked = 0;
  std::size_t nodes_excluded = 0;  // stencils straddling a jump of D
};
// Moment identity for an age-only test function; left side by quadrature,
// right side by centered differences. Needs history.
MomentReport moment_residual(const Trajectory& traj, const ChemostatModel& model,
                             const DilutionSignal& d, const TestFunction& phi);

struct BoundSlack {
  double worst = 0.0;  // minimum of (bound - value) / scale over nodes
  double time = 0.0;
};

struct EnvelopeReport {
  BoundSlack mass;   // scale: the mass bound
  BoundSlack upper;  // scale: S_in
  BoundSlack lower;  // scale: S_in
  bool holds(double allowance = -1e-3) const {
    return mass.worst >= allowance && upper.worst >= allowance && lower.worst >= allowance;
  }
};
EnvelopeReport envelope_check(const Trajectory& traj, const ChemostatModel& model, const DilutionSignal& d);

struct DependenceReport {
  double chi = 0.0;
  double initial_distance = 0.0;
  double max_amplification = 0.0;  // max of metric(t) / (e^{chi t} metric(0))
  double worst_time = 0.0;
  std::size_t nodes_compared = 0;
  bool holds = false;
  std::vector<double> times;
  std::vector<double> distances;
};
// Gronwall bound metric(t) <= e^{chi t} metric(0) (1 + 1e-3) at every node
// where both trajectories stored a state.
DependenceReport dependence_check(const Trajectory& reference, const Trajectory& other,
                                  const ChemostatModel& model, const DilutionSignal& d);

struct SemigroupReport {
  double identity_distance = 0.0;
  bool causality_identical = false;
  double semigroup_distance = 0.0;
  double tolerance = 0.0;
  double measured_constant = 0.0;  // semigroup_distance / dt
  bool passed = false;
};
// tol < 0 selects 5e-6 + 1e-3 dt.
SemigroupReport semigroup_check(const ChemostatModel& model, const DilutionSignal& d,
                                const ChemostatState& state0, double t, double tau,
                                const Numerics& numerics, double tol = -1.0);

}  // namespace agechem
