#pragma once

#include <optional>
#include <vector>

#include "agechem/model.hpp"
#include "agechem/signal.hpp"
#include "agechem/state.hpp"

namespace agechem {

// Constant k, beta, q reduce the model to two ODEs for the total mass N
// and the substrate S.
struct MomentOdeParams {
  double k0 = 0.0;
  double beta0 = 0.0;
  double q0 = 0.0;
  GrowthKinetics kinetics = GrowthKinetics::monod(1.0, 1.0);
  double s_in = 0.0;
  DilutionSignal d;
};

// The reduction applies only when all three rate profiles are constant.
std::optional<MomentOdeParams> constant_rate_params(const ChemostatModel& model,
                                                    const DilutionSignal& d);

struct MomentSeries {
  std::vector<double> t;
  std::vector<double> n;
  std::vector<double> s;
};

// Classical RK4 with step dt, split at the breakpoints of D. Output nodes
// are t_i = i dt (the last step may be shorter to land on T).
MomentSeries moment_ode_oracle(const MomentOdeParams& params, double n0, double s0, double horizon,
                               double dt);

struct UpwindResult {
  std::vector<double> t;
  std::vector<double> s;
  std::vector<double> n;
  ChemostatState terminal;
};

// First-order upwind on the characteristic grid (da = dt) with explicit
// Euler for reaction and substrate, and an implicit trapezoid for the birth
// boundary.
UpwindResult upwind_pde_oracle(const ChemostatModel& model, const DilutionSignal& d,
                               const ChemostatState& state0, double horizon, double dt);

}  // namespace agechem
