#pragma once

#include <cstddef>
#include <optional>

#include "agechem/model.hpp"

namespace agechem {

// An element of the state space: an age density on a uniform grid (zero
// past its last node) and a substrate level.
struct ChemostatState {
  AgeProfile f;
  double s = 0.0;

  friend bool operator==(const ChemostatState&, const ChemostatState&) = default;
};

double l1_norm(const AgeProfile& f);

// ||f1 - f2||_1 + |S1 - S2|. Grids must share the spacing; a shorter grid is
// zero-padded. With allow_resample, s2 is first interpolated onto s1's grid.
double metric(const ChemostatState& s1, const ChemostatState& s2, bool allow_resample = false);

// mu(S) * integral of k f over the state's grid (trapezoid), and its
// quadrature error estimate.
struct BirthIntegral {
  double value;
  double quadrature_estimate;
};
BirthIntegral birth_rate(const ChemostatModel& model, const ChemostatState& state);

struct MembershipReport {
  bool positive = false;
  bool tail_decay = false;
  bool s_in_range = false;
  bool compatible = false;
  double residual = 0.0;
  double tolerance = 0.0;  // tol_compat plus the quadrature estimate
  std::optional<std::size_t> first_nonpositive;

  bool ok() const { return positive && tail_decay && s_in_range && compatible; }
};

MembershipReport check_membership(const ChemostatState& state, const ChemostatModel& model,
                                  double tol_compat, double eps_tail);

// Positive root of 1 = mu(S0) * integral k(a) exp(-lambda a) da, found by
// bisection on [1e-8, 1e8] with the integral evaluated exactly for the
// piecewise-linear k.
double compatible_decay_rate(const ChemostatModel& model, double s0);

// f(a) = C exp(-lambda a) on [0, A0], A0 the first grid node where the tail
// drops below eps_tail_rel * C.
ChemostatState make_compatible_exponential(const ChemostatModel& model, double s0, double c,
                                           double spacing, double eps_tail_rel = 1e-10);

// Linear resampling onto a new spacing covering the same extent.
AgeProfile resample(const AgeProfile& f, double spacing);

}  // namespace agechem
