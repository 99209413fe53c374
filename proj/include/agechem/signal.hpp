#pragma once

#include <span>
#include <utility>
#include <vector>

namespace agechem {

// Nonnegative piecewise-constant dilution rate: value i holds on
// [breakpoint i, breakpoint i+1); the last value holds on the unbounded tail.
class DilutionSignal {
 public:
  DilutionSignal() : DilutionSignal({0.0}, {0.0}) {}
  DilutionSignal(std::vector<double> breakpoints, std::vector<double> values);

  static DilutionSignal constant(double value);
  // (start time, value) pairs; the first start must be 0.
  static DilutionSignal schedule(std::span<const std::pair<double, double>> steps);

  std::span<const double> breakpoints() const noexcept { return starts_; }
  std::span<const double> values() const noexcept { return values_; }

  friend bool operator==(const DilutionSignal&, const DilutionSignal&) = default;

 private:
  std::vector<double> starts_;
  std::vector<double> values_;
};

// Right-continuous evaluation.
double dilution_at(const DilutionSignal& d, double t);
// Exact integral over [t1, t2].
double dilution_integral(const DilutionSignal& d, double t1, double t2);
// Max over the pieces meeting [t1, t2).
double dilution_sup(const DilutionSignal& d, double t1, double t2);
// s -> D(tau + s).
DilutionSignal shift(const DilutionSignal& d, double tau);

}  // namespace agechem
