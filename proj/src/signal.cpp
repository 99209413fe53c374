#include "agechem/signal.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "agechem/error.hpp"

namespace agechem {

DilutionSignal::DilutionSignal(std::vector<double> breakpoints, std::vector<double> values)
    : starts_(std::move(breakpoints)), values_(std::move(values)) {
  if (starts_.empty() || starts_.size() != values_.size()) {
    fail(ErrorCode::Argument, "dilution signal needs one value per breakpoint");
  }
  if (starts_.front() != 0.0) fail(ErrorCode::Argument, "dilution signal must start at t = 0");
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!(values_[i] >= 0.0) || !std::isfinite(values_[i])) {
      std::ostringstream os;
      os << "dilution value " << i << " must be nonnegative and finite, got " << values_[i];
      fail(ErrorCode::Argument, os.str());
    }
    if (i > 0 && !(starts_[i] > starts_[i - 1])) {
      fail(ErrorCode::Argument, "dilution breakpoints must be strictly increasing");
    }
    if (!std::isfinite(starts_[i])) fail(ErrorCode::Argument, "dilution breakpoint not finite");
  }
}

DilutionSignal DilutionSignal::constant(double value) { return DilutionSignal({0.0}, {value}); }

DilutionSignal DilutionSignal::schedule(std::span<const std::pair<double, double>> steps) {
  std::vector<double> starts, values;
  for (const auto& [t, v] : steps) {
    starts.push_back(t);
    values.push_back(v);
  }
  return DilutionSignal(std::move(starts), std::move(values));
}

namespace {

std::size_t piece_index(std::span<const double> starts, double t) {
  const auto it = std::upper_bound(starts.begin(), starts.end(), t);
  return static_cast<std::size_t>(it - starts.begin()) - 1;
}

}  // namespace

double dilution_at(const DilutionSignal& d, double t) {
  if (!(t >= 0.0)) fail(ErrorCode::Argument, "dilution evaluated at negative time");
  return d.values()[piece_index(d.breakpoints(), t)];
}

double dilution_integral(const DilutionSignal& d, double t1, double t2) {
  if (!(t1 >= 0.0) || t1 > t2) {
    std::ostringstream os;
    os << "dilution integral needs 0 <= t1 <= t2, got [" << t1 << ", " << t2 << "]";
    fail(ErrorCode::Argument, os.str());
  }
  const auto starts = d.breakpoints();
  const auto vals = d.values();
  double sum = 0.0;
  for (std::size_t i = piece_index(starts, t1); i < starts.size(); ++i) {
    if (starts[i] >= t2) break;
    const double lo = std::max(starts[i], t1);
    const double hi = i + 1 < starts.size() ? std::min(starts[i + 1], t2) : t2;
    if (hi > lo) sum += vals[i] * (hi - lo);
  }
  return sum;
}

double dilution_sup(const DilutionSignal& d, double t1, double t2) {
  if (!(t1 >= 0.0) || !(t1 < t2)) {
    std::ostringstream os;
    os << "dilution sup needs a nonempty interval, got [" << t1 << ", " << t2 << ")";
    fail(ErrorCode::Argument, os.str());
  }
  const auto starts = d.breakpoints();
  const auto vals = d.values();
  double m = 0.0;
  for (std::size_t i = piece_index(starts, t1); i < starts.size() && starts[i] < t2; ++i) {
    m = std::max(m, vals[i]);
  }
  return m;
}

DilutionSignal shift(const DilutionSignal& d, double tau) {
  if (!(tau >= 0.0)) fail(ErrorCode::Argument, "shift needs tau >= 0");
  if (tau == 0.0) return d;
  const auto starts = d.breakpoints();
  const auto vals = d.values();
  std::vector<double> s, v;
  for (std::size_t i = piece_index(starts, tau); i < starts.size(); ++i) {
    s.push_back(s.empty() ? 0.0 : starts[i] - tau);
    v.push_back(vals[i]);
  }
  return DilutionSignal(std::move(s), std::move(v));
}

}  // namespace agechem
