#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "agechem/model.hpp"
#include "agechem/signal.hpp"

namespace fixtures {

template <class Fn>
agechem::AgeProfile tabulate(double h, double extent, Fn fn, agechem::Extension ext) {
  std::vector<double> v;
  const auto n = static_cast<std::size_t>(std::llround(extent / h));
  for (std::size_t i = 0; i <= n; ++i) v.push_back(fn(static_cast<double>(i) * h));
  return agechem::AgeProfile(h, std::move(v), ext);
}

inline agechem::ChemostatModel constant_rate_model() {
  using agechem::AgeProfile;
  return {agechem::GrowthKinetics::monod(1.0, 1.0), AgeProfile::constant(0.1), AgeProfile::constant(1.0),
          AgeProfile::constant(1.0), 2.0};
}

inline agechem::DilutionSignal step_dilution() {
  const std::pair<double, double> steps[] = {{0.0, 0.5}, {2.0, 0.2}};
  return agechem::DilutionSignal::schedule(steps);
}

inline agechem::ChemostatModel age_dependent_model() {
  using agechem::Extension;
  return {agechem::GrowthKinetics::monod(1.5, 0.8),
          tabulate(0.001, 20.0, [](double a) { return 0.1 + 0.05 * std::min(a, 10.0); }, Extension::ConstantLast),
          tabulate(0.001, 20.0, [](double a) { return 2.0 * a * std::exp(-a); }, Extension::Zero),
          tabulate(0.001, 20.0, [](double a) { return 0.5 + 0.5 * (1.0 - std::exp(-a)); }, Extension::ConstantLast),
          2.0};
}

inline agechem::DilutionSignal early_step_dilution() {
  const std::pair<double, double> steps[] = {{0.0, 0.3}, {0.5, 0.6}};
  return agechem::DilutionSignal::schedule(steps);
}

}  // namespace fixtures
