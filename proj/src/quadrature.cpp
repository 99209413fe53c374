#include "agechem/quadrature.hpp"

#include <cmath>

namespace agechem {

double trapezoid(std::span<const double> v, double h) {
  if (v.size() < 2) return 0.0;
  double interior = 0.0;
  for (std::size_t i = 1; i + 1 < v.size(); ++i) interior += v[i];
  return h * (0.5 * (v.front() + v.back()) + interior);
}

double trapezoid_error_estimate(std::span<const double> v, double h) {
  const std::size_t intervals = v.size() < 2 ? 0 : v.size() - 1;
  if (intervals < 2) return 0.0;
  const std::size_t pairs = intervals / 2;
  double coarse = 0.0;
  for (std::size_t p = 0; p < pairs; ++p) coarse += h * (v[2 * p] + v[2 * p + 2]);
  double fine = trapezoid(v.subspan(0, 2 * pairs + 1), h);
  return std::abs(fine - coarse);
}

}  // namespace agechem
