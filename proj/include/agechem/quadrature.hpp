#pragma once

#include <cstddef>
#include <span>

namespace agechem {

// Composite trapezoid of node values with spacing h.
double trapezoid(std::span<const double> v, double h);

// |T_h - T_2h|: the difference between the trapezoid on the full grid and on
// every other node. Roughly three times the O(h^2) error of T_h.
double trapezoid_error_estimate(std::span<const double> v, double h);

// Weight of node i in the composite trapezoid over n nodes.
inline double trapezoid_weight(std::size_t i, std::size_t n, double h) {
  return (i == 0 || i + 1 == n) ? 0.5 * h : h;
}

}  // namespace agechem
