#include "agechem/state.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "agechem/error.hpp"
#include "agechem/quadrature.hpp"

namespace agechem {

double l1_norm(const AgeProfile& f) {
  std::vector<double> a(f.values().begin(), f.values().end());
  for (double& v : a) v = std::abs(v);
  return trapezoid(a, f.spacing());
}

namespace {

bool same_spacing(double h1, double h2) { return std::abs(h1 - h2) <= 1e-12 * std::max(h1, h2); }

}  // namespace

AgeProfile resample(const AgeProfile& f, double spacing) {
  const auto n = static_cast<std::size_t>(std::floor(f.extent() / spacing + 1e-9)) + 1;
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = f(static_cast<double>(i) * spacing);
  return AgeProfile(spacing, std::move(v), f.extension());
}

double metric(const ChemostatState& s1, const ChemostatState& s2, bool allow_resample) {
  const double h = s1.f.spacing();
  const AgeProfile* f2 = &s2.f;
  AgeProfile resampled;
  if (!same_spacing(h, s2.f.spacing())) {
    if (!allow_resample) {
      std::ostringstream os;
      os << "metric between states on different grids (" << h << " vs " << s2.f.spacing() << ")";
      fail(ErrorCode::Argument, os.str());
    }
    resampled = resample(s2.f, h);
    f2 = &resampled;
  }
  const std::size_t n = std::max(s1.f.size(), f2->size());
  std::vector<double> diff(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double a = i < s1.f.size() ? s1.f[i] : 0.0;
    const double b = i < f2->size() ? (*f2)[i] : 0.0;
    diff[i] = std::abs(a - b);
  }
  return trapezoid(diff, h) + std::abs(s1.s - s2.s);
}

BirthIntegral birth_rate(const ChemostatModel& model, const ChemostatState& state) {
  const double h = state.f.spacing();
  std::vector<double> kf(state.f.size());
  for (std::size_t i = 0; i < kf.size(); ++i) {
    kf[i] = model.k(static_cast<double>(i) * h) * state.f[i];
  }
  const double mu = model.mu(state.s);
  return {mu * trapezoid(kf, h), mu * trapezoid_error_estimate(kf, h)};
}

MembershipReport check_membership(const ChemostatState& state, const ChemostatModel& model,
                                  double tol_compat, double eps_tail) {
  MembershipReport r;
  r.positive = !state.f.empty();
  for (std::size_t i = 0; i < state.f.size(); ++i) {
    if (!(state.f[i] > 0.0)) {
      r.positive = false;
      r.first_nonpositive = i;
      break;
    }
  }
  r.tail_decay = !state.f.empty() && state.f.values().back() <= eps_tail;
  r.s_in_range = state.s > 0.0 && state.s < model.s_in;
  if (state.s >= 0.0 && std::isfinite(state.s) && !state.f.empty()) {
    const auto birth = birth_rate(model, state);
    r.residual = std::abs(state.f[0] - birth.value);
    r.tolerance = tol_compat + birth.quadrature_estimate;
    r.compatible = r.residual <= r.tolerance;
  }
  return r;
}

namespace {

// (1 - e^{-x}) / x and (1 - e^{-x}(1 + x)) / x^2, stable near zero.
double phi1(double x) {
  if (std::abs(x) < 1e-5) return 1.0 - x / 2.0 + x * x / 6.0;
  return -std::expm1(-x) / x;
}

double phi2(double x) {
  if (std::abs(x) < 1e-3) return 0.5 - x / 3.0 + x * x / 8.0 - x * x * x / 30.0;
  return (-std::expm1(-x) - x * std::exp(-x)) / (x * x);
}

// Exact integral of k(a) e^{-lambda a} over [0, inf) for piecewise-linear k.
double laplace_of_k(const AgeProfile& k, double lambda) {
  const double h = k.spacing();
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < k.size(); ++i) {
    const double a0 = static_cast<double>(i) * h;
    const double slope = (k[i + 1] - k[i]) / h;
    const double x = lambda * h;
    const double e0 = std::exp(-lambda * a0);
    sum += e0 * (k[i] * h * phi1(x) + slope * h * h * phi2(x));
  }
  if (k.extension() == Extension::ConstantLast) {
    sum += k.values().back() * std::exp(-lambda * k.extent()) / lambda;
  }
  return sum;
}

}  // namespace

double compatible_decay_rate(const ChemostatModel& model, double s0) {
  if (!(s0 > 0.0) || !(s0 < model.s_in)) {
    std::ostringstream os;
    os << "S0 = " << s0 << " outside the X-membership range (0, S_in = " << model.s_in << ")";
    fail(ErrorCode::Domain, os.str());
  }
  const double mu = model.mu(s0);
  auto excess = [&](double lambda) { return mu * laplace_of_k(model.k, lambda) - 1.0; };
  double lo = 1e-8;
  double hi = 1e8;
  const double f_lo = excess(lo);
  const double f_hi = excess(hi);
  if (!(f_lo > 0.0) || !(f_hi < 0.0)) {
    std::ostringstream os;
    os << "no compatible exponential state at S0 = " << s0
       << ": renewal equation has no sign change on [1e-8, 1e8]";
    fail(ErrorCode::Construction, os.str());
  }
  // Geometric bisection: the bracket spans sixteen decades.
  for (int it = 0; it < 400 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = std::sqrt(lo * hi);
    const double m = (mid <= lo || mid >= hi) ? 0.5 * (lo + hi) : mid;
    if (excess(m) > 0.0) {
      lo = m;
    } else {
      hi = m;
    }
  }
  return 0.5 * (lo + hi);
}

ChemostatState make_compatible_exponential(const ChemostatModel& model, double s0, double c,
                                           double spacing, double eps_tail_rel) {
  if (!(c > 0.0) || !std::isfinite(c)) fail(ErrorCode::Argument, "C must be positive");
  if (!(spacing > 0.0)) fail(ErrorCode::Argument, "grid spacing must be positive");
  if (!(eps_tail_rel > 0.0 && eps_tail_rel < 1.0)) {
    fail(ErrorCode::Argument, "eps_tail_rel must lie in (0, 1)");
  }
  const double lambda = compatible_decay_rate(model, s0);
  const double a0 = -std::log(eps_tail_rel) / lambda;
  const auto n = static_cast<std::size_t>(std::ceil(a0 / spacing)) + 1;
  std::vector<double> f(n);
  for (std::size_t i = 0; i < n; ++i) f[i] = c * std::exp(-lambda * static_cast<double>(i) * spacing);
  return ChemostatState{AgeProfile(spacing, std::move(f), Extension::Zero), s0};
}

}  // namespace agechem
