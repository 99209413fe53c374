#include "agechem/validate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "agechem/error.hpp"
#include "agechem/quadrature.hpp"

namespace agechem {

TestFunction constant_one() {
  return {"one", [](double, double) { return 1.0; }, [](double, double) { return 0.0; }, 1.0, 0.0,
          true};
}

TestFunction exp_decay() {
  return {"exp_decay", [](double, double a) { return std::exp(-a); },
          [](double, double a) { return -std::exp(-a); }, 1.0, 1.0, true};
}

TestFunction rational_decay() {
  return {"rational_decay", [](double, double a) { return 1.0 / (1.0 + a); },
          [](double, double a) { return -1.0 / ((1.0 + a) * (1.0 + a)); }, 1.0, 1.0, true};
}

TestFunction exp_cos() {
  return {"exp_cos", [](double t, double a) { return std::exp(-a) * std::cos(t); },
          [](double t, double a) { return -std::exp(-a) * (std::cos(t) + std::sin(t)); }, 1.0, 2.0,
          false};
}

TestFunction characteristic_member(const ChemostatModel& model, double tau) {
  if (!(tau > 0.0)) fail(ErrorCode::Argument, "characteristic test function needs tau > 0");
  const std::vector<double> starts{0.0, 0.5 * tau};
  const std::vector<double> rates{0.3, 0.6};
  DilutionSignal dtilde(starts, rates);
  const AgeProfile beta = model.beta;
  // Linear continuation of B below zero; only the a-derivative matters.
  auto cum = [beta](double x) { return x < 0.0 ? beta(0.0) * x : beta.cumulative(x); };
  auto phi = [dtilde, cum, tau](double t, double a) {
    const double shift = a + tau - t;
    const double dint = t <= tau ? dilution_integral(dtilde, t, tau) : -dilution_integral(dtilde, tau, t);
    return std::exp(-dint - (cum(shift) - cum(a))) * std::exp(-shift * shift);
  };
  auto transport = [dtilde, beta, phi](double t, double a) {
    return (dilution_at(dtilde, t) + beta(a)) * phi(t, a);
  };
  return {"characteristic", phi, transport, 1.0, 0.6 + beta.sup(), false};
}

std::vector<TestFunction> test_battery(const ChemostatModel& model, double tau) {
  return {constant_one(), exp_decay(), rational_decay(), exp_cos(), characteristic_member(model, tau)};
}

RenewalResidual renewal_residual(const ChemostatModel& model, const ChemostatState& state) {
  const auto birth = birth_rate(model, state);
  return {std::abs(state.f[0] - birth.value), birth.quadrature_estimate};
}

namespace {

void require_history(const Trajectory& traj, std::size_t upto) {
  if (traj.history.size() <= upto) {
    fail(ErrorCode::Argument, "check needs a trajectory run with keep_history");
  }
}

std::vector<double> node_ages(double dt, std::size_t n) {
  std::vector<double> a(n);
  for (std::size_t i = 0; i < n; ++i) a[i] = static_cast<double>(i) * dt;
  return a;
}

}  // namespace

double weak_form_residual(const Trajectory& traj, const ChemostatModel& model, const DilutionSignal& d,
                          const TestFunction& phi, double t) {
  const std::size_t last = traj.node_of(t);
  require_history(traj, last);
  if (last == 0) return 0.0;
  const double dt = traj.dt;
  const std::size_t width = traj.history[last].size();
  const auto ages = node_ages(dt, width);
  std::vector<double> beta(width);
  for (std::size_t i = 0; i < width; ++i) beta[i] = model.beta(ages[i]);

  auto pair_integral = [&](const AgeProfile& f, double s) {
    std::vector<double> v(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) v[i] = f[i] * phi.phi(s, ages[i]);
    return trapezoid(v, dt);
  };
  // Inner a-integral of ((beta + D) phi - transport) f at time s; s may sit
  // just left of a node so piecewise-constant coefficients take left limits.
  auto reaction = [&](const AgeProfile& f, double s) {
    const double ds = dilution_at(d, s);
    std::vector<double> v(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) {
      const double a = ages[i];
      v[i] = ((beta[i] + ds) * phi.phi(s, a) - phi.transport(s, a)) * f[i];
    }
    return trapezoid(v, dt);
  };

  const double eps = 1e-9 * dt;
  double boundary = 0.0;
  double volume = 0.0;
  for (std::size_t j = 0; j < last; ++j) {
    const double s0 = static_cast<double>(j) * dt;
    const double s1 = static_cast<double>(j + 1) * dt - eps;
    boundary += 0.5 * dt * (traj.boundary[j] * phi.phi(s0, 0.0) + traj.boundary[j + 1] * phi.phi(s1, 0.0));
    volume += 0.5 * dt * (reaction(traj.history[j], s0) + reaction(traj.history[j + 1], s1));
  }
  const double lhs = pair_integral(traj.history[0], 0.0) + boundary;
  const double rhs = pair_integral(traj.history[last], static_cast<double>(last) * dt) + volume;
  return std::abs(lhs - rhs);
}

MomentReport moment_residual(const Trajectory& traj, const ChemostatModel& model,
                             const DilutionSignal& d, const TestFunction& phi) {
  if (!phi.age_only) fail(ErrorCode::Argument, "moment identity needs an age-only test function");
  if (traj.nodes() < 3) fail(ErrorCode::Argument, "moment identity needs at least 3 nodes");
  require_history(traj, traj.nodes() - 1);
  const double dt = traj.dt;
  const std::size_t n = traj.nodes();
  const auto ages = node_ages(dt, traj.history.back().size());

  std::vector<double> moment(n);
  for (std::size_t j = 0; j < n; ++j) {
    const auto& f = traj.history[j];
    std::vector<double> v(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) v[i] = f[i] * phi.phi(0.0, ages[i]);
    moment[j] = trapezoid(v, dt);
  }

  const auto bps = d.breakpoints();
  MomentReport rep;
  for (std::size_t j = 1; j + 1 < n; ++j) {
    const double lo = static_cast<double>(j - 1) * dt;
    const double hi = static_cast<double>(j + 1) * dt;
    const bool straddles = std::any_of(bps.begin(), bps.end(), [&](double b) { return b > lo && b < hi; });
    if (straddles) {
      ++rep.nodes_excluded;
      continue;
    }
    const double tj = static_cast<double>(j) * dt;
    const double dj = dilution_at(d, tj);
    const auto& f = traj.history[j];
    std::vector<double> v(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) {
      const double a = ages[i];
      v[i] = (phi.transport(0.0, a) - (model.beta(a) + dj) * phi.phi(0.0, a)) * f[i];
    }
    const double lhs = traj.boundary[j] * phi.phi(0.0, 0.0) + trapezoid(v, dt);
    const double rhs = (moment[j + 1] - moment[j - 1]) / (2.0 * dt);
    const double gap = std::abs(lhs - rhs);
    ++rep.nodes_checked;
    if (gap > rep.max_residual) {
      rep.max_residual = gap;
      rep.worst_time = tj;
    }
  }
  return rep;
}

EnvelopeReport envelope_check(const Trajectory& traj, const ChemostatModel& model, const DilutionSignal& d) {
  EnvelopeReport rep;
  if (traj.empty()) return rep;
  const auto gc = growth_constants(model.mu, model.s_in);
  const double growth = gc.m_box * model.k.sup();
  const double n0 = traj.mass[0];
  const double s0 = traj.s[0];
  const double qn = model.q.sup();
  rep.mass.worst = rep.upper.worst = rep.lower.worst = std::numeric_limits<double>::infinity();
  auto track = [](BoundSlack& b, double slack, double t) {
    if (slack < b.worst) {
      b.worst = slack;
      b.time = t;
    }
  };
  for (std::size_t j = 0; j < traj.nodes(); ++j) {
    const double t = traj.t[j];
    const double mass_bound = std::exp(growth * t) * n0;
    track(rep.mass, (mass_bound - traj.mass[j]) / mass_bound, t);
    const double washout = std::exp(-dilution_integral(d, 0.0, t));
    const double upper = model.s_in * (1.0 - washout) + s0 * washout;
    track(rep.upper, (upper - traj.s[j]) / model.s_in, t);
    const double grow = growth > 0.0 ? std::expm1(growth * t) / growth : t;
    const double lower = s0 * std::exp(-gc.gamma * qn * n0 * grow);
    track(rep.lower, (traj.s[j] - lower) / model.s_in, t);
  }
  return rep;
}

DependenceReport dependence_check(const Trajectory& reference, const Trajectory& other,
                                  const ChemostatModel& model, const DilutionSignal& d) {
  if (reference.empty() || other.empty()) fail(ErrorCode::Argument, "empty trajectory");
  if (std::abs(reference.dt - other.dt) > 1e-12 * reference.dt || reference.nodes() != other.nodes()) {
    fail(ErrorCode::Argument, "dependence check needs trajectories on the same grid and horizon");
  }
  const auto gc = growth_constants(model.mu, model.s_in);
  DependenceReport rep;
  const double max_mass = *std::max_element(reference.mass.begin(), reference.mass.end());
  const double sup_d = reference.horizon() > 0.0 ? dilution_sup(d, 0.0, reference.horizon())
                                                 : dilution_at(d, 0.0);
  rep.chi = sup_d + (max_mass * gc.l_mu + gc.m_box) * (model.k.sup() + model.q.sup());
  rep.initial_distance = metric(reference.state(0), other.state(0));
  rep.holds = true;
  for (std::size_t j = 0; j < reference.nodes(); ++j) {
    if (!reference.has_state(j) || !other.has_state(j)) continue;
    const double t = reference.t[j];
    const double dist = metric(reference.state(j), other.state(j));
    const double envelope = std::exp(rep.chi * t) * rep.initial_distance;
    ++rep.nodes_compared;
    rep.times.push_back(t);
    rep.distances.push_back(dist);
    if (dist > envelope * (1.0 + 1e-3)) rep.holds = false;
    double amp = 0.0;
    if (envelope > 0.0) {
      amp = dist / envelope;
    } else if (dist > 0.0) {
      amp = std::numeric_limits<double>::infinity();
    }
    if (amp > rep.max_amplification || rep.nodes_compared == 1) {
      rep.max_amplification = std::max(rep.max_amplification, amp);
      rep.worst_time = t;
    }
  }
  return rep;
}

SemigroupReport semigroup_check(const ChemostatModel& model, const DilutionSignal& d,
                                const ChemostatState& state0, double t, double tau,
                                const Numerics& numerics, double tol) {
  if (!(t >= 0.0) || !(tau >= 0.0)) fail(ErrorCode::Argument, "semigroup check needs t, tau >= 0");
  const double dt = numerics.dt;
  lattice_node(t, dt);
  lattice_node(tau, dt);
  Numerics num = numerics;
  num.keep_history = false;
  if (num.eps_tail_abs <= 0.0) num.eps_tail_abs = num.eps_tail_rel * state0.f.sup();

  SemigroupReport rep;
  rep.tolerance = tol < 0.0 ? 5e-6 + 1e-3 * dt : tol;
  rep.identity_distance = metric(flow_map(model, d, state0, 0.0, num), state0);

  const double total = t + tau;
  const auto full = flow_map(model, d, state0, total, num);

  // D altered from t + tau on.
  std::vector<double> starts, values;
  for (std::size_t i = 0; i < d.breakpoints().size(); ++i) {
    if (d.breakpoints()[i] < total) {
      starts.push_back(d.breakpoints()[i]);
      values.push_back(d.values()[i]);
    }
  }
  if (total > 0.0) {
    starts.push_back(total);
    values.push_back(dilution_at(d, total) + 1.0);
  }
  const DilutionSignal altered(starts, values);
  const auto full_altered = flow_map(model, altered, state0, total, num);
  rep.causality_identical = full == full_altered;

  const auto mid = flow_map(model, d, state0, tau, num);
  const auto split = flow_map(model, shift(d, tau), mid, t, num);
  rep.semigroup_distance = metric(full, split);
  rep.measured_constant = rep.semigroup_distance / dt;
  rep.passed = rep.identity_distance == 0.0 && rep.causality_identical &&
               rep.semigroup_distance <= rep.tolerance;
  return rep;
}

}  // namespace agechem
