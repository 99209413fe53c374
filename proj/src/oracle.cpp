#include "agechem/oracle.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "agechem/error.hpp"
#include "agechem/quadrature.hpp"

namespace agechem {

std::optional<MomentOdeParams> constant_rate_params(const ChemostatModel& model,
                                                    const DilutionSignal& d) {
  const auto beta = model.beta.constant_value();
  const auto k = model.k.constant_value();
  const auto q = model.q.constant_value();
  if (!beta || !k || !q) return std::nullopt;
  if (model.k.extension() != Extension::ConstantLast || model.q.extension() != Extension::ConstantLast) {
    return std::nullopt;
  }
  if (model.beta.extension() != Extension::ConstantLast && *beta != 0.0) return std::nullopt;
  if (!(*k > 0.0) || !(*q > 0.0) || *beta < 0.0) return std::nullopt;
  return MomentOdeParams{*k, *beta, *q, model.mu, model.s_in, d};
}

MomentSeries moment_ode_oracle(const MomentOdeParams& p, double n0, double s0, double horizon,
                               double dt) {
  if (!(dt > 0.0)) fail(ErrorCode::Argument, "moment oracle needs dt > 0");
  if (!(horizon >= 0.0)) fail(ErrorCode::Argument, "moment oracle needs T >= 0");

  using Vec = std::array<double, 2>;
  // The growth law is evaluated at max(S, 0): intermediate RK stages may
  // overshoot slightly below zero on stiff substrates.
  auto rhs = [&](const Vec& u, double dval) -> Vec {
    const double mu = p.kinetics(std::max(u[1], 0.0));
    return {(mu * p.k0 - dval - p.beta0) * u[0], dval * (p.s_in - u[1]) - mu * p.q0 * u[0]};
  };
  auto rk4 = [&](Vec u, double h, double dval) {
    const Vec k1 = rhs(u, dval);
    const Vec k2 = rhs({u[0] + 0.5 * h * k1[0], u[1] + 0.5 * h * k1[1]}, dval);
    const Vec k3 = rhs({u[0] + 0.5 * h * k2[0], u[1] + 0.5 * h * k2[1]}, dval);
    const Vec k4 = rhs({u[0] + h * k3[0], u[1] + h * k3[1]}, dval);
    for (int i = 0; i < 2; ++i) u[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    return u;
  };

  const auto bps = p.d.breakpoints();
  MomentSeries out;
  Vec u{n0, s0};
  out.t.push_back(0.0);
  out.n.push_back(n0);
  out.s.push_back(s0);
  const auto steps = static_cast<std::size_t>(std::ceil(horizon / dt - 1e-9));
  for (std::size_t i = 0; i < steps; ++i) {
    const double a = static_cast<double>(i) * dt;
    const double b = std::min(static_cast<double>(i + 1) * dt, horizon);
    double t = a;
    while (t < b) {
      // D is constant on [t, next).
      double next = b;
      for (double bp : bps) {
        if (bp > t && bp < next) next = bp;
      }
      u = rk4(u, next - t, dilution_at(p.d, t));
      t = next;
    }
    out.t.push_back(b);
    out.n.push_back(u[0]);
    out.s.push_back(u[1]);
  }
  return out;
}

UpwindResult upwind_pde_oracle(const ChemostatModel& model, const DilutionSignal& d,
                               const ChemostatState& state0, double horizon, double dt) {
  if (!(dt > 0.0)) fail(ErrorCode::Argument, "upwind oracle needs dt > 0");
  if (std::abs(state0.f.spacing() - dt) > 1e-12 * dt) {
    fail(ErrorCode::Config, "upwind oracle needs the age spacing equal to dt");
  }
  const auto steps = static_cast<std::size_t>(std::llround(horizon / dt));
  if (steps == 0 || std::abs(static_cast<double>(steps) * dt - horizon) > 1e-9 * horizon) {
    fail(ErrorCode::Argument, "horizon must be a positive multiple of dt");
  }
  const double sup_d = dilution_sup(d, 0.0, horizon);
  if (dt * (model.beta.sup() + sup_d) >= 1.0) {
    std::ostringstream os;
    os << "upwind step unstable: dt (||beta|| + sup D) = " << dt * (model.beta.sup() + sup_d);
    fail(ErrorCode::Stability, os.str());
  }

  const std::size_t n0 = state0.f.size();
  const std::size_t width = n0 + steps;
  std::vector<double> beta(width), k(width), q(width);
  for (std::size_t i = 0; i < width; ++i) {
    const double a = static_cast<double>(i) * dt;
    beta[i] = model.beta(a);
    k[i] = model.k(a);
    q[i] = model.q(a);
  }

  std::vector<double> f(state0.f.values().begin(), state0.f.values().end());
  double s = state0.s;
  auto weighted = [&](const std::vector<double>& w) {
    std::vector<double> v(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) v[i] = w[i] * f[i];
    return trapezoid(v, dt);
  };
  auto mass = [&]() {
    std::vector<double> v(f.begin(), f.end());
    return trapezoid(v, dt);
  };

  UpwindResult out;
  out.t.push_back(0.0);
  out.s.push_back(s);
  out.n.push_back(mass());
  for (std::size_t n = 0; n < steps; ++n) {
    const double t = static_cast<double>(n) * dt;
    const double dn = dilution_at(d, t);
    const double s_next = s + dt * (dn * (model.s_in - s) - model.mu(s) * weighted(q));
    if (!(s_next > 0.0)) {
      std::ostringstream os;
      os << "upwind substrate left (0, S_in) at t = " << t + dt << " (S = " << s_next << ")";
      fail(ErrorCode::Stability, os.str());
    }
    std::vector<double> g(f.size() + 1);
    for (std::size_t i = 1; i < g.size(); ++i) g[i] = f[i - 1] * (1.0 - dt * (beta[i] + dn));
    f = std::move(g);
    s = s_next;
    // Birth boundary: trapezoid of k f with the unknown f_0 moved left.
    const double mu = model.mu(s);
    double tail = 0.0;
    for (std::size_t i = 1; i < f.size(); ++i) tail += trapezoid_weight(i, f.size(), dt) * k[i] * f[i];
    const double denom = 1.0 - 0.5 * dt * mu * k[0];
    if (!(denom > 0.0)) fail(ErrorCode::Stability, "upwind boundary update is singular");
    f[0] = mu * tail / denom;
    out.t.push_back(t + dt);
    out.s.push_back(s);
    out.n.push_back(mass());
  }
  out.terminal = ChemostatState{AgeProfile(dt, f, Extension::Zero), s};
  return out;
}

}  // namespace agechem
