#include "agechem/window_solver.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <sstream>

#include "agechem/error.hpp"
#include "agechem/quadrature.hpp"

namespace agechem {

namespace {

double sup_norm(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

bool aligned(double h1, double h2) { return std::abs(h1 - h2) <= 1e-12 * std::max(h1, h2); }

std::size_t lattice_steps(double delta, double dt) {
  const double ratio = delta / dt;
  const double rounded = std::round(ratio);
  if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-9 * std::max(1.0, ratio)) {
    std::ostringstream os;
    os << "window length " << delta << " is not a positive multiple of dt = " << dt;
    fail(ErrorCode::Config, os.str());
  }
  return static_cast<std::size_t>(rounded);
}

void require_substrate_range(const ChemostatModel& model, double s0) {
  if (!(s0 > 0.0) || !(s0 < model.s_in)) {
    std::ostringstream os;
    os << "S0 = " << s0 << " outside (0, S_in = " << model.s_in << ")";
    fail(ErrorCode::Argument, os.str());
  }
}

}  // namespace

AgeTables AgeTables::build(const ChemostatModel& model, double spacing, std::size_t nodes) {
  AgeTables t;
  t.spacing = spacing;
  t.k.resize(nodes);
  t.q.resize(nodes);
  t.cum_beta.resize(nodes);
  t.k_tilde.resize(nodes);
  t.q_tilde.resize(nodes);
  for (std::size_t i = 0; i < nodes; ++i) {
    const double a = static_cast<double>(i) * spacing;
    t.k[i] = model.k(a);
    t.q[i] = model.q(a);
    t.cum_beta[i] = model.beta.cumulative(a);
    const double surv = std::exp(-t.cum_beta[i]);
    t.k_tilde[i] = t.k[i] * surv;
    t.q_tilde[i] = t.q[i] * surv;
  }
  return t;
}

double AgeTables::survival(std::size_t i1, std::size_t i2) const {
  return std::exp(-(cum_beta[i2] - cum_beta[i1]));
}

double window_constant(const ChemostatModel& model) {
  const auto gc = growth_constants(model.mu, model.s_in);
  const double m = gc.m_global;
  const double l = gc.l_mu;
  const double kn = model.k.sup();
  const double qn = model.q.sup();
  const double s_in = model.s_in;
  return 1.0 + (m / s_in + l) * (qn + (kn + m * qn) * kn) + (m + l * s_in) * (m * qn + kn);
}

double max_window(const ChemostatModel& model, double s0, double r) {
  require_substrate_range(model, s0);
  if (!(r >= 0.0)) fail(ErrorCode::Argument, "window sizing needs r >= 0");
  const double k = window_constant(model);
  const double delta = std::min(s0, model.s_in - s0) / (2.0 * k * model.s_in * (r + 1.0));
  return std::min(delta, 1.0);
}

WindowKernels window_kernels(const AgeTables& tables, const DilutionSignal& d,
                             const ChemostatState& state0, std::size_t steps) {
  const double dt = tables.spacing;
  if (!aligned(state0.f.spacing(), dt)) {
    std::ostringstream os;
    os << "age grid spacing " << state0.f.spacing() << " differs from dt = " << dt;
    fail(ErrorCode::Config, os.str());
  }
  const std::size_t n0 = state0.f.size();
  if (tables.size() < n0 + steps) {
    fail(ErrorCode::Argument, "age tables too short for the window");
  }
  WindowKernels w;
  w.dt = dt;
  w.steps = steps;
  w.g_bar.assign(steps + 1, 0.0);
  w.h_bar.assign(steps + 1, 0.0);
  const auto f0 = state0.f.values();
  for (std::size_t j = 0; j <= steps; ++j) {
    double g = 0.0;
    double h = 0.0;
    for (std::size_t i = 0; i < n0; ++i) {
      const double carried = trapezoid_weight(i, n0, dt) * f0[i] *
                             std::exp(-(tables.cum_beta[i + j] - tables.cum_beta[i]));
      g += tables.k[i + j] * carried;
      h += tables.q[i + j] * carried;
    }
    w.g_bar[j] = g;
    w.h_bar[j] = h;
  }
  w.cum_dilution.resize(steps + 1);
  w.b.resize(steps + 1);
  w.one_minus_b.resize(steps + 1);
  for (std::size_t j = 0; j <= steps; ++j) {
    w.cum_dilution[j] = dilution_integral(d, 0.0, static_cast<double>(j) * dt);
    w.b[j] = std::exp(-w.cum_dilution[j]);
    w.one_minus_b[j] = -std::expm1(-w.cum_dilution[j]);
  }
  w.k_tilde.assign(tables.k_tilde.begin(), tables.k_tilde.begin() + static_cast<long>(steps) + 1);
  w.q_tilde.assign(tables.q_tilde.begin(), tables.q_tilde.begin() + static_cast<long>(steps) + 1);
  return w;
}

WindowKernels window_kernels(const ChemostatModel& model, const DilutionSignal& d,
                             const ChemostatState& state0, double delta, double dt) {
  if (!(delta > 0.0) || delta > 1.0) fail(ErrorCode::Argument, "window length must lie in (0, 1]");
  if (!aligned(state0.f.spacing(), dt)) {
    std::ostringstream os;
    os << "grid misalignment: age spacing " << state0.f.spacing() << " vs dt " << dt;
    fail(ErrorCode::Config, os.str());
  }
  const std::size_t steps = lattice_steps(delta, dt);
  const auto tables = AgeTables::build(model, dt, state0.f.size() + steps);
  return window_kernels(tables, d, state0, steps);
}

OperatorImage apply_T(const ChemostatModel& model, const WindowKernels& kernels,
                      std::span<const double> y, std::span<const double> z, double s0) {
  const std::size_t n = kernels.steps + 1;
  if (y.size() != n || z.size() != n) {
    fail(ErrorCode::Argument, "apply_T: iterate does not match the window grid");
  }
  const double dt = kernels.dt;
  std::vector<double> mu(n), p(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double s = z[j] + s0;
    if (!(s >= 0.0) || !std::isfinite(s) || !std::isfinite(y[j])) {
      std::ostringstream os;
      os << "apply_T: invalid iterate at node " << j << " (S = " << s << ", y = " << y[j] << ")";
      fail(ErrorCode::Numeric, os.str());
    }
    mu[j] = model.mu(s);
    p[j] = mu[j] * (y[j] + kernels.g_bar[j]);
  }

  auto convolve = [&](const std::vector<double>& kernel, std::size_t j) {
    if (j == 0) return 0.0;
    double acc = 0.5 * (kernel[0] * p[j] + kernel[j] * p[0]);
    for (std::size_t i = 1; i < j; ++i) acc += kernel[i] * p[j - i];
    return dt * acc;
  };

  OperatorImage out;
  out.t1.resize(n);
  out.t2.resize(n);
  double outer = 0.0;
  double prev = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    out.t1[j] = convolve(kernels.k_tilde, j);
    const double inner = convolve(kernels.q_tilde, j);
    const double g = mu[j] * (kernels.h_bar[j] + inner);
    if (j > 0) outer += 0.5 * dt * (prev + g);
    prev = g;
    out.t2[j] = (model.s_in - s0) * kernels.one_minus_b[j] - kernels.b[j] * outer;
    if (!std::isfinite(out.t1[j]) || !std::isfinite(out.t2[j])) {
      std::ostringstream os;
      os << "apply_T: non-finite value at node " << j;
      fail(ErrorCode::Numeric, os.str());
    }
  }
  return out;
}

WindowSolution solve_window(const ChemostatModel& model, const AgeTables& tables,
                            const DilutionSignal& d, const ChemostatState& state0,
                            std::size_t steps, const SolveOptions& options) {
  require_substrate_range(model, state0.s);
  if (steps == 0) fail(ErrorCode::Argument, "window needs at least one step");
  const double dt = tables.spacing;
  const double s0 = state0.s;
  const double delta = static_cast<double>(steps) * dt;
  const double radius = 0.5 * std::min(s0, model.s_in - s0);
  const double tol = options.tol_fp < 0.0 ? 1e-12 * (1.0 + radius) : options.tol_fp;

  const auto kernels = window_kernels(tables, d, state0, steps);
  const std::size_t n = steps + 1;

  WindowSolution sol;
  sol.delta = delta;
  sol.dt = dt;
  sol.steps = steps;
  sol.s0 = s0;
  auto& diag = sol.diagnostics;
  diag.ball_radius = radius;

  const auto gc = growth_constants(model.mu, model.s_in);
  {
    const double m = gc.m_global;
    const double kt = sup_norm(kernels.k_tilde);
    const double qt = sup_norm(kernels.q_tilde);
    const double gn = sup_norm(kernels.g_bar);
    const double hn = sup_norm(kernels.h_bar);
    const double lip_y = m * (kt + m * qt * delta) * delta;
    const double lip_z = gc.l_mu * (hn + (m * qt * delta + kt) * (radius + gn)) * delta;
    diag.theoretical_ratio = std::max(lip_y, lip_z);
  }
  diag.guaranteed_delta =
      options.guaranteed_delta >= 0.0
          ? options.guaranteed_delta
          : max_window(model, s0, l1_norm(state0.f) + dilution_sup(d, 0.0, 1.0));
  diag.below_guarantee = delta > diag.guaranteed_delta * (1.0 + 1e-12);

  std::vector<double> y(n, 0.0), z(n, 0.0);
  bool converged = false;
  for (int it = 1; it <= options.max_iter; ++it) {
    auto img = apply_T(model, kernels, y, z, s0);
    double dy = 0.0;
    double dz = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      dy = std::max(dy, std::abs(img.t1[j] - y[j]));
      dz = std::max(dz, std::abs(img.t2[j] - z[j]));
    }
    y = std::move(img.t1);
    z = std::move(img.t2);
    const double update = dy + dz;
    diag.update_norms.push_back(update);
    diag.iterations = it;
    diag.final_update = update;
    diag.ball_norm = sup_norm(y) + sup_norm(z);
    if (diag.ball_norm > (1.0 + options.ball_slack) * radius) {
      std::ostringstream os;
      os << "Picard iterate left the ball: ||y|| + ||z|| = " << diag.ball_norm << " > R = " << radius
         << " at iteration " << it << " (window length " << delta << " too large)";
      fail(ErrorCode::ContractionViolation, os.str());
    }
    if (update <= tol) {
      converged = true;
      break;
    }
  }

  // Ratio of the last pair of updates that both sit above roundoff.
  const auto& u = diag.update_norms;
  const double floor = 1e3 * DBL_EPSILON * (1.0 + sup_norm(kernels.g_bar) + model.s_in);
  if (u.size() >= 2) {
    std::size_t k = 1;
    for (std::size_t i = 1; i < u.size(); ++i) {
      if (u[i] > floor) k = i;
    }
    diag.contraction_ratio = u[k - 1] > 0.0 ? u[k] / u[k - 1] : 0.0;
  }

  if (!converged) {
    std::ostringstream os;
    os << "Picard iteration did not reach tol " << tol << " in " << options.max_iter
       << " iterations (last update " << diag.final_update << ", measured ratio "
       << diag.contraction_ratio << ")";
    fail(ErrorCode::Convergence, os.str());
  }

  sol.y = std::move(y);
  sol.z = std::move(z);
  sol.s.resize(n);
  sol.x.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    sol.s[j] = sol.z[j] + s0;
    sol.x[j] = model.mu(sol.s[j]) * kernels.b[j] * (kernels.g_bar[j] + sol.y[j]);
  }
  sol.b = kernels.b;
  sol.cum_dilution = kernels.cum_dilution;
  sol.initial = state0.f;
  return sol;
}

WindowSolution solve_window(const ChemostatModel& model, const DilutionSignal& d,
                            const ChemostatState& state0, double delta, double dt,
                            const SolveOptions& options) {
  if (!(delta > 0.0) || delta > 1.0) fail(ErrorCode::Argument, "window length must lie in (0, 1]");
  if (!aligned(state0.f.spacing(), dt)) {
    std::ostringstream os;
    os << "grid misalignment: age spacing " << state0.f.spacing() << " vs dt " << dt;
    fail(ErrorCode::Config, os.str());
  }
  const std::size_t steps = lattice_steps(delta, dt);
  const auto tables = AgeTables::build(model, dt, state0.f.size() + steps);
  return solve_window(model, tables, d, state0, steps, options);
}

std::vector<double> WindowSolution::density(std::size_t j, const AgeTables& tables) const {
  if (j > steps) fail(ErrorCode::Argument, "density requested outside the window");
  const std::size_t n0 = initial.size();
  std::vector<double> f(n0 + j);
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (i >= j) {
      f[i] = initial[i - j] * b[j] * std::exp(-(tables.cum_beta[i] - tables.cum_beta[i - j]));
    } else {
      const double decay = (cum_dilution[j] - cum_dilution[j - i]) + tables.cum_beta[i];
      f[i] = x[j - i] * std::exp(-decay);
    }
  }
  return f;
}

ChemostatState WindowSolution::state_at(std::size_t j, const AgeTables& tables) const {
  return ChemostatState{AgeProfile(dt, density(j, tables), Extension::Zero), s[j]};
}

double reconstruct_density(const ChemostatModel& model, const DilutionSignal& d,
                           std::span<const double> x, double dt, const AgeProfile& f0, double t,
                           double a) {
  if (x.empty()) fail(ErrorCode::Argument, "empty boundary series");
  const double t_end = static_cast<double>(x.size() - 1) * dt;
  if (!(t >= 0.0) || t > t_end * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << "t = " << t << " outside the solved window [0, " << t_end << "]";
    fail(ErrorCode::Argument, os.str());
  }
  if (!(a >= 0.0)) fail(ErrorCode::Argument, "negative age");
  if (a >= t) {
    return f0(a - t) * std::exp(-dilution_integral(d, 0.0, t)) * survival(model, a - t, a);
  }
  const double tb = t - a;
  const double pos = tb / dt;
  auto i = static_cast<std::size_t>(pos);
  double xb;
  if (i + 1 >= x.size()) {
    xb = x.back();
  } else {
    const double w = pos - static_cast<double>(i);
    xb = (1.0 - w) * x[i] + w * x[i + 1];
  }
  return xb * std::exp(-dilution_integral(d, tb, t)) * survival(model, 0.0, a);
}

}  // namespace agechem
