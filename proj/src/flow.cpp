#include "agechem/flow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "agechem/error.hpp"
#include "agechem/quadrature.hpp"

namespace agechem {

std::size_t lattice_node(double t, double dt) {
  if (!(t >= 0.0) || !std::isfinite(t) || !(dt > 0.0)) {
    std::ostringstream os;
    os << "time " << t << " is not a valid lattice point for dt = " << dt;
    fail(ErrorCode::Argument, os.str());
  }
  const double pos = t / dt;
  const double node = std::round(pos);
  if (std::abs(pos - node) > 1e-9 * std::max(1.0, pos)) {
    std::ostringstream os;
    os << "time " << t << " is not a multiple of dt = " << dt;
    fail(ErrorCode::Argument, os.str());
  }
  return static_cast<std::size_t>(node);
}

int Trajectory::total_iterations() const {
  int n = 0;
  for (const auto& w : windows) n += w.diagnostics.iterations;
  return n;
}

double Trajectory::max_renewal_excess() const {
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < renewal_residual.size(); ++j) {
    m = std::max(m, renewal_residual[j] - renewal_tolerance[j]);
  }
  return m;
}

double Trajectory::min_s() const { return s.empty() ? 0.0 : *std::min_element(s.begin(), s.end()); }

double Trajectory::max_s() const { return s.empty() ? 0.0 : *std::max_element(s.begin(), s.end()); }

bool Trajectory::has_state(std::size_t node) const {
  return samples.count(node) > 0 || node < history.size();
}

ChemostatState Trajectory::state(std::size_t node) const {
  if (auto it = samples.find(node); it != samples.end()) return it->second;
  if (node < history.size()) return ChemostatState{history[node], s[node]};
  std::ostringstream os;
  os << "no stored state at node " << node;
  fail(ErrorCode::Argument, os.str());
}

std::size_t Trajectory::node_of(double time) const {
  const std::size_t j = lattice_node(time, dt);
  if (j >= t.size()) {
    std::ostringstream os;
    os << "time " << time << " beyond the trajectory horizon " << horizon();
    fail(ErrorCode::Argument, os.str());
  }
  return j;
}

namespace {

struct NodeRenewal {
  double residual;
  double estimate;
};

NodeRenewal renewal_at(const ChemostatModel& model, const AgeTables& tables,
                       std::span<const double> f, double s) {
  std::vector<double> kf(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) kf[i] = tables.k[i] * f[i];
  const double mu = model.mu(s);
  const double birth = mu * trapezoid(kf, tables.spacing);
  return {std::abs(f[0] - birth), mu * trapezoid_error_estimate(kf, tables.spacing)};
}

double abs_trapezoid(std::span<const double> f, double h) {
  std::vector<double> a(f.begin(), f.end());
  for (double& v : a) v = std::abs(v);
  return trapezoid(a, h);
}

void require_membership(const ChemostatState& state, const ChemostatModel& model,
                        double tol_compat, double eps_tail) {
  const auto m = check_membership(state, model, tol_compat, eps_tail);
  if (m.ok()) return;
  std::ostringstream os;
  os << "initial state fails X-membership:";
  if (!m.positive) {
    os << " density not strictly positive";
    if (m.first_nonpositive) os << " (node " << *m.first_nonpositive << ")";
    os << ';';
  }
  if (!m.tail_decay) os << " tail above eps_tail = " << eps_tail << ';';
  if (!m.s_in_range) os << " S0 = " << state.s << " outside (0, S_in = " << model.s_in << ");";
  if (!m.compatible) {
    os << " renewal residual " << m.residual << " exceeds " << m.tolerance << ';';
  }
  fail(ErrorCode::Domain, os.str());
}

// D restricted to [0, horizon): pieces starting at or after the horizon are
// dropped, so the solve cannot see them even through roundoff.
DilutionSignal truncate(const DilutionSignal& d, double horizon) {
  std::vector<double> starts, values;
  for (std::size_t i = 0; i < d.breakpoints().size(); ++i) {
    if (i > 0 && d.breakpoints()[i] >= horizon) break;
    starts.push_back(d.breakpoints()[i]);
    values.push_back(d.values()[i]);
  }
  return DilutionSignal(std::move(starts), std::move(values));
}

}  // namespace

Trajectory advance(const ChemostatModel& model, const DilutionSignal& d, const ChemostatState& state0,
                   double horizon, const Numerics& numerics, std::span<const double> sample_times) {
  require_valid(model);
  const double dt = numerics.dt;
  if (!(dt > 0.0) || !std::isfinite(dt)) fail(ErrorCode::Argument, "dt must be positive");
  if (!(horizon > 0.0) || !std::isfinite(horizon)) fail(ErrorCode::Argument, "horizon must be positive");
  if (numerics.delta_cap < dt) fail(ErrorCode::Argument, "window cap below dt");
  if (numerics.max_iter < 1) fail(ErrorCode::Argument, "max_iter must be at least 1");
  if (std::abs(state0.f.spacing() - dt) > 1e-12 * dt) {
    std::ostringstream os;
    os << "age spacing " << state0.f.spacing() << " must equal dt = " << dt;
    fail(ErrorCode::Config, os.str());
  }
  const std::size_t total = lattice_node(horizon, dt);
  if (total == 0) fail(ErrorCode::Argument, "horizon shorter than one step");

  Trajectory traj;
  traj.dt = dt;
  traj.tol_compat = numerics.tol_compat;
  traj.eps_tail = numerics.eps_tail_abs > 0.0 ? numerics.eps_tail_abs
                                              : numerics.eps_tail_rel * state0.f.sup();
  require_membership(state0, model, traj.tol_compat, traj.eps_tail);

  std::set<std::size_t> wanted{0, total};
  for (double ts : sample_times) {
    const std::size_t j = lattice_node(ts, dt);
    if (j > total) fail(ErrorCode::Argument, "sample time beyond the horizon");
    wanted.insert(j);
  }

  const DilutionSignal seen = truncate(d, horizon);
  const std::size_t n0 = state0.f.size();
  const auto tables = AgeTables::build(model, dt, n0 + total + 1);
  const auto cap_steps = static_cast<std::size_t>(std::floor(numerics.delta_cap / dt + 1e-9));

  auto record = [&](std::size_t node, std::span<const double> f, double s, double tol_fp) {
    const auto ren = renewal_at(model, tables, f, s);
    traj.t.push_back(static_cast<double>(node) * dt);
    traj.s.push_back(s);
    traj.mass.push_back(abs_trapezoid(f, dt));
    traj.boundary.push_back(f[0]);
    traj.dilution.push_back(dilution_at(d, static_cast<double>(node) * dt));
    traj.renewal_residual.push_back(ren.residual);
    traj.renewal_tolerance.push_back(10.0 * tol_fp + ren.estimate);
    if (wanted.count(node) || numerics.keep_history) {
      AgeProfile prof(dt, std::vector<double>(f.begin(), f.end()), Extension::Zero);
      if (wanted.count(node)) traj.samples.emplace(node, ChemostatState{prof, s});
      if (numerics.keep_history) traj.history.push_back(std::move(prof));
    }
  };

  auto window_tol = [&](double s) {
    const double radius = 0.5 * std::min(s, model.s_in - s);
    return numerics.tol_fp < 0.0 ? 1e-12 * (1.0 + radius) : numerics.tol_fp;
  };

  traj.initial = state0;
  record(0, state0.f.values(), state0.s, window_tol(state0.s));

  ChemostatState current = state0;
  std::size_t node = 0;
  while (node < total) {
    const double t_w = static_cast<double>(node) * dt;
    const double look_end = std::min(t_w + 1.0, horizon);
    const double r = l1_norm(current.f) + dilution_sup(seen, t_w, look_end);
    const double guaranteed = max_window(model, current.s, r);
    auto fit = static_cast<std::size_t>(std::floor(guaranteed / dt * (1.0 + 1e-12)));
    std::size_t steps = std::min({fit, total - node, cap_steps});
    if (steps == 0) {
      if (numerics.strict_window) {
        std::ostringstream os;
        os << "guaranteed window " << guaranteed << " at t = " << t_w << " is shorter than dt = " << dt
           << "; refine dt to at most " << guaranteed;
        fail(ErrorCode::RefineGrid, os.str());
      }
      steps = 1;
    }

    SolveOptions opts;
    opts.tol_fp = numerics.tol_fp;
    opts.max_iter = numerics.max_iter;
    opts.guaranteed_delta = guaranteed;
    WindowSolution sol;
    try {
      sol = solve_window(model, tables, shift(seen, t_w), current, steps, opts);
    } catch (const Error& e) {
      std::ostringstream os;
      os << "window starting at t = " << t_w << " (length " << static_cast<double>(steps) * dt
         << "): " << e.what();
      if (e.code() == ErrorCode::Convergence || e.code() == ErrorCode::ContractionViolation) {
        os << "; try a smaller dt or delta_cap";
      }
      fail(e.code(), os.str());
    }

    const double tol_fp = window_tol(current.s);
    for (std::size_t j = 1; j < steps; ++j) {
      const auto f = sol.density(j, tables);
      record(node + j, f, sol.s[j], tol_fp);
    }
    auto f_end = sol.density(steps, tables);
    record(node + steps, f_end, sol.s[steps], tol_fp);

    WindowRecord rec;
    rec.start_node = node;
    rec.steps = steps;
    rec.start_time = t_w;
    rec.delta = sol.delta;
    rec.diagnostics = std::move(sol.diagnostics);
    traj.windows.push_back(std::move(rec));

    current = ChemostatState{AgeProfile(dt, std::move(f_end), Extension::Zero), sol.s[steps]};
    node += steps;
  }
  traj.terminal = std::move(current);
  return traj;
}

ChemostatState flow_map(const ChemostatModel& model, const DilutionSignal& d,
                        const ChemostatState& state0, double t, const Numerics& numerics) {
  if (!(t >= 0.0)) fail(ErrorCode::Argument, "flow map needs t >= 0");
  if (t == 0.0) return state0;
  Numerics n = numerics;
  n.keep_history = false;
  return advance(model, d, state0, t, n).terminal;
}

Trajectory concat(const Trajectory& first, const Trajectory& second) {
  if (second.empty()) return first;
  if (first.empty()) return second;
  if (std::abs(first.dt - second.dt) > 1e-12 * first.dt) {
    fail(ErrorCode::Splice, "trajectories use different time steps");
  }
  double gap = 0.0;
  try {
    gap = metric(first.terminal, second.initial);
  } catch (const Error& e) {
    fail(ErrorCode::Splice, std::string("junction states not comparable: ") + e.what());
  }
  if (gap > 1e-12) {
    std::ostringstream os;
    os << "junction mismatch: metric distance " << gap;
    fail(ErrorCode::Splice, os.str());
  }

  Trajectory out = first;
  const std::size_t offset = first.nodes() - 1;
  const double t_off = first.horizon();
  for (std::size_t j = 1; j < second.nodes(); ++j) {
    out.t.push_back(static_cast<double>(offset + j) * out.dt);
    out.s.push_back(second.s[j]);
    out.mass.push_back(second.mass[j]);
    out.boundary.push_back(second.boundary[j]);
    out.dilution.push_back(second.dilution[j]);
    out.renewal_residual.push_back(second.renewal_residual[j]);
    out.renewal_tolerance.push_back(second.renewal_tolerance[j]);
  }
  for (const auto& w : second.windows) {
    WindowRecord r = w;
    r.start_node += offset;
    r.start_time += t_off;
    out.windows.push_back(std::move(r));
  }
  for (const auto& [j, st] : second.samples) {
    if (j == 0) continue;
    out.samples.emplace(offset + j, st);
  }
  if (!first.history.empty() && !second.history.empty()) {
    out.history.insert(out.history.end(), second.history.begin() + 1, second.history.end());
  } else {
    out.history.clear();
  }
  out.terminal = second.terminal;
  return out;
}

}  // namespace agechem
