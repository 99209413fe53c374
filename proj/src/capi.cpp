#include "agechem/agechem.h"

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <new>
#include <string>

#include "agechem/error.hpp"
#include "agechem/flow.hpp"
#include "agechem/io.hpp"
#include "agechem/model.hpp"
#include "agechem/scenario.hpp"
#include "agechem/signal.hpp"
#include "agechem/state.hpp"
#include "agechem/window_solver.hpp"

struct agechem_model {
  agechem::ChemostatModel rep;
};

struct agechem_signal {
  agechem::DilutionSignal rep;
};

struct agechem_state {
  agechem::ChemostatState rep;
};

struct agechem_trajectory {
  agechem::Trajectory rep;
};

struct agechem_scenario {
  agechem::Scenario rep;
};

namespace {

thread_local std::string last_error;

template <class Fn>
agechem_status guarded(Fn&& fn) {
  try {
    fn();
    last_error.clear();
    return AGECHEM_OK;
  } catch (const agechem::Error& e) {
    last_error = e.what();
    return static_cast<agechem_status>(static_cast<int>(e.code()));
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return AGECHEM_ERR_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return AGECHEM_ERR_INTERNAL;
  }
}

void require(bool cond, const char* what) {
  if (!cond) agechem::fail(agechem::ErrorCode::Argument, what);
}

agechem::AgeProfile to_profile(const agechem_profile* p, const char* name) {
  require(p != nullptr, name);
  require(p->values != nullptr && p->count > 0, name);
  const auto ext = p->extension == AGECHEM_EXTEND_CONSTANT ? agechem::Extension::ConstantLast
                                                           : agechem::Extension::Zero;
  return agechem::AgeProfile(p->spacing, std::vector<double>(p->values, p->values + p->count), ext);
}

agechem::Numerics to_numerics(const agechem_numerics* n) {
  agechem::Numerics out;
  if (!n) return out;
  out.dt = n->dt;
  out.tol_fp = n->tol_fp;
  out.max_iter = n->max_iter;
  out.delta_cap = n->delta_cap;
  out.eps_tail_rel = n->eps_tail_rel;
  out.tol_compat = n->tol_compat;
  out.strict_window = n->strict_window != 0;
  out.keep_history = n->keep_history != 0;
  return out;
}

char* duplicate(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void hand_out(char** report, const std::string& text) {
  if (report) *report = duplicate(text);
}

std::string resolve_dir(const agechem_scenario* sc, const char* out_dir) {
  return out_dir ? std::string(out_dir) : sc->rep.output.dir;
}

void write_file(const std::string& dir, const std::string& name, const std::string& text) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) agechem::fail(agechem::ErrorCode::Io, "cannot create " + dir);
  const auto path = std::filesystem::path(dir) / name;
  std::ofstream out(path);
  out << text;
  if (!out) agechem::fail(agechem::ErrorCode::Io, "cannot write " + path.string());
}

agechem_status make_model(agechem::GrowthKinetics mu, double s_in, const agechem_profile* beta,
                          const agechem_profile* k, const agechem_profile* q, agechem_model** out) {
  return guarded([&] {
    require(out != nullptr, "null output handle");
    agechem::ChemostatModel m{mu, to_profile(beta, "beta profile"), to_profile(k, "k profile"),
                              to_profile(q, "q profile"), s_in};
    agechem::require_valid(m);
    *out = new agechem_model{std::move(m)};
  });
}

}  // namespace

extern "C" {

const char* agechem_version(void) { return "0.1.0"; }

const char* agechem_status_string(agechem_status status) {
  if (status == AGECHEM_OK) return "ok";
  if (status == AGECHEM_ERR_INTERNAL) return "internal error";
  if (status >= AGECHEM_ERR_ARGUMENT && status <= AGECHEM_ERR_CONSTRUCTION) {
    return agechem::to_string(static_cast<agechem::ErrorCode>(status));
  }
  return "unknown status";
}

const char* agechem_last_error(void) { return last_error.c_str(); }

void agechem_string_free(char* s) { std::free(s); }

void agechem_numerics_default(agechem_numerics* out) {
  if (!out) return;
  const agechem::Numerics n;
  *out = agechem_numerics{n.dt,          n.tol_fp,     n.max_iter,          n.delta_cap,
                          n.eps_tail_rel, n.tol_compat, n.strict_window ? 1 : 0, n.keep_history ? 1 : 0};
}

agechem_status agechem_model_create_monod(double mu_max, double k_s, double s_in, const agechem_profile* beta,
                                          const agechem_profile* k, const agechem_profile* q,
                                          agechem_model** out) {
  agechem_status st = AGECHEM_OK;
  agechem::GrowthKinetics mu = agechem::GrowthKinetics::monod(1.0, 1.0);
  st = guarded([&] { mu = agechem::GrowthKinetics::monod(mu_max, k_s); });
  return st == AGECHEM_OK ? make_model(mu, s_in, beta, k, q, out) : st;
}

agechem_status agechem_model_create_haldane(double mu_max, double k_p, double k_i, double s_in,
                                            const agechem_profile* beta, const agechem_profile* k,
                                            const agechem_profile* q, agechem_model** out) {
  agechem::GrowthKinetics mu = agechem::GrowthKinetics::monod(1.0, 1.0);
  const auto st = guarded([&] { mu = agechem::GrowthKinetics::haldane(mu_max, k_p, k_i); });
  return st == AGECHEM_OK ? make_model(mu, s_in, beta, k, q, out) : st;
}

void agechem_model_free(agechem_model* model) { delete model; }

agechem_status agechem_model_growth(const agechem_model* model, double s, double* out) {
  return guarded([&] {
    require(model && out, "null argument");
    *out = model->rep.mu(s);
  });
}

agechem_status agechem_model_constants(const agechem_model* model, double* m_global, double* m_box, double* l_mu,
                                       double* gamma) {
  return guarded([&] {
    require(model != nullptr, "null model");
    const auto c = agechem::growth_constants(model->rep.mu, model->rep.s_in);
    if (m_global) *m_global = c.m_global;
    if (m_box) *m_box = c.m_box;
    if (l_mu) *l_mu = c.l_mu;
    if (gamma) *gamma = c.gamma;
  });
}

agechem_status agechem_model_max_window(const agechem_model* model, double s0, double r, double* out) {
  return guarded([&] {
    require(model && out, "null argument");
    *out = agechem::max_window(model->rep, s0, r);
  });
}

agechem_status agechem_signal_create(const double* starts, const double* values, size_t count,
                                     agechem_signal** out) {
  return guarded([&] {
    require(starts && values && out && count > 0, "null or empty signal data");
    agechem::DilutionSignal d(std::vector<double>(starts, starts + count),
                              std::vector<double>(values, values + count));
    *out = new agechem_signal{std::move(d)};
  });
}

void agechem_signal_free(agechem_signal* signal) { delete signal; }

agechem_status agechem_signal_integral(const agechem_signal* signal, double t1, double t2, double* out) {
  return guarded([&] {
    require(signal && out, "null argument");
    *out = agechem::dilution_integral(signal->rep, t1, t2);
  });
}

agechem_status agechem_state_create(double spacing, const double* values, size_t count, double s,
                                    agechem_state** out) {
  return guarded([&] {
    require(values && out && count > 0, "null or empty state data");
    agechem::AgeProfile f(spacing, std::vector<double>(values, values + count), agechem::Extension::Zero);
    *out = new agechem_state{agechem::ChemostatState{std::move(f), s}};
  });
}

agechem_status agechem_state_exponential(const agechem_model* model, double s0, double c, double spacing,
                                         double eps_tail_rel, agechem_state** out) {
  return guarded([&] {
    require(model && out, "null argument");
    *out = new agechem_state{agechem::make_compatible_exponential(model->rep, s0, c, spacing, eps_tail_rel)};
  });
}

void agechem_state_free(agechem_state* state) { delete state; }

size_t agechem_state_size(const agechem_state* state) { return state ? state->rep.f.size() : 0; }

double agechem_state_substrate(const agechem_state* state) { return state ? state->rep.s : 0.0; }

double agechem_state_spacing(const agechem_state* state) { return state ? state->rep.f.spacing() : 0.0; }

agechem_status agechem_state_values(const agechem_state* state, double* buffer, size_t count) {
  return guarded([&] {
    require(state && buffer, "null argument");
    const auto v = state->rep.f.values();
    std::copy_n(v.begin(), std::min(count, v.size()), buffer);
  });
}

agechem_status agechem_metric(const agechem_state* a, const agechem_state* b, double* out) {
  return guarded([&] {
    require(a && b && out, "null argument");
    *out = agechem::metric(a->rep, b->rep);
  });
}

agechem_status agechem_advance(const agechem_model* model, const agechem_signal* signal,
                               const agechem_state* state0, double horizon, const agechem_numerics* numerics,
                               agechem_trajectory** out) {
  return guarded([&] {
    require(model && signal && state0 && out, "null argument");
    auto traj = agechem::advance(model->rep, signal->rep, state0->rep, horizon, to_numerics(numerics));
    *out = new agechem_trajectory{std::move(traj)};
  });
}

agechem_status agechem_flow_map(const agechem_model* model, const agechem_signal* signal,
                                const agechem_state* state0, double t, const agechem_numerics* numerics,
                                agechem_state** out) {
  return guarded([&] {
    require(model && signal && state0 && out, "null argument");
    auto st = agechem::flow_map(model->rep, signal->rep, state0->rep, t, to_numerics(numerics));
    *out = new agechem_state{std::move(st)};
  });
}

void agechem_trajectory_free(agechem_trajectory* traj) { delete traj; }

size_t agechem_trajectory_nodes(const agechem_trajectory* traj) { return traj ? traj->rep.nodes() : 0; }

size_t agechem_trajectory_windows(const agechem_trajectory* traj) { return traj ? traj->rep.windows.size() : 0; }

double agechem_trajectory_max_contraction(const agechem_trajectory* traj) {
  double m = 0.0;
  if (!traj) return m;
  for (const auto& w : traj->rep.windows) m = std::max(m, w.diagnostics.contraction_ratio);
  return m;
}

agechem_status agechem_trajectory_series(const agechem_trajectory* traj, agechem_series which, double* buffer,
                                         size_t count) {
  return guarded([&] {
    require(traj && buffer, "null argument");
    const auto& t = traj->rep;
    const std::vector<double>* src = nullptr;
    switch (which) {
      case AGECHEM_SERIES_T: src = &t.t; break;
      case AGECHEM_SERIES_S: src = &t.s; break;
      case AGECHEM_SERIES_N: src = &t.mass; break;
      case AGECHEM_SERIES_X: src = &t.boundary; break;
      case AGECHEM_SERIES_D: src = &t.dilution; break;
      case AGECHEM_SERIES_RENEWAL: src = &t.renewal_residual; break;
    }
    require(src != nullptr, "unknown series");
    std::copy_n(src->begin(), std::min(count, src->size()), buffer);
  });
}

agechem_status agechem_trajectory_terminal(const agechem_trajectory* traj, agechem_state** out) {
  return guarded([&] {
    require(traj && out, "null argument");
    *out = new agechem_state{traj->rep.terminal};
  });
}

agechem_status agechem_scenario_load(const char* path, agechem_scenario** out) {
  return guarded([&] {
    require(path && out, "null argument");
    *out = new agechem_scenario{agechem::load_scenario(path)};
  });
}

agechem_status agechem_scenario_parse(const char* text, const char* base_dir, agechem_scenario** out) {
  return guarded([&] {
    require(text && out, "null argument");
    *out = new agechem_scenario{agechem::parse_scenario(text, base_dir ? base_dir : ".")};
  });
}

void agechem_scenario_free(agechem_scenario* scenario) { delete scenario; }

const char* agechem_scenario_output_dir(const agechem_scenario* scenario) {
  return scenario ? scenario->rep.output.dir.c_str() : "";
}

agechem_status agechem_scenario_simulate(const agechem_scenario* scenario, const char* out_dir,
                                         int with_validation, int* passed, char** report) {
  return guarded([&] {
    require(scenario != nullptr, "null scenario");
    const auto res = agechem::run_scenario(scenario->rep, resolve_dir(scenario, out_dir), with_validation != 0);
    if (passed) *passed = res.validation.passed() ? 1 : 0;
    std::string text = agechem::render_validation_text(res.validation);
    text += "files:";
    for (const auto& f : res.files) text += "\n  " + f;
    text += '\n';
    hand_out(report, text);
  });
}

agechem_status agechem_scenario_refine(const agechem_scenario* scenario, const char* out_dir, int levels,
                                       int threads, char** report) {
  return guarded([&] {
    require(scenario != nullptr, "null scenario");
    const auto dts = agechem::halving_levels(scenario->rep.numerics.dt, levels);
    const auto table = agechem::refine_study(scenario->rep, dts, threads);
    const auto text = agechem::render_refine_table(table);
    write_file(resolve_dir(scenario, out_dir), "refine.csv", text);
    hand_out(report, text);
  });
}

agechem_status agechem_scenario_perturb(const agechem_scenario* scenario, const char* out_dir, double epsilon,
                                        int threads, int* holds, char** report) {
  return guarded([&] {
    require(scenario != nullptr, "null scenario");
    const auto rep = agechem::perturb_experiment(scenario->rep, epsilon, threads);
    if (holds) *holds = rep.dependence.holds ? 1 : 0;
    const auto text = agechem::render_perturb_report(rep);
    write_file(resolve_dir(scenario, out_dir), "perturb.kv", text);
    hand_out(report, text);
  });
}

agechem_status agechem_scenario_oracle_compare(const agechem_scenario* scenario, const char* out_dir,
                                               const char* oracle, int threads, int* passed, char** report) {
  return guarded([&] {
    require(scenario != nullptr, "null scenario");
    const std::string kind = oracle ? oracle : "moment";
    std::string text;
    bool ok = false;
    if (kind == "moment") {
      const auto c = agechem::compare_with_moment_oracle(scenario->rep);
      ok = c.passed;
      text = agechem::render_oracle_comparison(c);
    } else if (kind == "upwind") {
      const double dt = scenario->rep.numerics.dt;
      const double dts[3] = {dt, dt / 2.0, dt / 4.0};
      const auto m = agechem::compare_with_upwind(scenario->rep, dts, threads);
      ok = m.monotone && m.overall_order >= 1.0;
      text = "oracle=upwind\n" + agechem::render_mutual_convergence(m);
    } else {
      agechem::fail(agechem::ErrorCode::Argument, "oracle must be 'moment' or 'upwind'");
    }
    if (passed) *passed = ok ? 1 : 0;
    write_file(resolve_dir(scenario, out_dir), "oracle_" + kind + ".txt", text);
    hand_out(report, text);
  });
}

}  // extern "C"
