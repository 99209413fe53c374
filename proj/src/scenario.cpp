#include "agechem/scenario.hpp"

#include <algorithm>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "agechem/error.hpp"
#include "agechem/io.hpp"
#include "agechem/oracle.hpp"
#include "agechem/window_solver.hpp"

namespace agechem {

namespace pt = boost::property_tree;
namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(trim(cur));
  return out;
}

double to_number(const std::string& text, const std::string& key) {
  const std::string t = trim(text);
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (t.empty() || end != t.c_str() + t.size() || !std::isfinite(v)) {
    fail(ErrorCode::Config, key + ": not a number: '" + text + "'");
  }
  return v;
}

std::vector<double> to_numbers(const std::string& text, const std::string& key) {
  std::vector<double> out;
  if (trim(text).empty()) return out;
  for (const auto& tok : split(text, ',')) out.push_back(to_number(tok, key));
  return out;
}

const std::set<std::string> kKnownKeys{
    "model.kinetics",      "model.mu_max",          "model.K_S",           "model.K_P",
    "model.K_I",           "model.S_in",            "model.beta",          "model.k",
    "model.q",             "model.beta_extension",  "model.k_extension",   "model.q_extension",
    "initial.type",        "initial.S0",            "initial.C",           "initial.profile",
    "dilution.schedule",   "run.T",                 "numerics.dt",         "numerics.tol_fp",
    "numerics.max_iter",   "numerics.delta_cap",    "numerics.eps_tail_rel", "numerics.tol_compat",
    "numerics.strict_window", "output.sample_times", "output.snapshot_times", "output.dir"};

const std::set<std::string> kPassiveSections{"derived", "windows"};

class Reader {
 public:
  Reader(const pt::ptree& tree, std::string base) : tree_(tree), base_(std::move(base)) {
    for (const auto& [section, body] : tree_) {
      if (kPassiveSections.count(section)) continue;
      if (!body.data().empty()) fail(ErrorCode::Config, "key outside a section: " + section);
      for (const auto& [key, value] : body) {
        const std::string full = section + "." + key;
        if (!kKnownKeys.count(full)) fail(ErrorCode::Config, "unknown key " + full);
      }
    }
  }

  std::optional<std::string> text(const std::string& key) const {
    if (auto v = tree_.get_optional<std::string>(pt::ptree::path_type(key, '.'))) return trim(*v);
    return std::nullopt;
  }
  std::string required_text(const std::string& key) const {
    auto v = text(key);
    if (!v || v->empty()) fail(ErrorCode::Config, "missing required key " + key);
    return *v;
  }
  double number(const std::string& key) const { return to_number(required_text(key), key); }
  double number(const std::string& key, double fallback) const {
    auto v = text(key);
    return v ? to_number(*v, key) : fallback;
  }

  Extension extension(const std::string& key, Extension fallback) const {
    auto v = text(key);
    if (!v) return fallback;
    if (*v == "zero") return Extension::Zero;
    if (*v == "constant") return Extension::ConstantLast;
    fail(ErrorCode::Config, key + " must be 'zero' or 'constant'");
  }

  AgeProfile profile(const std::string& key, Extension ext) const {
    const std::string v = required_text(key);
    if (v.rfind("file:", 0) == 0) {
      fs::path p(trim(v.substr(5)));
      if (p.is_relative()) p = fs::path(base_) / p;
      return read_profile_table(p.string(), ext);
    }
    if (v.rfind("grid:", 0) == 0) {
      const auto rest = v.substr(5);
      const auto colon = rest.find(':');
      if (colon == std::string::npos) fail(ErrorCode::Config, key + ": expected grid:SPACING:v0,v1,...");
      const double h = to_number(rest.substr(0, colon), key);
      auto vals = to_numbers(rest.substr(colon + 1), key);
      if (vals.empty()) fail(ErrorCode::Config, key + ": empty grid");
      return AgeProfile(h, std::move(vals), ext);
    }
    return AgeProfile::constant(to_number(v, key));
  }

 private:
  const pt::ptree& tree_;
  std::string base_;
};

std::string render_profile(const AgeProfile& p) {
  if (p.size() == 1 && p.extension() == Extension::ConstantLast) return format_double(p[0]);
  std::ostringstream os;
  os << "grid:" << format_double(p.spacing()) << ':';
  for (std::size_t i = 0; i < p.size(); ++i) os << (i ? "," : "") << format_double(p[i]);
  return os.str();
}

std::string render_list(const std::vector<double>& v) {
  std::ostringstream os;
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? ", " : "") << format_double(v[i]);
  return os.str();
}

}  // namespace

Scenario parse_scenario(const std::string& text, const std::string& base_dir) {
  pt::ptree tree;
  try {
    std::istringstream is(text);
    pt::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    fail(ErrorCode::Config, std::string("config syntax: ") + e.what());
  }
  Reader r(tree, base_dir);
  Scenario sc;

  const std::string kin = r.required_text("model.kinetics");
  const double mu_max = r.number("model.mu_max");
  GrowthKinetics mu = GrowthKinetics::monod(1.0, 1.0);
  if (kin == "monod") {
    mu = GrowthKinetics::monod(mu_max, r.number("model.K_S"));
  } else if (kin == "haldane") {
    mu = GrowthKinetics::haldane(mu_max, r.number("model.K_P"), r.number("model.K_I"));
  } else {
    fail(ErrorCode::Config, "model.kinetics must be 'monod' or 'haldane'");
  }
  sc.model = ChemostatModel{
      mu, r.profile("model.beta", r.extension("model.beta_extension", Extension::ConstantLast)),
      r.profile("model.k", r.extension("model.k_extension", Extension::Zero)),
      r.profile("model.q", r.extension("model.q_extension", Extension::Zero)), r.number("model.S_in")};
  require_valid(sc.model);

  const std::string kind = r.text("initial.type").value_or("exponential");
  sc.initial.s0 = r.number("initial.S0");
  if (kind == "exponential") {
    sc.initial.kind = InitialSpec::Kind::Exponential;
    sc.initial.c = r.number("initial.C", 1.0);
  } else if (kind == "table") {
    sc.initial.kind = InitialSpec::Kind::Table;
    sc.initial.table = r.profile("initial.profile", Extension::Zero);
  } else {
    fail(ErrorCode::Config, "initial.type must be 'exponential' or 'table'");
  }

  std::vector<std::pair<double, double>> steps;
  for (const auto& item : split(r.required_text("dilution.schedule"), ',')) {
    const auto parts = split(item, ':');
    if (parts.size() != 2) fail(ErrorCode::Config, "dilution.schedule entries are TIME:VALUE");
    steps.emplace_back(to_number(parts[0], "dilution.schedule"), to_number(parts[1], "dilution.schedule"));
  }
  try {
    sc.dilution = DilutionSignal::schedule(steps);
  } catch (const Error& e) {
    fail(ErrorCode::Config, std::string("dilution.schedule: ") + e.what());
  }

  sc.horizon = r.number("run.T");
  if (!(sc.horizon > 0.0)) fail(ErrorCode::Config, "run.T must be positive");

  auto& n = sc.numerics;
  n.dt = r.number("numerics.dt");
  n.tol_fp = r.number("numerics.tol_fp", n.tol_fp);
  n.max_iter = static_cast<int>(r.number("numerics.max_iter", n.max_iter));
  n.delta_cap = r.number("numerics.delta_cap", n.delta_cap);
  n.eps_tail_rel = r.number("numerics.eps_tail_rel", n.eps_tail_rel);
  n.tol_compat = r.number("numerics.tol_compat", n.tol_compat);
  if (auto v = r.text("numerics.strict_window")) {
    if (*v != "true" && *v != "false") fail(ErrorCode::Config, "numerics.strict_window must be true or false");
    n.strict_window = *v == "true";
  }
  if (!(n.dt > 0.0) || !(n.delta_cap > 0.0) || n.max_iter < 1 || !(n.tol_compat > 0.0) ||
      !(n.eps_tail_rel > 0.0 && n.eps_tail_rel < 1.0)) {
    fail(ErrorCode::Config, "numerics must be positive (eps_tail_rel below 1)");
  }

  sc.output.sample_times = to_numbers(r.text("output.sample_times").value_or(""), "output.sample_times");
  sc.output.snapshot_times =
      to_numbers(r.text("output.snapshot_times").value_or(""), "output.snapshot_times");
  sc.output.dir = r.text("output.dir").value_or("out");
  for (double t : sc.output.sample_times) lattice_node(t, n.dt);
  for (double t : sc.output.snapshot_times) lattice_node(t, n.dt);
  return sc;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  auto base = fs::path(path).parent_path().string();
  return parse_scenario(ss.str(), base.empty() ? "." : base);
}

std::string render_scenario(const Scenario& sc) {
  std::ostringstream os;
  const auto& m = sc.model;
  os << "[model]\n";
  os << "kinetics = " << m.mu.name() << '\n';
  if (const auto* p = std::get_if<Monod>(&m.mu.parameters())) {
    os << "mu_max = " << format_double(p->mu_max) << "\nK_S = " << format_double(p->k_s) << '\n';
  } else {
    const auto& h = std::get<Haldane>(m.mu.parameters());
    os << "mu_max = " << format_double(h.mu_max) << "\nK_P = " << format_double(h.k_p)
       << "\nK_I = " << format_double(h.k_i) << '\n';
  }
  os << "S_in = " << format_double(m.s_in) << '\n';
  os << "beta = " << render_profile(m.beta) << "\nbeta_extension = " << to_string(m.beta.extension()) << '\n';
  os << "k = " << render_profile(m.k) << "\nk_extension = " << to_string(m.k.extension()) << '\n';
  os << "q = " << render_profile(m.q) << "\nq_extension = " << to_string(m.q.extension()) << '\n';

  os << "\n[initial]\n";
  if (sc.initial.kind == InitialSpec::Kind::Exponential) {
    os << "type = exponential\nS0 = " << format_double(sc.initial.s0) << "\nC = " << format_double(sc.initial.c)
       << '\n';
  } else {
    os << "type = table\nS0 = " << format_double(sc.initial.s0) << "\nprofile = " << render_profile(*sc.initial.table)
       << '\n';
  }

  os << "\n[dilution]\nschedule = ";
  const auto bps = sc.dilution.breakpoints();
  for (std::size_t i = 0; i < bps.size(); ++i) {
    os << (i ? ", " : "") << format_double(bps[i]) << ':' << format_double(sc.dilution.values()[i]);
  }
  os << "\n\n[run]\nT = " << format_double(sc.horizon) << '\n';

  const auto& n = sc.numerics;
  os << "\n[numerics]\ndt = " << format_double(n.dt) << "\ntol_fp = " << format_double(n.tol_fp)
     << "\nmax_iter = " << n.max_iter << "\ndelta_cap = " << format_double(n.delta_cap)
     << "\neps_tail_rel = " << format_double(n.eps_tail_rel) << "\ntol_compat = " << format_double(n.tol_compat)
     << "\nstrict_window = " << (n.strict_window ? "true" : "false") << '\n';

  os << "\n[output]\nsample_times = " << render_list(sc.output.sample_times)
     << "\nsnapshot_times = " << render_list(sc.output.snapshot_times) << "\ndir = " << sc.output.dir << '\n';
  return os.str();
}

ChemostatState build_initial_state(const Scenario& sc) {
  const double dt = sc.numerics.dt;
  if (sc.initial.kind == InitialSpec::Kind::Exponential) {
    return make_compatible_exponential(sc.model, sc.initial.s0, sc.initial.c, dt, sc.numerics.eps_tail_rel);
  }
  const auto& table = *sc.initial.table;
  AgeProfile f = std::abs(table.spacing() - dt) <= 1e-12 * dt ? AgeProfile(dt, std::vector<double>(table.values().begin(), table.values().end()), Extension::Zero)
                                                               : resample(table, dt);
  return ChemostatState{std::move(f), sc.initial.s0};
}

bool ValidationSummary::passed() const {
  return max_renewal_excess <= 0.0 && envelopes.holds() && samples_in_x == samples && max_contraction_ratio < 1.0;
}

ValidationSummary summarize(const Trajectory& traj, const ChemostatModel& model, const DilutionSignal& d) {
  ValidationSummary v;
  v.max_renewal_excess = traj.max_renewal_excess();
  v.envelopes = envelope_check(traj, model, d);
  for (const auto& [node, st] : traj.samples) {
    ++v.samples;
    if (check_membership(st, model, traj.tol_compat, traj.eps_tail).ok()) ++v.samples_in_x;
  }
  v.windows = traj.windows.size();
  for (const auto& w : traj.windows) {
    v.max_contraction_ratio = std::max(v.max_contraction_ratio, w.diagnostics.contraction_ratio);
    if (w.diagnostics.below_guarantee) ++v.windows_below_guarantee;
  }
  v.min_s = traj.min_s();
  v.max_s = traj.max_s();
  if (!traj.history.empty()) {
    for (const auto& phi : test_battery(model, traj.horizon())) {
      v.weak_form.emplace_back(phi.name, weak_form_residual(traj, model, d, phi, traj.horizon()));
    }
    if (traj.nodes() >= 3) v.moment = moment_residual(traj, model, d, constant_one());
  }
  return v;
}

std::string render_validation_text(const ValidationSummary& v) {
  std::ostringstream os;
  auto mark = [](bool ok) { return ok ? "ok  " : "FAIL"; };
  os << "validation report\n";
  os << mark(v.max_renewal_excess <= 0.0) << " renewal residual: max excess over tolerance "
     << format_double(v.max_renewal_excess) << '\n';
  os << mark(v.envelopes.mass.worst >= -1e-3) << " mass bound: worst relative slack "
     << format_double(v.envelopes.mass.worst) << " at t = " << format_double(v.envelopes.mass.time) << '\n';
  os << mark(v.envelopes.upper.worst >= -1e-3) << " substrate upper bound: worst slack "
     << format_double(v.envelopes.upper.worst) << " at t = " << format_double(v.envelopes.upper.time) << '\n';
  os << mark(v.envelopes.lower.worst >= -1e-3) << " substrate lower bound: worst slack "
     << format_double(v.envelopes.lower.worst) << " at t = " << format_double(v.envelopes.lower.time) << '\n';
  os << mark(v.samples_in_x == v.samples) << " membership: " << v.samples_in_x << " of " << v.samples
     << " sampled states\n";
  os << mark(v.max_contraction_ratio < 1.0) << " contraction: max measured ratio "
     << format_double(v.max_contraction_ratio) << " over " << v.windows << " windows ("
     << v.windows_below_guarantee << " shorter than dt guarantee)\n";
  os << "S range: [" << format_double(v.min_s) << ", " << format_double(v.max_s) << "]\n";
  for (const auto& [name, r] : v.weak_form) os << "weak form residual (" << name << "): " << format_double(r) << '\n';
  if (v.moment) {
    os << "moment residual (one): " << format_double(v.moment->max_residual) << " over "
       << v.moment->nodes_checked << " nodes\n";
  }
  os << (v.passed() ? "PASS" : "FAIL") << '\n';
  return os.str();
}

std::string render_validation_kv(const ValidationSummary& v) {
  std::ostringstream os;
  os << "passed=" << (v.passed() ? 1 : 0) << '\n';
  os << "renewal_max_excess=" << format_double(v.max_renewal_excess) << '\n';
  os << "envelope_mass_slack=" << format_double(v.envelopes.mass.worst) << '\n';
  os << "envelope_upper_slack=" << format_double(v.envelopes.upper.worst) << '\n';
  os << "envelope_lower_slack=" << format_double(v.envelopes.lower.worst) << '\n';
  os << "samples=" << v.samples << "\nsamples_in_x=" << v.samples_in_x << '\n';
  os << "windows=" << v.windows << "\nwindows_below_guarantee=" << v.windows_below_guarantee << '\n';
  os << "max_contraction_ratio=" << format_double(v.max_contraction_ratio) << '\n';
  os << "min_s=" << format_double(v.min_s) << "\nmax_s=" << format_double(v.max_s) << '\n';
  for (const auto& [name, r] : v.weak_form) os << "weak_form_" << name << '=' << format_double(r) << '\n';
  if (v.moment) os << "moment_residual_one=" << format_double(v.moment->max_residual) << '\n';
  return os.str();
}

namespace {

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  if (!out) fail(ErrorCode::Io, "cannot write " + p.string());
  out << text;
  if (!out) fail(ErrorCode::Io, "write failed: " + p.string());
}

std::string snapshot_name(std::size_t node) {
  std::ostringstream os;
  os << "snapshot_" << std::setw(7) << std::setfill('0') << node << ".csv";
  return os.str();
}

// History doubles kept for the weak-form battery in validate runs.
constexpr double kHistoryBudget = 2e7;

}  // namespace

RunResult run_scenario(const Scenario& sc, const std::string& out_dir, bool with_kv) {
  const auto state0 = build_initial_state(sc);
  std::vector<double> samples = sc.output.sample_times;
  samples.insert(samples.end(), sc.output.snapshot_times.begin(), sc.output.snapshot_times.end());

  Numerics num = sc.numerics;
  const double nodes = std::round(sc.horizon / num.dt) + 1.0;
  num.keep_history = with_kv && nodes * (static_cast<double>(state0.f.size()) + nodes) <= kHistoryBudget;

  RunResult res;
  res.trajectory = advance(sc.model, sc.dilution, state0, sc.horizon, num, samples);
  const auto& traj = res.trajectory;
  res.validation = summarize(traj, sc.model, sc.dilution);

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) fail(ErrorCode::Io, "cannot create " + out_dir + ": " + ec.message());
  const fs::path dir(out_dir);

  std::ostringstream manifest;
  manifest << render_scenario(sc);
  const auto gc = growth_constants(sc.model.mu, sc.model.s_in);
  manifest << "\n[derived]\nM_global = " << format_double(gc.m_global) << "\nM_box = " << format_double(gc.m_box)
           << "\nL_mu = " << format_double(gc.l_mu) << "\nGamma = " << format_double(gc.gamma)
           << "\nK = " << format_double(window_constant(sc.model)) << '\n';
  if (sc.initial.kind == InitialSpec::Kind::Exponential) {
    manifest << "lambda = " << format_double(compatible_decay_rate(sc.model, sc.initial.s0)) << '\n';
  }
  manifest << "windows = " << traj.windows.size() << "\ntotal_iterations = " << traj.total_iterations() << '\n';
  manifest << "\n[windows]\n";
  for (std::size_t i = 0; i < traj.windows.size(); ++i) {
    const auto& w = traj.windows[i];
    manifest << 'w' << i << " = " << format_double(w.start_time) << ", " << format_double(w.delta) << ", "
             << w.diagnostics.iterations << ", " << format_double(w.diagnostics.contraction_ratio) << ", "
             << (w.diagnostics.below_guarantee ? 1 : 0) << '\n';
  }
  write_text(dir / "manifest.ini", manifest.str());
  res.files.push_back((dir / "manifest.ini").string());

  write_timeseries((dir / "timeseries.csv").string(), traj);
  res.files.push_back((dir / "timeseries.csv").string());

  std::vector<double> snaps = sc.output.snapshot_times;
  if (snaps.empty()) snaps.push_back(sc.horizon);
  for (double t : snaps) {
    const std::size_t node = traj.node_of(t);
    const auto p = dir / snapshot_name(node);
    write_snapshot(p.string(), traj.state(node), traj.t[node]);
    res.files.push_back(p.string());
  }

  write_text(dir / "validation.txt", render_validation_text(res.validation));
  res.files.push_back((dir / "validation.txt").string());
  if (with_kv) {
    write_text(dir / "validation.kv", render_validation_kv(res.validation));
    res.files.push_back((dir / "validation.kv").string());
  }
  return res;
}

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
  const auto workers = static_cast<std::size_t>(std::max(1, threads));
  if (workers == 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::mutex mu;
  std::exception_ptr first;
  std::size_t next = 0;
  auto work = [&]() {
    for (;;) {
      std::size_t i;
      {
        std::lock_guard<std::mutex> lock(mu);
        if (next >= n || first) return;
        i = next++;
      }
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!first) first = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < std::min(workers, n); ++w) pool.emplace_back(work);
  for (auto& th : pool) th.join();
  if (first) std::rethrow_exception(first);
}

std::vector<double> halving_levels(double dt, int levels) {
  if (levels < 3) fail(ErrorCode::Argument, "a refinement study needs at least 3 levels");
  std::vector<double> out;
  for (int i = 0; i < levels; ++i) out.push_back(dt / std::pow(2.0, i));
  return out;
}

namespace {

void require_decreasing(std::span<const double> dts) {
  if (dts.size() < 3) fail(ErrorCode::Argument, "a refinement study needs at least 3 levels");
  for (std::size_t i = 0; i < dts.size(); ++i) {
    if (!(dts[i] > 0.0)) fail(ErrorCode::Argument, "refinement levels must be positive");
    if (i > 0 && !(dts[i] < dts[i - 1])) {
      fail(ErrorCode::Argument, "refinement levels must be strictly decreasing");
    }
  }
}

}  // namespace

RefineTable refine_study(const Scenario& sc, std::span<const double> dts, int threads) {
  require_decreasing(dts);
  RefineTable table;
  for (const auto& phi : test_battery(sc.model, sc.horizon)) table.functions.push_back(phi.name);
  table.levels.resize(dts.size());
  parallel_for(dts.size(), threads, [&](std::size_t i) {
    Scenario level = sc;
    level.numerics.dt = dts[i];
    level.numerics.keep_history = true;
    const auto state0 = build_initial_state(level);
    const auto traj = advance(level.model, level.dilution, state0, level.horizon, level.numerics);
    auto& out = table.levels[i];
    out.dt = dts[i];
    for (const auto& phi : test_battery(level.model, level.horizon)) {
      out.weak_form.push_back(weak_form_residual(traj, level.model, level.dilution, phi, level.horizon));
    }
    out.terminal = traj.terminal;
  });
  for (std::size_t i = 0; i + 1 < table.levels.size(); ++i) {
    table.levels[i].gap_to_next = metric(table.levels[i + 1].terminal, table.levels[i].terminal, true);
  }
  for (std::size_t i = 0; i + 1 < table.levels.size(); ++i) {
    const double ratio = std::log(dts[i] / dts[i + 1]);
    std::vector<double> row;
    for (std::size_t f = 0; f < table.functions.size(); ++f) {
      row.push_back(std::log(table.levels[i].weak_form[f] / table.levels[i + 1].weak_form[f]) / ratio);
    }
    table.orders.push_back(std::move(row));
  }
  const std::size_t g = table.levels.size() - 1;  // number of gaps
  for (std::size_t i = 0; i + 1 < g; ++i) {
    table.gap_orders.push_back(std::log(table.levels[i].gap_to_next / table.levels[i + 1].gap_to_next) /
                               std::log(dts[i + 1] / dts[i + 2]));
  }
  const double p = table.gap_orders.back();
  const double rho = dts[g - 1] / dts[g];
  const double last_gap = table.levels[g - 1].gap_to_next;
  table.richardson_gap = p > 0.0 ? last_gap / (std::pow(rho, p) - 1.0) : NAN;
  return table;
}

std::string render_refine_table(const RefineTable& t) {
  std::ostringstream os;
  os << "# dt";
  for (const auto& f : t.functions) os << ",wf_" << f;
  os << ",gap_to_next\n";
  for (const auto& l : t.levels) {
    os << format_double(l.dt);
    for (double r : l.weak_form) os << ',' << format_double(r);
    os << ',' << format_double(l.gap_to_next) << '\n';
  }
  os << "# orders (log ratio over log dt ratio)\n";
  for (std::size_t i = 0; i < t.orders.size(); ++i) {
    os << "order_" << i << '_' << i + 1;
    for (double o : t.orders[i]) os << ',' << format_double(o);
    os << ',' << (i < t.gap_orders.size() ? format_double(t.gap_orders[i]) : std::string("nan")) << '\n';
  }
  os << "# richardson extrapolated gap at the finest level: " << format_double(t.richardson_gap) << '\n';
  return os.str();
}

PerturbReport perturb_experiment(const Scenario& sc, double epsilon, int threads) {
  if (!(epsilon > 0.0 && epsilon < 0.1)) fail(ErrorCode::Argument, "epsilon must lie in (0, 0.1)");
  if (sc.initial.kind != InitialSpec::Kind::Exponential) {
    fail(ErrorCode::Config, "perturbation needs an exponential initial condition");
  }
  Scenario other = sc;
  other.initial.s0 = sc.initial.s0 * (1.0 + epsilon);
  other.initial.c = sc.initial.c * (1.0 + epsilon);
  if (!(other.initial.s0 < sc.model.s_in)) {
    std::ostringstream os;
    os << "perturbed S0 = " << other.initial.s0 << " leaves (0, S_in = " << sc.model.s_in << ")";
    fail(ErrorCode::Domain, os.str());
  }
  const double dt = sc.numerics.dt;
  std::vector<double> samples = sc.output.sample_times;
  const std::size_t total = lattice_node(sc.horizon, dt);
  const std::size_t every = std::max<std::size_t>(1, total / 100);
  for (std::size_t j = 0; j <= total; j += every) samples.push_back(static_cast<double>(j) * dt);

  std::vector<Trajectory> runs(2);
  const Scenario* scs[2] = {&sc, &other};
  parallel_for(2, threads, [&](std::size_t i) {
    const auto state0 = build_initial_state(*scs[i]);
    runs[i] = advance(scs[i]->model, scs[i]->dilution, state0, scs[i]->horizon, scs[i]->numerics, samples);
  });
  PerturbReport rep;
  rep.epsilon = epsilon;
  rep.dependence = dependence_check(runs[0], runs[1], sc.model, sc.dilution);
  rep.terminal_distance = metric(runs[0].terminal, runs[1].terminal);
  return rep;
}

std::string render_perturb_report(const PerturbReport& r) {
  std::ostringstream os;
  os << "epsilon=" << format_double(r.epsilon) << '\n';
  os << "chi=" << format_double(r.dependence.chi) << '\n';
  os << "initial_distance=" << format_double(r.dependence.initial_distance) << '\n';
  os << "terminal_distance=" << format_double(r.terminal_distance) << '\n';
  os << "max_amplification=" << format_double(r.dependence.max_amplification) << '\n';
  os << "worst_time=" << format_double(r.dependence.worst_time) << '\n';
  os << "nodes_compared=" << r.dependence.nodes_compared << '\n';
  os << "bound_holds=" << (r.dependence.holds ? 1 : 0) << '\n';
  return os.str();
}

OracleComparison compare_with_moment_oracle(const Scenario& sc) {
  const auto params = constant_rate_params(sc.model, sc.dilution);
  if (!params) {
    fail(ErrorCode::Config, "moment-closure comparison needs constant k, beta and q");
  }
  const auto state0 = build_initial_state(sc);
  OracleComparison c;
  const auto start = std::chrono::steady_clock::now();
  const auto traj = advance(sc.model, sc.dilution, state0, sc.horizon, sc.numerics);
  c.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  constexpr std::size_t kSub = 4;
  const auto ode = moment_ode_oracle(*params, l1_norm(state0.f), state0.s, sc.horizon, sc.numerics.dt / kSub);
  for (std::size_t j = 0; j < traj.nodes(); ++j) {
    const std::size_t o = j * kSub;
    c.max_rel_error_n = std::max(c.max_rel_error_n, std::abs(traj.mass[j] - ode.n[o]) / std::abs(ode.n[o]));
    c.max_rel_error_s = std::max(c.max_rel_error_s, std::abs(traj.s[j] - ode.s[o]) / std::abs(ode.s[o]));
  }
  c.passed = c.max_rel_error_n <= 1e-3 && c.max_rel_error_s <= 1e-3;
  return c;
}

std::string render_oracle_comparison(const OracleComparison& c) {
  std::ostringstream os;
  os << "oracle=moment\nmax_rel_error_N=" << format_double(c.max_rel_error_n)
     << "\nmax_rel_error_S=" << format_double(c.max_rel_error_s) << "\nseconds=" << format_double(c.seconds)
     << "\npassed=" << (c.passed ? 1 : 0) << '\n';
  return os.str();
}

MutualConvergence compare_with_upwind(const Scenario& sc, std::span<const double> dts, int threads) {
  require_decreasing(dts);
  MutualConvergence m;
  m.dts.assign(dts.begin(), dts.end());
  m.gaps.resize(dts.size());
  m.relative_gaps.resize(dts.size());
  parallel_for(dts.size(), threads, [&](std::size_t i) {
    Scenario level = sc;
    level.numerics.dt = dts[i];
    const auto state0 = build_initial_state(level);
    const auto fp = advance(level.model, level.dilution, state0, level.horizon, level.numerics);
    const auto up = upwind_pde_oracle(level.model, level.dilution, state0, level.horizon, dts[i]);
    m.gaps[i] = metric(fp.terminal, up.terminal);
    m.relative_gaps[i] = m.gaps[i] / (l1_norm(fp.terminal.f) + fp.terminal.s);
  });
  m.monotone = true;
  for (std::size_t i = 0; i + 1 < dts.size(); ++i) {
    m.orders.push_back(std::log(m.gaps[i] / m.gaps[i + 1]) / std::log(dts[i] / dts[i + 1]));
    if (!(m.gaps[i + 1] < m.gaps[i])) m.monotone = false;
  }
  m.overall_order = std::log(m.gaps.front() / m.gaps.back()) / std::log(dts.front() / dts.back());
  return m;
}

std::string render_mutual_convergence(const MutualConvergence& m) {
  std::ostringstream os;
  os << "# dt,gap,relative_gap\n";
  for (std::size_t i = 0; i < m.dts.size(); ++i) {
    os << format_double(m.dts[i]) << ',' << format_double(m.gaps[i]) << ',' << format_double(m.relative_gaps[i])
       << '\n';
  }
  for (std::size_t i = 0; i < m.orders.size(); ++i) os << "# order_" << i << '_' << i + 1 << '=' << format_double(m.orders[i]) << '\n';
  os << "# overall_order=" << format_double(m.overall_order) << '\n';
  os << "# monotone=" << (m.monotone ? 1 : 0) << '\n';
  return os.str();
}

}  // namespace agechem
