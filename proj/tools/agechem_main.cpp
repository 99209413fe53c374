// Command-line front end; talks to the library only through the C API.
#include <cstdio>
#include <memory>
#include <string>

#include "CLI11.hpp"
#include "agechem/agechem.h"

namespace {

struct ScenarioDeleter {
  void operator()(agechem_scenario* s) const { agechem_scenario_free(s); }
};
using ScenarioPtr = std::unique_ptr<agechem_scenario, ScenarioDeleter>;

constexpr int kExitFailedCheck = 1;
constexpr int kExitError = 2;

int report_error(agechem_status st) {
  std::fprintf(stderr, "agechem: %s: %s\n", agechem_status_string(st), agechem_last_error());
  if (st == AGECHEM_ERR_CONVERGENCE || st == AGECHEM_ERR_CONTRACTION || st == AGECHEM_ERR_REFINE_GRID) {
    std::fprintf(stderr, "agechem: try a smaller [numerics] dt\n");
  }
  return kExitError;
}

void print_report(char* report) {
  if (!report) return;
  std::fputs(report, stdout);
  agechem_string_free(report);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Age-structured chemostat simulator"};
  app.set_version_flag("--version", std::string(agechem_version()));
  app.require_subcommand(1);

  std::string config;
  std::string out;
  int levels = 3;
  double epsilon = 1e-2;
  int threads = 1;
  std::string oracle = "moment";

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config, "Scenario file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out, "Output directory (default: [output] dir of the scenario)");
  };
  auto add_threads = [&](CLI::App* sub) {
    sub->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
  };

  auto* simulate = app.add_subcommand("simulate", "Run a scenario and write its artifacts");
  add_common(simulate);
  auto* validate = app.add_subcommand("validate", "Run a scenario with the full validation battery");
  add_common(validate);
  auto* refine = app.add_subcommand("refine", "Grid-refinement study at dt, dt/2, ...");
  add_common(refine);
  refine->add_option("--levels", levels, "Number of grid levels (>= 3)");
  add_threads(refine);
  auto* perturb = app.add_subcommand("perturb", "Continuous-dependence experiment");
  add_common(perturb);
  perturb->add_option("--epsilon", epsilon, "Relative perturbation size in (0, 0.1)");
  add_threads(perturb);
  auto* compare = app.add_subcommand("oracle-compare", "Compare against an independent solver");
  add_common(compare);
  compare->add_option("--oracle", oracle, "moment or upwind")->check(CLI::IsMember({"moment", "upwind"}));
  add_threads(compare);

  CLI11_PARSE(app, argc, argv);

  agechem_scenario* raw = nullptr;
  if (auto st = agechem_scenario_load(config.c_str(), &raw); st != AGECHEM_OK) return report_error(st);
  ScenarioPtr sc(raw);
  const char* dir = out.empty() ? nullptr : out.c_str();
  char* report = nullptr;
  int ok = 1;
  agechem_status st = AGECHEM_OK;

  if (simulate->parsed()) {
    st = agechem_scenario_simulate(sc.get(), dir, 0, &ok, &report);
    ok = 1;  // plain runs only fail on errors
  } else if (validate->parsed()) {
    st = agechem_scenario_simulate(sc.get(), dir, 1, &ok, &report);
  } else if (refine->parsed()) {
    st = agechem_scenario_refine(sc.get(), dir, levels, threads, &report);
  } else if (perturb->parsed()) {
    st = agechem_scenario_perturb(sc.get(), dir, epsilon, threads, &ok, &report);
  } else if (compare->parsed()) {
    st = agechem_scenario_oracle_compare(sc.get(), dir, oracle.c_str(), threads, &ok, &report);
  }
  if (st != AGECHEM_OK) return report_error(st);
  print_report(report);
  return ok ? 0 : kExitFailedCheck;
}
