// Command-line front end. Talks to the library only through the C API.
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "avgopt/avgopt.h"

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

struct Invocation {
  std::string config;
  std::string out = "out";
  std::vector<std::string> overrides;
  long long seed = -1;
  long long jobs = 0;
  bool quiet = false;
};

int status_exit(avgopt_status st) {
  std::cerr << "error: " << avgopt_last_error() << "\n";
  return st == AVGOPT_ERR_USAGE ? kExitUsage : kExitRuntime;
}

int run(const std::string& command, const Invocation& inv) {
  avgopt_config* cfg = nullptr;
  avgopt_status st =
      inv.config.empty() ? avgopt_config_default(&cfg) : avgopt_config_load(inv.config.c_str(), &cfg);
  if (st != AVGOPT_OK) return status_exit(st);

  std::vector<std::string> assignments = inv.overrides;
  if (inv.seed >= 0) assignments.push_back("execution.seed=" + std::to_string(inv.seed));
  if (inv.jobs > 0) assignments.push_back("execution.jobs=" + std::to_string(inv.jobs));
  for (const auto& a : assignments) {
    st = avgopt_config_set(cfg, a.c_str());
    if (st != AVGOPT_OK) {
      avgopt_config_free(cfg);
      return status_exit(st);
    }
  }

  avgopt_report* report = nullptr;
  st = avgopt_run(command.c_str(), cfg, inv.out.c_str(), inv.quiet ? 0 : 1, &report);
  avgopt_config_free(cfg);
  if (st != AVGOPT_OK) return status_exit(st);
  std::cout << avgopt_report_summary(report);
  if (!inv.quiet) {
    std::cerr << "wrote " << avgopt_report_artifact_count(report) << " files to " << inv.out << "\n";
  }
  avgopt_report_free(report);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Average-reward learning and planning with options"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(avgopt_version()));

  Invocation inv;
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"solve", "exact optimal reward rate and option values"},
      {"learn", "run a learning algorithm"},
      {"plan", "run a planning algorithm"},
      {"sweep", "parameter sweep over the config's sweep lists"},
      {"interrupt", "compare execution with and without interruption"},
      {"model", "learn option models and report their error"}};
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("-c,--config", inv.config, "JSON config file")->check(CLI::ExistingFile);
    sub->add_option("-o,--out", inv.out, "output directory");
    sub->add_option("-s,--set", inv.overrides, "override, e.g. params.alpha=0.25 (repeatable)");
    sub->add_option("--seed", inv.seed, "base seed")->check(CLI::NonNegativeNumber);
    sub->add_option("-j,--jobs", inv.jobs, "concurrent runs")->check(CLI::PositiveNumber);
    sub->add_flag("-q,--quiet", inv.quiet, "no progress output");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }
  return run(app.get_subcommands().front()->get_name(), inv);
}
