#include "avgopt/avgopt.h"

#include <cstring>
#include <iostream>
#include <new>
#include <string>

#include "avgopt/commands.hpp"
#include "avgopt/config.hpp"
#include "avgopt/harness.hpp"
#include "avgopt/oracle.hpp"

struct avgopt_config {
  avgopt::ExperimentConfig cfg;
};

struct avgopt_report {
  avgopt::CommandResult result;
};

struct avgopt_env {
  avgopt::ExperimentContext ctx;
};

namespace {

thread_local std::string g_last_error;

avgopt_status fail(avgopt_status code, const std::string& msg) {
  g_last_error = msg;
  return code;
}

// Maps exceptions from the core onto status codes.
template <class F>
avgopt_status guarded(F&& f) {
  try {
    f();
    return AVGOPT_OK;
  } catch (const avgopt::ConfigError& e) {
    return fail(AVGOPT_ERR_USAGE, e.what());
  } catch (const avgopt::UsageError& e) {
    return fail(AVGOPT_ERR_USAGE, e.what());
  } catch (const avgopt::ParseError& e) {
    return fail(AVGOPT_ERR_USAGE, e.what());
  } catch (const std::invalid_argument& e) {
    return fail(AVGOPT_ERR_USAGE, e.what());
  } catch (const std::bad_alloc&) {
    return fail(AVGOPT_ERR_RUNTIME, "out of memory");
  } catch (const std::exception& e) {
    return fail(AVGOPT_ERR_RUNTIME, e.what());
  } catch (...) {
    return fail(AVGOPT_ERR_RUNTIME, "unknown error");
  }
}

char* copy_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

}  // namespace

extern "C" {

const char* avgopt_version(void) { return "0.1.0"; }

const char* avgopt_last_error(void) { return g_last_error.c_str(); }

void avgopt_string_free(char* s) { delete[] s; }

avgopt_status avgopt_config_default(avgopt_config** out) {
  if (!out) return fail(AVGOPT_ERR_USAGE, "null output pointer");
  return guarded([&] { *out = new avgopt_config{}; });
}

avgopt_status avgopt_config_load(const char* path, avgopt_config** out) {
  if (!path || !out) return fail(AVGOPT_ERR_USAGE, "null argument");
  return guarded([&] { *out = new avgopt_config{avgopt::read_config(path)}; });
}

avgopt_status avgopt_config_parse(const char* json_text, avgopt_config** out) {
  if (!json_text || !out) return fail(AVGOPT_ERR_USAGE, "null argument");
  return guarded([&] { *out = new avgopt_config{avgopt::config_from_json(json_text)}; });
}

avgopt_status avgopt_config_set(avgopt_config* cfg, const char* assignment) {
  if (!cfg || !assignment) return fail(AVGOPT_ERR_USAGE, "null argument");
  return guarded([&] { avgopt::apply_override(cfg->cfg, assignment); });
}

avgopt_status avgopt_config_to_json(const avgopt_config* cfg, char** out) {
  if (!cfg || !out) return fail(AVGOPT_ERR_USAGE, "null argument");
  return guarded([&] { *out = copy_string(avgopt::to_json(cfg->cfg)); });
}

void avgopt_config_free(avgopt_config* cfg) { delete cfg; }

avgopt_status avgopt_run(const char* command, const avgopt_config* cfg, const char* out_dir, int verbose,
                         avgopt_report** out) {
  if (!command || !cfg || !out_dir || !out) return fail(AVGOPT_ERR_USAGE, "null argument");
  return guarded([&] {
    auto result = avgopt::run_command(command, cfg->cfg, out_dir, verbose ? &std::cerr : nullptr);
    *out = new avgopt_report{std::move(result)};
  });
}

const char* avgopt_report_summary(const avgopt_report* report) {
  return report ? report->result.summary.c_str() : "";
}

size_t avgopt_report_artifact_count(const avgopt_report* report) {
  return report ? report->result.artifacts.size() : 0;
}

const char* avgopt_report_artifact(const avgopt_report* report, size_t i) {
  if (!report || i >= report->result.artifacts.size()) return nullptr;
  return report->result.artifacts[i].c_str();
}

void avgopt_report_free(avgopt_report* report) { delete report; }

avgopt_status avgopt_env_create(const avgopt_config* cfg, avgopt_env** out) {
  if (!cfg || !out) return fail(AVGOPT_ERR_USAGE, "null argument");
  return guarded([&] { *out = new avgopt_env{avgopt::ExperimentContext::build(cfg->cfg)}; });
}

size_t avgopt_env_num_states(const avgopt_env* env) { return env ? env->ctx.env.mdp.num_states : 0; }

size_t avgopt_env_num_options(const avgopt_env* env) { return env ? env->ctx.options.size() : 0; }

const char* avgopt_env_option_label(const avgopt_env* env, size_t i) {
  if (!env || i >= env->ctx.options.labels.size()) return nullptr;
  return env->ctx.options.labels[i].c_str();
}

avgopt_status avgopt_env_optimal_rate(const avgopt_env* env, double* rate) {
  if (!env || !rate) return fail(AVGOPT_ERR_USAGE, "null argument");
  *rate = env->ctx.optimal.rate;
  return AVGOPT_OK;
}

avgopt_status avgopt_env_goal_distance(const avgopt_env* env, int* steps) {
  if (!env || !steps) return fail(AVGOPT_ERR_USAGE, "null argument");
  return guarded([&] {
    *steps = avgopt::bfs_distance(env->ctx.env.grid, env->ctx.env.grid.start, env->ctx.env.goal_cell);
  });
}

void avgopt_env_free(avgopt_env* env) { delete env; }

}  // extern "C"
