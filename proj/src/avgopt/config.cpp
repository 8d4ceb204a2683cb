#include "avgopt/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace avgopt {

using nlohmann::json;

namespace {

const std::vector<std::string_view> kAlgorithms = {
    "inter_dql",    "inter_dqe",      "inter_unscaled", "gosavi",        "intra_dql",
    "intra_dqe",    "combined",       "inter_planning", "intra_planning", "model_learning"};

const std::vector<std::string_view> kBehaviors = {"epsilon_greedy", "uniform", "uniform_primitive"};

[[noreturn]] void field_error(const std::string& path, const std::string& what) {
  throw ConfigError("config field '" + path + "': " + what);
}

// Reads one JSON object, rejecting keys that no handler claims.
class Reader {
 public:
  Reader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) field_error(path_.empty() ? "<root>" : path_, "expected an object");
  }

  template <class T>
  void get(const char* key, T& out) {
    seen_.push_back(key);
    const auto it = obj_.find(key);
    if (it == obj_.end()) return;
    const std::string path = child(key);
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!it->is_boolean()) field_error(path, "expected true or false");
      } else if constexpr (std::is_integral_v<T>) {
        if (!it->is_number_integer() || (it->is_number_integer() && it->template get<long long>() < 0))
          field_error(path, "expected a non-negative integer");
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!it->is_number()) field_error(path, "expected a number");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!it->is_string()) field_error(path, "expected a string");
      } else {
        if (!it->is_array()) field_error(path, "expected a list of numbers");
        for (const auto& v : *it)
          if (!v.is_number()) field_error(path, "expected a list of numbers");
      }
      out = it->template get<T>();
    } catch (const json::exception& e) {
      field_error(path, e.what());
    }
  }

  Reader section(const char* key) {
    seen_.push_back(key);
    const auto it = obj_.find(key);
    static const json empty = json::object();
    return Reader(it == obj_.end() ? empty : *it, child(key));
  }

  void finish() const {
    for (const auto& [key, value] : obj_.items())
      if (std::find(seen_.begin(), seen_.end(), key) == seen_.end())
        field_error(child(key.c_str()), "unknown field");
  }

 private:
  std::string child(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

  const json& obj_;
  std::string path_;
  std::vector<std::string> seen_;
};

json to_json_value(const ExperimentConfig& c) {
  json j;
  j["env"] = {{"map", c.env.map}, {"goal", std::string(goal_name(c.env.goal))},
              {"goal_reward", c.env.goal_reward}};
  j["options"] = {{"set", c.options.set}};
  j["algorithm"] = {{"name", c.algorithm.name},
                    {"behavior", c.algorithm.behavior},
                    {"target", c.algorithm.target},
                    {"interrupt", c.algorithm.interrupt},
                    {"planning_steps", c.algorithm.planning_steps}};
  j["params"] = {{"alpha", c.params.alpha},
                 {"beta", c.params.beta},
                 {"eta", c.params.eta},
                 {"epsilon", c.params.epsilon},
                 {"schedule", std::string(schedule_name(c.params.schedule))},
                 {"ties", std::string(tie_break_name(c.params.ties))}};
  j["execution"] = {{"steps", c.execution.steps},
                    {"runs", c.execution.runs},
                    {"seed", c.execution.seed},
                    {"snapshot_every", c.execution.snapshot_every},
                    {"window", c.execution.window},
                    {"eval_greedy", c.execution.eval_greedy},
                    {"jobs", c.execution.jobs},
                    {"max_option_steps", c.execution.max_option_steps}};
  j["sweep"] = {{"alpha", c.sweep.alpha}, {"beta", c.sweep.beta}, {"eta", c.sweep.eta}};
  return j;
}

ExperimentConfig from_json_value(const json& j) {
  ExperimentConfig c;
  Reader root(j, "");
  {
    Reader r = root.section("env");
    std::string goal(goal_name(c.env.goal));
    r.get("map", c.env.map);
    r.get("goal", goal);
    r.get("goal_reward", c.env.goal_reward);
    r.finish();
    try {
      c.env.goal = parse_goal(goal);
    } catch (const std::invalid_argument& e) {
      field_error("env.goal", e.what());
    }
  }
  {
    Reader r = root.section("options");
    r.get("set", c.options.set);
    r.finish();
  }
  {
    Reader r = root.section("algorithm");
    r.get("name", c.algorithm.name);
    r.get("behavior", c.algorithm.behavior);
    r.get("target", c.algorithm.target);
    r.get("interrupt", c.algorithm.interrupt);
    r.get("planning_steps", c.algorithm.planning_steps);
    r.finish();
  }
  {
    Reader r = root.section("params");
    std::string schedule(schedule_name(c.params.schedule));
    std::string ties(tie_break_name(c.params.ties));
    r.get("alpha", c.params.alpha);
    r.get("beta", c.params.beta);
    r.get("eta", c.params.eta);
    r.get("epsilon", c.params.epsilon);
    r.get("schedule", schedule);
    r.get("ties", ties);
    r.finish();
    try {
      c.params.schedule = parse_schedule(schedule);
    } catch (const std::invalid_argument& e) {
      field_error("params.schedule", e.what());
    }
    try {
      c.params.ties = parse_tie_break(ties);
    } catch (const std::invalid_argument& e) {
      field_error("params.ties", e.what());
    }
  }
  {
    Reader r = root.section("execution");
    r.get("steps", c.execution.steps);
    r.get("runs", c.execution.runs);
    r.get("seed", c.execution.seed);
    r.get("snapshot_every", c.execution.snapshot_every);
    r.get("window", c.execution.window);
    r.get("eval_greedy", c.execution.eval_greedy);
    r.get("jobs", c.execution.jobs);
    r.get("max_option_steps", c.execution.max_option_steps);
    r.finish();
  }
  {
    Reader r = root.section("sweep");
    r.get("alpha", c.sweep.alpha);
    r.get("beta", c.sweep.beta);
    r.get("eta", c.sweep.eta);
    r.finish();
  }
  root.finish();
  c.validate();
  return c;
}

}  // namespace

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) {
  const auto& p = a.params;
  const auto& q = b.params;
  return a.env == b.env && a.options == b.options && a.algorithm == b.algorithm &&
         p.alpha == q.alpha && p.beta == q.beta && p.eta == q.eta && p.epsilon == q.epsilon &&
         p.schedule == q.schedule && p.ties == q.ties && a.execution == b.execution && a.sweep == b.sweep;
}

const std::vector<std::string_view>& algorithm_names() { return kAlgorithms; }

bool is_planning_algorithm(std::string_view name) {
  return name == "combined" || name == "inter_planning" || name == "intra_planning";
}

void ExperimentConfig::validate() const {
  if (std::find(kAlgorithms.begin(), kAlgorithms.end(), algorithm.name) == kAlgorithms.end())
    field_error("algorithm.name", "unknown algorithm '" + algorithm.name + "'");
  if (std::find(kBehaviors.begin(), kBehaviors.end(), algorithm.behavior) == kBehaviors.end())
    field_error("algorithm.behavior", "unknown behaviour '" + algorithm.behavior + "'");
  if (algorithm.target != "optimal")
    field_error("algorithm.target", "only 'optimal' is supported");
  if (options.set != "A" && options.set != "H" && options.set != "A+H" && options.set != "H+A")
    field_error("options.set", "expected A, H or A+H");
  if (execution.steps < 1) field_error("execution.steps", "must be >= 1");
  if (execution.runs < 1) field_error("execution.runs", "must be >= 1");
  if (execution.window < 1 || execution.window > execution.steps)
    field_error("execution.window", "must be in [1, steps]");
  if (execution.max_option_steps < 1) field_error("execution.max_option_steps", "must be >= 1");
  try {
    params.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  auto check_list = [](const std::vector<double>& xs, const char* path, bool unit) {
    for (double x : xs)
      if (!(x > 0.0) || (unit && x > 1.0)) field_error(path, "value " + std::to_string(x) + " out of range");
  };
  check_list(sweep.alpha, "sweep.alpha", false);
  check_list(sweep.beta, "sweep.beta", true);
  check_list(sweep.eta, "sweep.eta", false);
}

std::string to_json(const ExperimentConfig& cfg) { return to_json_value(cfg).dump(2) + "\n"; }

ExperimentConfig config_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return from_json_value(j);
}

ExperimentConfig read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_json(ss.str());
}

void write_config(const ExperimentConfig& cfg, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write config file '" + path + "'");
  out << to_json(cfg);
}

void apply_override(ExperimentConfig& cfg, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0)
    throw ConfigError("override '" + std::string(assignment) + "' must look like section.field=value");
  const std::string path(assignment.substr(0, eq));
  const std::string raw(assignment.substr(eq + 1));

  json j = to_json_value(cfg);
  json* node = &j;
  std::stringstream parts(path);
  std::string part;
  std::string walked;
  while (std::getline(parts, part, '.')) {
    walked += walked.empty() ? part : "." + part;
    if (!node->is_object() || !node->contains(part)) field_error(walked, "unknown field");
    node = &(*node)[part];
  }
  if (node->is_object()) field_error(path, "is a section, not a field");
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::parse_error&) {
    value = raw;
  }
  if (node->is_string() && !value.is_string()) value = raw;
  *node = value;
  cfg = from_json_value(j);
}

std::string resolve_map_text(const ExperimentConfig& cfg) {
  if (cfg.env.map == "default") return default_map();
  std::ifstream in(cfg.env.map);
  if (!in) throw ConfigError("config field 'env.map': cannot open map file '" + cfg.env.map + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace avgopt
