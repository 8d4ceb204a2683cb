#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "avgopt/fourroom.hpp"
#include "avgopt/learners.hpp"

namespace avgopt {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Experiment description. Serialised as JSON with the sections env,
/// options, algorithm, params, execution and (optionally) sweep.
struct ExperimentConfig {
  struct Env {
    std::string map = "default";  // "default" or a path to a map file
    Goal goal = Goal::G1;
    double goal_reward = 1.0;
    friend bool operator==(const Env&, const Env&) = default;
  } env;

  struct Options {
    std::string set = "A+H";  // A, H or A+H
    friend bool operator==(const Options&, const Options&) = default;
  } options;

  struct Algorithm {
    std::string name = "inter_dql";
    std::string behavior = "epsilon_greedy";  // epsilon_greedy, uniform, uniform_primitive
    std::string target = "optimal";           // evaluation target (dqe only)
    bool interrupt = false;
    std::size_t planning_steps = 10;  // combined agent only
    friend bool operator==(const Algorithm&, const Algorithm&) = default;
  } algorithm;

  LearnerParams params;

  struct Execution {
    std::size_t steps = 200'000;
    std::size_t runs = 10;
    std::uint64_t seed = 0;
    std::size_t snapshot_every = 1000;
    std::size_t window = 1000;
    bool eval_greedy = true;
    std::size_t jobs = 1;
    std::size_t max_option_steps = kDefaultMaxOptionSteps;
    friend bool operator==(const Execution&, const Execution&) = default;
  } execution;

  struct Sweep {
    std::vector<double> alpha;
    std::vector<double> beta;
    std::vector<double> eta;
    friend bool operator==(const Sweep&, const Sweep&) = default;
  } sweep;

  /// Throws ConfigError naming the offending field.
  void validate() const;

  friend bool operator==(const ExperimentConfig& a, const ExperimentConfig& b);
};

/// Known algorithm names.
const std::vector<std::string_view>& algorithm_names();
bool is_planning_algorithm(std::string_view name);

std::string to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(std::string_view text);
ExperimentConfig read_config(const std::string& path);
void write_config(const ExperimentConfig& cfg, const std::string& path);

/// Applies "section.field=value"; the value is parsed as JSON when possible
/// and taken as a string otherwise. Unknown paths are errors.
void apply_override(ExperimentConfig& cfg, std::string_view assignment);

/// Map text for cfg.env.map.
std::string resolve_map_text(const ExperimentConfig& cfg);

}  // namespace avgopt
