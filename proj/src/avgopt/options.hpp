#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "avgopt/mdp.hpp"
#include "avgopt/rng.hpp"

namespace avgopt {

inline constexpr std::size_t kDefaultMaxOptionSteps = 10'000;

/// An option: policy pi(a | s) and termination probability beta(s). Options
/// may be initiated in every state.
struct OptionDef {
  std::size_t num_states = 0;
  std::size_t num_actions = 0;
  std::vector<double> policy;       // [s * num_actions + a]
  std::vector<double> termination;  // [s]

  OptionDef() = default;
  OptionDef(std::size_t states, std::size_t actions)
      : num_states(states),
        num_actions(actions),
        policy(states * actions, 0.0),
        termination(states, 1.0) {}

  double pi(StateId s, ActionId a) const { return policy[s * num_actions + a]; }
  double& pi(StateId s, ActionId a) { return policy[s * num_actions + a]; }
  double beta(StateId s) const { return termination[s]; }

  std::span<const double> policy_row(StateId s) const {
    return {policy.data() + s * num_actions, num_actions};
  }
};

std::vector<std::string> validate_option(const OptionDef& opt);

struct OptionSet {
  std::vector<OptionDef> options;
  std::vector<std::string> labels;

  std::size_t size() const { return options.size(); }
  bool empty() const { return options.empty(); }
  const OptionDef& operator[](std::size_t i) const { return options[i]; }

  void add(OptionDef opt, std::string label) {
    options.push_back(std::move(opt));
    labels.push_back(std::move(label));
  }
};

/// Non-empty, shape-consistent with the MDP, and every option valid.
std::vector<std::string> validate_option_set(const OptionSet& set, const FiniteMdp& mdp);

/// The option that picks `a` everywhere and always terminates after one step.
OptionDef primitive_option(ActionId a, std::size_t num_states, std::size_t num_actions);

/// All primitive actions as options, labelled with `action_names` if given.
OptionSet primitive_options(std::size_t num_states, std::size_t num_actions,
                            const std::vector<std::string>& action_names = {});

OptionSet concat(const OptionSet& a, const OptionSet& b);

struct Transition {
  StateId state;
  ActionId action;
  double reward;
  StateId next_state;
};

/// A complete (or truncated) execution of one option.
struct OptionSegment {
  StateId start_state = 0;
  OptionId option_index = 0;
  double cum_reward = 0.0;
  std::size_t length = 0;
  StateId end_state = 0;
  std::vector<Transition> transitions;
  bool truncated = false;
};

/// Sampling primitives shared by every execution loop. Each consumes exactly
/// one uniform variate.
ActionId sample_action(const OptionDef& opt, StateId s, Rng& rng);
bool sample_termination(const OptionDef& opt, StateId s, Rng& rng);

/// Runs `opt` from `s0` until it terminates or `max_steps` primitive steps
/// have elapsed; in the latter case the segment is flagged as truncated.
OptionSegment execute_option(const FiniteMdp& mdp, const OptionDef& opt, StateId s0, Rng& rng,
                             std::size_t max_steps = kDefaultMaxOptionSteps,
                             OptionId option_index = 0);

}  // namespace avgopt
