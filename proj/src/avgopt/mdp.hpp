#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "avgopt/rng.hpp"

namespace avgopt {

using StateId = std::size_t;
using ActionId = std::size_t;
using OptionId = std::size_t;

/// One entry of a dynamics row p(s', r | s, a). Rewards are stored as an
/// index into FiniteMdp::reward_values.
struct Outcome {
  StateId next_state;
  std::size_t reward_index;
  double probability;
};

/// Tabular continuing MDP. Rows are indexed by (s, a) in row-major order.
struct FiniteMdp {
  std::size_t num_states = 0;
  std::size_t num_actions = 0;
  std::vector<double> reward_values;
  std::vector<std::vector<Outcome>> dynamics;
  StateId start_state = 0;

  FiniteMdp() = default;
  FiniteMdp(std::size_t states, std::size_t actions, std::vector<double> rewards,
            StateId start = 0);

  const std::vector<Outcome>& row(StateId s, ActionId a) const {
    return dynamics[s * num_actions + a];
  }
  std::vector<Outcome>& row(StateId s, ActionId a) { return dynamics[s * num_actions + a]; }

  void add_outcome(StateId s, ActionId a, StateId next, std::size_t reward_index, double p) {
    row(s, a).push_back({next, reward_index, p});
  }

  double reward(const Outcome& o) const { return reward_values[o.reward_index]; }

  /// Sum over outcomes of p * r.
  double expected_reward(StateId s, ActionId a) const;
};

/// Returns one message per violated invariant; empty when the MDP is valid.
std::vector<std::string> validate_mdp(const FiniteMdp& mdp);

struct StepResult {
  StateId next_state;
  double reward;
};

/// Samples (s', r) from the dynamics row of (s, a). Consumes exactly one
/// uniform variate. Throws std::out_of_range on bad indices.
StepResult step(const FiniteMdp& mdp, StateId s, ActionId a, Rng& rng);

}  // namespace avgopt
