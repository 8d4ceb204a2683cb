#include "avgopt/mdp.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace avgopt {

FiniteMdp::FiniteMdp(std::size_t states, std::size_t actions, std::vector<double> rewards,
                     StateId start)
    : num_states(states),
      num_actions(actions),
      reward_values(std::move(rewards)),
      dynamics(states * actions),
      start_state(start) {}

double FiniteMdp::expected_reward(StateId s, ActionId a) const {
  double r = 0.0;
  for (const auto& o : row(s, a)) r += o.probability * reward(o);
  return r;
}

std::vector<std::string> validate_mdp(const FiniteMdp& mdp) {
  std::vector<std::string> report;
  auto complain = [&report](auto&&... parts) {
    std::ostringstream os;
    (os << ... << parts);
    report.push_back(os.str());
  };

  if (mdp.num_states == 0) complain("num_states must be positive");
  if (mdp.num_actions == 0) complain("num_actions must be positive");
  if (mdp.reward_values.empty()) complain("reward_values is empty");
  for (std::size_t i = 0; i < mdp.reward_values.size(); ++i)
    if (!std::isfinite(mdp.reward_values[i])) complain("reward value ", i, " is not finite");
  if (mdp.dynamics.size() != mdp.num_states * mdp.num_actions) {
    complain("dynamics has ", mdp.dynamics.size(), " rows, expected ",
             mdp.num_states * mdp.num_actions);
    return report;
  }
  if (mdp.num_states > 0 && mdp.start_state >= mdp.num_states)
    complain("start_state ", mdp.start_state, " out of range");

  for (StateId s = 0; s < mdp.num_states; ++s) {
    for (ActionId a = 0; a < mdp.num_actions; ++a) {
      double total = 0.0;
      for (const auto& o : mdp.row(s, a)) {
        if (o.next_state >= mdp.num_states)
          complain("(s=", s, ", a=", a, "): next_state ", o.next_state, " out of range");
        if (o.reward_index >= mdp.reward_values.size())
          complain("(s=", s, ", a=", a, "): reward_index ", o.reward_index, " out of range");
        if (!(o.probability >= 0.0))
          complain("(s=", s, ", a=", a, "): negative probability ", o.probability);
        total += o.probability;
      }
      if (std::abs(total - 1.0) > 1e-12)
        complain("(s=", s, ", a=", a, "): probabilities sum to ", total);
    }
  }
  return report;
}

StepResult step(const FiniteMdp& mdp, StateId s, ActionId a, Rng& rng) {
  if (s >= mdp.num_states) throw std::out_of_range("step: state index out of range");
  if (a >= mdp.num_actions) throw std::out_of_range("step: action index out of range");
  const auto& outcomes = mdp.row(s, a);
  if (outcomes.empty()) throw std::out_of_range("step: empty dynamics row");
  const double u = rng.uniform();
  double acc = 0.0;
  for (const auto& o : outcomes) {
    acc += o.probability;
    if (u < acc) return {o.next_state, mdp.reward(o)};
  }
  for (auto it = outcomes.rbegin(); it != outcomes.rend(); ++it)
    if (it->probability > 0.0) return {it->next_state, mdp.reward(*it)};
  return {outcomes.back().next_state, mdp.reward(outcomes.back())};
}

}  // namespace avgopt
