#include "avgopt/options.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace avgopt {

std::vector<std::string> validate_option(const OptionDef& opt) {
  std::vector<std::string> report;
  if (opt.policy.size() != opt.num_states * opt.num_actions) {
    report.push_back("policy table has wrong size");
    return report;
  }
  if (opt.termination.size() != opt.num_states) {
    report.push_back("termination table has wrong size");
    return report;
  }
  for (StateId s = 0; s < opt.num_states; ++s) {
    double total = 0.0;
    bool negative = false;
    for (ActionId a = 0; a < opt.num_actions; ++a) {
      total += opt.pi(s, a);
      negative = negative || !(opt.pi(s, a) >= 0.0);
    }
    std::ostringstream os;
    if (negative) {
      os << "policy row " << s << " has a negative entry";
      report.push_back(os.str());
    } else if (std::abs(total - 1.0) > 1e-12) {
      os << "policy row " << s << " sums to " << total;
      report.push_back(os.str());
    }
    const double b = opt.beta(s);
    if (!(b >= 0.0 && b <= 1.0)) {
      std::ostringstream ts;
      ts << "termination at state " << s << " is " << b << ", outside [0,1]";
      report.push_back(ts.str());
    }
  }
  return report;
}

std::vector<std::string> validate_option_set(const OptionSet& set, const FiniteMdp& mdp) {
  std::vector<std::string> report;
  if (set.empty()) report.push_back("option set is empty");
  if (set.labels.size() != set.options.size()) report.push_back("labels and options differ in count");
  for (std::size_t i = 0; i < set.size(); ++i) {
    const auto& opt = set[i];
    if (opt.num_states != mdp.num_states || opt.num_actions != mdp.num_actions) {
      report.push_back("option " + std::to_string(i) + " does not match the MDP's shape");
      continue;
    }
    for (auto& msg : validate_option(opt)) report.push_back("option " + std::to_string(i) + ": " + msg);
  }
  return report;
}

OptionDef primitive_option(ActionId a, std::size_t num_states, std::size_t num_actions) {
  if (a >= num_actions) throw std::out_of_range("primitive_option: action out of range");
  OptionDef opt(num_states, num_actions);
  for (StateId s = 0; s < num_states; ++s) opt.pi(s, a) = 1.0;
  return opt;
}

OptionSet primitive_options(std::size_t num_states, std::size_t num_actions,
                            const std::vector<std::string>& action_names) {
  OptionSet set;
  for (ActionId a = 0; a < num_actions; ++a) {
    std::string label = a < action_names.size() ? action_names[a] : "a" + std::to_string(a);
    set.add(primitive_option(a, num_states, num_actions), std::move(label));
  }
  return set;
}

OptionSet concat(const OptionSet& a, const OptionSet& b) {
  OptionSet out = a;
  for (std::size_t i = 0; i < b.size(); ++i) out.add(b.options[i], b.labels[i]);
  return out;
}

ActionId sample_action(const OptionDef& opt, StateId s, Rng& rng) {
  return rng.categorical(opt.policy_row(s), 1.0);
}

bool sample_termination(const OptionDef& opt, StateId s, Rng& rng) {
  return rng.bernoulli(opt.beta(s));
}

OptionSegment execute_option(const FiniteMdp& mdp, const OptionDef& opt, StateId s0, Rng& rng,
                             std::size_t max_steps, OptionId option_index) {
  if (max_steps == 0) throw std::invalid_argument("execute_option: max_steps must be >= 1");
  if (s0 >= mdp.num_states) throw std::out_of_range("execute_option: start state out of range");
  OptionSegment seg;
  seg.start_state = s0;
  seg.option_index = option_index;
  StateId s = s0;
  while (true) {
    const ActionId a = sample_action(opt, s, rng);
    const auto [next, r] = step(mdp, s, a, rng);
    seg.transitions.push_back({s, a, r, next});
    seg.cum_reward += r;
    ++seg.length;
    s = next;
    if (sample_termination(opt, s, rng)) break;
    if (seg.length >= max_steps) {
      seg.truncated = true;
      break;
    }
  }
  seg.end_state = s;
  return seg;
}

}  // namespace avgopt
