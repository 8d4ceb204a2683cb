#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "avgopt/options.hpp"

namespace avgopt {

/// Option model over (state, option): termination-state distribution mp,
/// expected cumulative reward mr and expected duration ml.
struct OptionModel {
  std::size_t num_states = 0;
  std::size_t num_options = 0;
  std::vector<double> mp;  // [(s * O + o) * S + x]
  std::vector<double> mr;  // [s * O + o]
  std::vector<double> ml;  // [s * O + o]

  static OptionModel zeros(std::size_t num_states, std::size_t num_options, double ml_init = 0.0);

  std::size_t pair(StateId s, OptionId o) const { return s * num_options + o; }
  double& p(StateId s, OptionId o, StateId x) { return mp[pair(s, o) * num_states + x]; }
  double p(StateId s, OptionId o, StateId x) const { return mp[pair(s, o) * num_states + x]; }
  double& r(StateId s, OptionId o) { return mr[pair(s, o)]; }
  double r(StateId s, OptionId o) const { return mr[pair(s, o)]; }
  double& l(StateId s, OptionId o) { return ml[pair(s, o)]; }
  double l(StateId s, OptionId o) const { return ml[pair(s, o)]; }

  std::span<double> mp_row(StateId s, OptionId o) {
    return {mp.data() + pair(s, o) * num_states, num_states};
  }
  std::span<const double> mp_row(StateId s, OptionId o) const {
    return {mp.data() + pair(s, o) * num_states, num_states};
  }
};

/// One intra-option model-learning step from transition t. Every option o
/// with pi(A|S,o) > 0 moves its row S toward
///   mp: beta(S',o) 1{x=S'} + (1 - beta(S',o)) mp(x|S',o)
///   mr: R + (1 - beta(S',o)) mr(S',o)
///   ml: 1 + (1 - beta(S',o)) ml(S',o)
/// with step alpha * rho(o), all targets read from the pre-update tables.
/// Returns the number of options updated.
std::size_t model_learning_update(OptionModel& m, const Transition& t, double behavior_prob,
                                  const OptionSet& opts, double alpha);
std::size_t model_learning_update(OptionModel& m, const Transition& t, OptionId executing,
                                  const OptionSet& opts, double alpha);

/// Same targets, with the ratio-weighted running-average step rho / W where
/// W(S, o) accumulates rho over visits (`weight` sized num_states *
/// num_options, zero initialised). A decreasing schedule for convergence runs.
std::size_t model_averaging_update(OptionModel& m, const Transition& t, double behavior_prob,
                                   const OptionSet& opts, std::vector<double>& weight);

struct ModelError {
  double mp = 0.0;
  double mr = 0.0;
  double ml = 0.0;
};

/// Max-abs error of each part. Throws std::invalid_argument on shape mismatch.
ModelError model_error(const OptionModel& m, const OptionModel& exact);

/// CSV with header "part,s,o,x,value"; mr and ml rows leave x empty.
/// Values are written with 17 significant digits so a round trip is exact.
void write_model_csv(std::ostream& os, const OptionModel& m);
OptionModel read_model_csv(std::istream& is);

}  // namespace avgopt
