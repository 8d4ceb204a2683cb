#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "avgopt/mdp.hpp"
#include "avgopt/options.hpp"
#include "avgopt/rng.hpp"
#include "avgopt/table.hpp"

namespace avgopt {

enum class StepsizeSchedule { constant, one_over_visits };

StepsizeSchedule parse_schedule(std::string_view name);
std::string_view schedule_name(StepsizeSchedule s);

/// How the greedy branch of epsilon-greedy behaviour resolves tied values.
enum class TieBreak { lowest, random };

TieBreak parse_tie_break(std::string_view name);
std::string_view tie_break_name(TieBreak t);

struct LearnerParams {
  double alpha = 0.125;   // value step size
  double beta = 0.5;      // length (or Gosavi rate-tracking) step size
  double eta = 0.1;       // reward-rate step-size multiplier
  double epsilon = 0.1;   // epsilon-greedy exploration
  StepsizeSchedule schedule = StepsizeSchedule::constant;
  TieBreak ties = TieBreak::lowest;  // behaviour only; greedy evaluation is always lowest-index

  /// Throws std::invalid_argument naming the first out-of-range field.
  void validate() const;
};

/// Q over (state, option), the reward-rate estimate, and for the
/// length-scaled inter-option algorithms the expected-length table L.
struct LearnerState {
  Table q;
  double rbar = 0.0;
  Table len;  // empty unless length-scaled
  std::vector<std::uint64_t> counts;

  static LearnerState make(std::size_t num_states, std::size_t num_options, bool with_lengths);
};

/// Gosavi's (2004) baseline: reward rate tracked as C/T over greedy options.
struct GosaviState {
  Table q;
  double cbar = 0.0;
  double tbar = 0.0;
  double rbar = 0.0;
  std::vector<std::uint64_t> counts;

  static GosaviState make(std::size_t num_states, std::size_t num_options);
};

/// Validates that every row of `mu` is a distribution over options.
void check_policy(const Table& mu, std::size_t num_states, std::size_t num_options);

// ---- inter-option updates (one call per completed option) -----------------

/// Length-scaled inter-option Differential Q-learning. Order: L is moved
/// toward the sampled length, the TD error uses the updated L, then Q and
/// R-bar move by alpha * delta / L (R-bar scaled by eta). Returns delta.
double inter_dql_update(LearnerState& ls, const OptionSegment& seg, const LearnerParams& p);

/// Same as inter_dql_update but bootstraps with sum_o mu(o|s') Q(s', o).
double inter_dqe_update(LearnerState& ls, const OptionSegment& seg, const LearnerParams& p,
                        const Table& target);

/// Unscaled variant: delta uses the sampled length and no L table is kept.
double inter_unscaled_update(LearnerState& ls, const OptionSegment& seg, const LearnerParams& p);

/// Gosavi's update. `was_greedy` says whether the segment's option was an
/// argmax of Q at its start state when it was chosen.
double gosavi_update(GosaviState& gs, const OptionSegment& seg, bool was_greedy,
                     const LearnerParams& p);

// ---- intra-option updates (one call per primitive transition) -------------

/// Intra-option Differential Q-learning for one transition. `behavior_prob`
/// is the probability the behaviour gave to the observed action (for an
/// executing option O this is pi(A|S,O)). All TD errors use the values from
/// before the call. Returns the summed increment alpha * rho * delta.
double intra_dql_update(LearnerState& ls, const Transition& t, double behavior_prob,
                        const OptionSet& opts, const LearnerParams& p);
double intra_dql_update(LearnerState& ls, const Transition& t, OptionId executing,
                        const OptionSet& opts, const LearnerParams& p);

/// Intra-option Differential Q-evaluation against target policy `target`.
double intra_dqe_update(LearnerState& ls, const Transition& t, double behavior_prob,
                        const OptionSet& opts, const LearnerParams& p, const Table& target);
double intra_dqe_update(LearnerState& ls, const Transition& t, OptionId executing,
                        const OptionSet& opts, const LearnerParams& p, const Table& target);

// ---- behaviour --------------------------------------------------------------

/// With probability 1 - eps the lowest-index argmax of q(s, .), otherwise a
/// uniformly random option. Consumes one variate, plus one more when exploring.
/// With TieBreak::random the greedy branch picks uniformly among tied maxima,
/// drawing one more variate only when there is a tie.
OptionId epsilon_greedy_select(const Table& q, StateId s, double eps, Rng& rng,
                               TieBreak ties = TieBreak::lowest);

enum class Interruption { continue_option, terminate };

/// Terminate iff q(s, executing) is strictly below max_o q(s, o).
Interruption interruption_check(const Table& q, StateId s, OptionId executing);

// ---- agents -----------------------------------------------------------------

enum class InterAlgorithm { dql, dqe, unscaled, gosavi };
enum class IntraAlgorithm { dql, dqe };

struct Snapshot {
  std::size_t step = 0;
  double rbar = 0.0;
  Table q;  // empty when q snapshots are disabled
};

/// Running sum / sum-of-squares of |Q increment| per update.
struct UpdateStats {
  std::uint64_t count = 0;
  double sum = 0.0;
  double sum_sq = 0.0;

  void add(double x) {
    ++count;
    sum += x;
    sum_sq += x * x;
  }
  double mean() const { return count ? sum / static_cast<double>(count) : 0.0; }
  double variance() const;
};

struct RunTrace {
  std::vector<double> rewards;  // one per primitive step
  std::vector<Snapshot> snapshots;
  std::size_t updates = 0;
  LearnerState final_state;
  UpdateStats update_stats;
};

/// Option-selection rule for an agent: epsilon-greedy on the learner's Q
/// (when `policy` is empty) or a fixed stochastic policy over options.
struct Behavior {
  std::optional<Table> policy;
};

struct InterRunSpec {
  InterAlgorithm algorithm = InterAlgorithm::dql;
  LearnerParams params;
  std::size_t steps = 0;
  std::size_t snapshot_every = 1000;
  bool keep_q_snapshots = true;
  Behavior behavior;
  std::optional<Table> target;  // required for dqe
  std::size_t max_option_steps = kDefaultMaxOptionSteps;
};

/// Select an option, execute it to termination, apply one update, repeat.
/// The option in progress when the step budget runs out is not used for an
/// update. Snapshots are taken after every `snapshot_every` primitive steps.
RunTrace run_inter_agent(const FiniteMdp& env, const OptionSet& opts, const InterRunSpec& spec,
                         Rng& rng);

struct IntraRunSpec {
  IntraAlgorithm algorithm = IntraAlgorithm::dql;
  LearnerParams params;
  std::size_t steps = 0;
  std::size_t snapshot_every = 1000;
  bool keep_q_snapshots = true;
  bool interrupt = false;
  /// Options the behaviour executes. When null, the learned set is executed.
  const OptionSet* behavior_options = nullptr;
  Behavior behavior;
  std::optional<Table> target;  // required for dqe
};

/// Per primitive step: (re)select an option if the previous one terminated
/// (or, with interruption, if it is no longer greedy), act, apply the
/// intra-option update, then sample termination of the executing option.
RunTrace run_intra_agent(const FiniteMdp& env, const OptionSet& opts, const IntraRunSpec& spec,
                         Rng& rng);

}  // namespace avgopt
