#pragma once

#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

#include "avgopt/learners.hpp"
#include "avgopt/option_model.hpp"

namespace avgopt {

/// Pairs (s, o) seen so far; planning samples uniformly among them.
class SearchControl {
 public:
  SearchControl() = default;
  SearchControl(std::size_t num_states, std::size_t num_options)
      : num_options_(num_options), seen_(num_states * num_options, false) {}

  /// Every pair, for planning from a given model.
  static SearchControl all(std::size_t num_states, std::size_t num_options);

  void mark(StateId s, OptionId o);
  bool contains(StateId s, OptionId o) const { return seen_[s * num_options_ + o]; }
  std::size_t size() const { return pairs_.size(); }
  bool empty() const { return pairs_.empty(); }
  const std::vector<std::pair<StateId, OptionId>>& pairs() const { return pairs_; }

  /// Uniform over marked pairs; one variate. Empty control yields nothing.
  std::optional<std::pair<StateId, OptionId>> sample(Rng& rng) const;

 private:
  std::size_t num_options_ = 0;
  std::vector<bool> seen_;
  std::vector<std::pair<StateId, OptionId>> pairs_;
};

/// One inter-option planning update on (s, o): s' is drawn from the
/// normalised mp row, then Q and R-bar move by alpha * delta / ml with
/// delta = mr - ml * R-bar + max Q(s', .) - Q(s, o). Returns false (and
/// changes nothing, consuming no variates) when the row's mass is < 1e-6.
bool inter_planning_step(LearnerState& ls, const OptionModel& model, StateId s, OptionId o, Rng& rng,
                         const LearnerParams& p);

/// One intra-option planning update on (s, o): a ~ pi(.|s, o), (s', r) from
/// the action model, then the intra-option learning update with o as the
/// executing option.
void intra_planning_step(LearnerState& ls, const FiniteMdp& action_model, StateId s, OptionId o,
                         const OptionSet& opts, Rng& rng, const LearnerParams& p);

struct PlanningTrace {
  std::vector<Snapshot> snapshots;
  std::size_t updates = 0;
  std::size_t skipped = 0;
  LearnerState final_state;
};

/// Planning only: `steps` updates from `model` on pairs drawn by `control`.
PlanningTrace run_inter_planning(const OptionModel& model, const SearchControl& control,
                                 const LearnerParams& p, std::size_t steps, std::size_t snapshot_every,
                                 Rng& rng);
PlanningTrace run_intra_planning(const FiniteMdp& action_model, const OptionSet& opts,
                                 const SearchControl& control, const LearnerParams& p, std::size_t steps,
                                 std::size_t snapshot_every, Rng& rng);

/// Same as run_inter_planning but visiting every pair in order, `sweeps` times.
LearnerState inter_planning_sweeps(const OptionModel& model, const LearnerParams& p, std::size_t sweeps,
                                   Rng& rng);

struct CombinedRunSpec {
  LearnerParams params;  // params.beta is the model step size
  std::size_t steps = 0;
  std::size_t planning_steps = 0;
  std::size_t snapshot_every = 1000;
  bool keep_q_snapshots = true;
};

struct CombinedTrace {
  RunTrace run;
  OptionModel model;
  std::size_t planning_updates = 0;
  std::size_t planning_skipped = 0;
};

/// Acts with epsilon-greedy options executed intra-option style, learns the
/// option model from every transition, then performs `planning_steps`
/// inter-option planning updates on visited pairs using the learned model.
CombinedTrace run_combined_agent(const FiniteMdp& env, const OptionSet& opts, const CombinedRunSpec& spec,
                                 Rng& rng);

}  // namespace avgopt
