#include "avgopt/planners.hpp"

#include <cmath>
#include <stdexcept>

namespace avgopt {

SearchControl SearchControl::all(std::size_t num_states, std::size_t num_options) {
  SearchControl sc(num_states, num_options);
  for (StateId s = 0; s < num_states; ++s)
    for (OptionId o = 0; o < num_options; ++o) sc.mark(s, o);
  return sc;
}

void SearchControl::mark(StateId s, OptionId o) {
  const std::size_t i = s * num_options_ + o;
  if (seen_[i]) return;
  seen_[i] = true;
  pairs_.emplace_back(s, o);
}

std::optional<std::pair<StateId, OptionId>> SearchControl::sample(Rng& rng) const {
  if (pairs_.empty()) return std::nullopt;
  return pairs_[rng.below(pairs_.size())];
}

bool inter_planning_step(LearnerState& ls, const OptionModel& model, StateId s, OptionId o, Rng& rng,
                         const LearnerParams& p) {
  const auto row = model.mp_row(s, o);
  double mass = 0.0;
  for (double w : row)
    if (w > 0.0) mass += w;
  if (mass < 1e-6) return false;
  const StateId next = rng.categorical(row, mass);

  const double len = model.l(s, o);
  if (!(len > 0.0)) return false;
  const auto visits = ++ls.counts[s * ls.q.cols() + o];
  const double alpha =
      p.schedule == StepsizeSchedule::constant ? p.alpha : p.alpha / static_cast<double>(visits);
  const double delta = model.r(s, o) - len * ls.rbar + ls.q.row_max(next) - ls.q(s, o);
  const double inc = alpha * delta / len;
  ls.q(s, o) += inc;
  ls.rbar += p.eta * inc;
  return true;
}

void intra_planning_step(LearnerState& ls, const FiniteMdp& action_model, StateId s, OptionId o,
                         const OptionSet& opts, Rng& rng, const LearnerParams& p) {
  const OptionDef& opt = opts[o];
  const ActionId a = sample_action(opt, s, rng);
  const auto [next, r] = step(action_model, s, a, rng);
  intra_dql_update(ls, Transition{s, a, r, next}, o, opts, p);
}

namespace {

void snapshot(std::vector<Snapshot>& out, std::size_t t, std::size_t every, const LearnerState& ls,
              bool keep_q = true) {
  if (every == 0 || t % every != 0) return;
  out.push_back({t, ls.rbar, keep_q ? ls.q : Table()});
}

}  // namespace

PlanningTrace run_inter_planning(const OptionModel& model, const SearchControl& control,
                                 const LearnerParams& p, std::size_t steps, std::size_t snapshot_every,
                                 Rng& rng) {
  p.validate();
  PlanningTrace trace;
  trace.final_state = LearnerState::make(model.num_states, model.num_options, false);
  for (std::size_t t = 1; t <= steps; ++t) {
    if (const auto pair = control.sample(rng)) {
      if (inter_planning_step(trace.final_state, model, pair->first, pair->second, rng, p))
        ++trace.updates;
      else
        ++trace.skipped;
    }
    snapshot(trace.snapshots, t, snapshot_every, trace.final_state);
  }
  return trace;
}

PlanningTrace run_intra_planning(const FiniteMdp& action_model, const OptionSet& opts,
                                 const SearchControl& control, const LearnerParams& p, std::size_t steps,
                                 std::size_t snapshot_every, Rng& rng) {
  p.validate();
  PlanningTrace trace;
  trace.final_state = LearnerState::make(action_model.num_states, opts.size(), false);
  for (std::size_t t = 1; t <= steps; ++t) {
    if (const auto pair = control.sample(rng)) {
      intra_planning_step(trace.final_state, action_model, pair->first, pair->second, opts, rng, p);
      ++trace.updates;
    }
    snapshot(trace.snapshots, t, snapshot_every, trace.final_state);
  }
  return trace;
}

LearnerState inter_planning_sweeps(const OptionModel& model, const LearnerParams& p, std::size_t sweeps,
                                   Rng& rng) {
  p.validate();
  LearnerState ls = LearnerState::make(model.num_states, model.num_options, false);
  for (std::size_t k = 0; k < sweeps; ++k)
    for (StateId s = 0; s < model.num_states; ++s)
      for (OptionId o = 0; o < model.num_options; ++o) inter_planning_step(ls, model, s, o, rng, p);
  return ls;
}

CombinedTrace run_combined_agent(const FiniteMdp& env, const OptionSet& opts, const CombinedRunSpec& spec,
                                 Rng& rng) {
  spec.params.validate();
  const std::size_t ns = env.num_states;
  const std::size_t no = opts.size();
  if (no == 0) throw std::invalid_argument("run_combined_agent: empty option set");

  CombinedTrace out;
  out.model = OptionModel::zeros(ns, no, 1.0);
  LearnerState ls = LearnerState::make(ns, no, false);
  SearchControl control(ns, no);
  RunTrace& trace = out.run;
  trace.rewards.reserve(spec.steps);

  StateId s = env.start_state;
  OptionId o = 0;
  bool need_option = true;
  for (std::size_t t = 1; t <= spec.steps; ++t) {
    if (need_option) o = epsilon_greedy_select(ls.q, s, spec.params.epsilon, rng, spec.params.ties);
    const OptionDef& opt = opts[o];
    const ActionId a = sample_action(opt, s, rng);
    const auto [next, r] = step(env, s, a, rng);
    trace.rewards.push_back(r);

    const Transition tr{s, a, r, next};
    model_learning_update(out.model, tr, opt.pi(s, a), opts, spec.params.beta);
    for (OptionId k = 0; k < no; ++k)
      if (opts[k].pi(s, a) > 0.0) control.mark(s, k);

    need_option = sample_termination(opt, next, rng);
    s = next;

    for (std::size_t i = 0; i < spec.planning_steps; ++i) {
      const auto pair = control.sample(rng);
      if (!pair) break;
      const double before = ls.q(pair->first, pair->second);
      if (inter_planning_step(ls, out.model, pair->first, pair->second, rng, spec.params)) {
        ++out.planning_updates;
        trace.update_stats.add(std::abs(ls.q(pair->first, pair->second) - before));
      } else {
        ++out.planning_skipped;
      }
    }
    trace.updates = out.planning_updates;
    if (spec.snapshot_every != 0 && t % spec.snapshot_every == 0)
      trace.snapshots.push_back({t, ls.rbar, spec.keep_q_snapshots ? ls.q : Table()});
  }
  trace.final_state = std::move(ls);
  return out;
}

}  // namespace avgopt
