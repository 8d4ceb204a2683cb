#include "avgopt/learners.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace avgopt {

StepsizeSchedule parse_schedule(std::string_view name) {
  if (name == "constant") return StepsizeSchedule::constant;
  if (name == "one_over_visits" || name == "1/n") return StepsizeSchedule::one_over_visits;
  throw std::invalid_argument("unknown step-size schedule '" + std::string(name) + "'");
}

std::string_view schedule_name(StepsizeSchedule s) {
  return s == StepsizeSchedule::constant ? "constant" : "one_over_visits";
}

TieBreak parse_tie_break(std::string_view name) {
  if (name == "lowest") return TieBreak::lowest;
  if (name == "random") return TieBreak::random;
  throw std::invalid_argument("unknown tie rule '" + std::string(name) + "'");
}

std::string_view tie_break_name(TieBreak t) { return t == TieBreak::lowest ? "lowest" : "random"; }

void LearnerParams::validate() const {
  if (!(alpha > 0.0)) throw std::invalid_argument("params.alpha must be > 0");
  if (!(beta > 0.0 && beta <= 1.0)) throw std::invalid_argument("params.beta must be in (0, 1]");
  if (!(eta > 0.0)) throw std::invalid_argument("params.eta must be > 0");
  if (!(epsilon >= 0.0 && epsilon <= 1.0))
    throw std::invalid_argument("params.epsilon must be in [0, 1]");
}

LearnerState LearnerState::make(std::size_t num_states, std::size_t num_options, bool with_lengths) {
  LearnerState ls;
  ls.q = Table(num_states, num_options, 0.0);
  if (with_lengths) ls.len = Table(num_states, num_options, 1.0);
  ls.counts.assign(num_states * num_options, 0);
  return ls;
}

GosaviState GosaviState::make(std::size_t num_states, std::size_t num_options) {
  GosaviState gs;
  gs.q = Table(num_states, num_options, 0.0);
  gs.counts.assign(num_states * num_options, 0);
  return gs;
}

void check_policy(const Table& mu, std::size_t num_states, std::size_t num_options) {
  if (mu.rows() != num_states || mu.cols() != num_options)
    throw std::invalid_argument("policy over options has the wrong shape");
  for (std::size_t s = 0; s < num_states; ++s) {
    double total = 0.0;
    for (double p : mu.row(s)) {
      if (!(p >= 0.0)) throw std::invalid_argument("policy row " + std::to_string(s) + " has a negative entry");
      total += p;
    }
    if (std::abs(total - 1.0) > 1e-9)
      throw std::invalid_argument("policy row " + std::to_string(s) + " sums to " + std::to_string(total));
  }
}

namespace {

double scheduled(double base, StepsizeSchedule schedule, std::uint64_t visits) {
  if (schedule == StepsizeSchedule::constant) return base;
  return base / static_cast<double>(visits);
}

// Also checks that the row of mu it reads is a distribution.
double expected_value(const Table& q, const Table& mu, StateId s) {
  if (mu.rows() != q.rows() || mu.cols() != q.cols())
    throw std::invalid_argument("target policy has the wrong shape");
  double v = 0.0, mass = 0.0;
  const auto qs = q.row(s);
  const auto ms = mu.row(s);
  for (std::size_t o = 0; o < qs.size(); ++o) {
    if (ms[o] < 0.0) throw std::invalid_argument("target policy has a negative entry");
    v += ms[o] * qs[o];
    mass += ms[o];
  }
  if (std::abs(mass - 1.0) > 1e-9)
    throw std::invalid_argument("target policy row " + std::to_string(s) + " does not sum to 1");
  return v;
}

// Shared body of the two length-scaled inter-option updates.
double scaled_inter_update(LearnerState& ls, const OptionSegment& seg, const LearnerParams& p,
                           double bootstrap) {
  const StateId s = seg.start_state;
  const OptionId o = seg.option_index;
  if (ls.len.empty()) throw std::logic_error("length-scaled update needs an L table");
  const auto visits = ++ls.counts[s * ls.q.cols() + o];
  const double alpha = scheduled(p.alpha, p.schedule, visits);
  const double beta = scheduled(p.beta, p.schedule, visits);

  double& len = ls.len(s, o);
  len += beta * (static_cast<double>(seg.length) - len);
  const double delta = seg.cum_reward - len * ls.rbar + bootstrap - ls.q(s, o);
  const double inc = alpha * delta / len;
  ls.q(s, o) += inc;
  ls.rbar += p.eta * inc;
  return delta;
}

}  // namespace

double UpdateStats::variance() const {
  if (count < 2) return 0.0;
  const double n = static_cast<double>(count);
  const double m = sum / n;
  return std::max(0.0, (sum_sq - n * m * m) / (n - 1.0));
}

double inter_dql_update(LearnerState& ls, const OptionSegment& seg, const LearnerParams& p) {
  return scaled_inter_update(ls, seg, p, ls.q.row_max(seg.end_state));
}

double inter_dqe_update(LearnerState& ls, const OptionSegment& seg, const LearnerParams& p,
                        const Table& target) {
  return scaled_inter_update(ls, seg, p, expected_value(ls.q, target, seg.end_state));
}

double inter_unscaled_update(LearnerState& ls, const OptionSegment& seg, const LearnerParams& p) {
  const StateId s = seg.start_state;
  const OptionId o = seg.option_index;
  const auto visits = ++ls.counts[s * ls.q.cols() + o];
  const double alpha = scheduled(p.alpha, p.schedule, visits);
  const double delta = seg.cum_reward - static_cast<double>(seg.length) * ls.rbar +
                       ls.q.row_max(seg.end_state) - ls.q(s, o);
  const double inc = alpha * delta;
  ls.q(s, o) += inc;
  ls.rbar += p.eta * inc;
  return delta;
}

double gosavi_update(GosaviState& gs, const OptionSegment& seg, bool was_greedy,
                     const LearnerParams& p) {
  const StateId s = seg.start_state;
  const OptionId o = seg.option_index;
  const auto visits = ++gs.counts[s * gs.q.cols() + o];
  const double alpha = scheduled(p.alpha, p.schedule, visits);
  const double beta = scheduled(p.beta, p.schedule, visits);
  const double delta = seg.cum_reward - static_cast<double>(seg.length) * gs.rbar +
                       gs.q.row_max(seg.end_state) - gs.q(s, o);
  gs.q(s, o) += alpha * delta;
  if (was_greedy) {
    gs.cbar += beta * (seg.cum_reward - gs.cbar);
    gs.tbar += beta * (static_cast<double>(seg.length) - gs.tbar);
    if (gs.tbar > 0.0) gs.rbar = gs.cbar / gs.tbar;
  }
  return delta;
}

namespace {

// Computes every TD error from the pre-update tables, then applies them.
template <class Bootstrap>
double intra_update(LearnerState& ls, const Transition& t, double behavior_prob,
                    const OptionSet& opts, const LearnerParams& p, Bootstrap&& terminal_value) {
  if (!(behavior_prob > 0.0))
    throw std::invalid_argument("intra-option update: behaviour probability of the action is zero");
  const std::size_t n = opts.size();
  if (ls.q.cols() != n) throw std::invalid_argument("intra-option update: Q has wrong option count");
  const StateId s = t.state;
  const StateId next = t.next_state;
  const double terminal = terminal_value(next);

  thread_local std::vector<double> step;  // alpha * rho * delta per option
  step.assign(n, 0.0);
  for (OptionId o = 0; o < n; ++o) {
    const double pi = opts[o].pi(s, t.action);
    if (pi == 0.0) continue;
    const double rho = pi / behavior_prob;
    const double b = opts[o].beta(next);
    const double u = (1.0 - b) * ls.q(next, o) + b * terminal;
    const double delta = t.reward - ls.rbar + u - ls.q(s, o);
    const auto visits = ++ls.counts[s * n + o];
    step[o] = scheduled(p.alpha, p.schedule, visits) * rho * delta;
  }
  double total = 0.0;
  double rate_inc = 0.0;
  for (OptionId o = 0; o < n; ++o) {
    if (step[o] == 0.0) continue;
    ls.q(s, o) += step[o];
    total += step[o];
    rate_inc += p.eta * step[o];
  }
  ls.rbar += rate_inc;
  return total;
}

double behavior_probability(const OptionSet& opts, OptionId executing, const Transition& t) {
  if (executing >= opts.size()) throw std::out_of_range("executing option out of range");
  return opts[executing].pi(t.state, t.action);
}

}  // namespace

double intra_dql_update(LearnerState& ls, const Transition& t, double behavior_prob,
                        const OptionSet& opts, const LearnerParams& p) {
  return intra_update(ls, t, behavior_prob, opts, p,
                      [&ls](StateId next) { return ls.q.row_max(next); });
}

double intra_dql_update(LearnerState& ls, const Transition& t, OptionId executing,
                        const OptionSet& opts, const LearnerParams& p) {
  return intra_dql_update(ls, t, behavior_probability(opts, executing, t), opts, p);
}

double intra_dqe_update(LearnerState& ls, const Transition& t, double behavior_prob,
                        const OptionSet& opts, const LearnerParams& p, const Table& target) {
  return intra_update(ls, t, behavior_prob, opts, p,
                      [&](StateId next) { return expected_value(ls.q, target, next); });
}

double intra_dqe_update(LearnerState& ls, const Transition& t, OptionId executing,
                        const OptionSet& opts, const LearnerParams& p, const Table& target) {
  return intra_dqe_update(ls, t, behavior_probability(opts, executing, t), opts, p, target);
}

OptionId epsilon_greedy_select(const Table& q, StateId s, double eps, Rng& rng, TieBreak ties) {
  if (rng.uniform() < eps) return rng.below(q.cols());
  const OptionId best = q.row_argmax(s);
  if (ties == TieBreak::lowest) return best;
  const double top = q(s, best);
  std::size_t tied = 0;
  for (OptionId o = best; o < q.cols(); ++o) tied += q(s, o) == top;
  if (tied == 1) return best;
  std::size_t pick = rng.below(tied);
  for (OptionId o = best;; ++o)
    if (q(s, o) == top && pick-- == 0) return o;
}

Interruption interruption_check(const Table& q, StateId s, OptionId executing) {
  return q(s, executing) < q.row_max(s) ? Interruption::terminate : Interruption::continue_option;
}

namespace {

OptionId select_option(const Behavior& behavior, const Table& q, StateId s, const LearnerParams& p,
                       Rng& rng) {
  if (behavior.policy) return rng.categorical(behavior.policy->row(s), 1.0);
  return epsilon_greedy_select(q, s, p.epsilon, rng, p.ties);
}

void maybe_snapshot(RunTrace& trace, std::size_t t, std::size_t every, bool keep_q, double rbar,
                    const Table& q) {
  if (every == 0 || t % every != 0) return;
  Snapshot snap;
  snap.step = t;
  snap.rbar = rbar;
  if (keep_q) snap.q = q;
  trace.snapshots.push_back(std::move(snap));
}

}  // namespace

RunTrace run_inter_agent(const FiniteMdp& env, const OptionSet& opts, const InterRunSpec& spec,
                         Rng& rng) {
  spec.params.validate();
  const std::size_t ns = env.num_states;
  const std::size_t no = opts.size();
  if (no == 0) throw std::invalid_argument("run_inter_agent: empty option set");
  if (spec.behavior.policy) check_policy(*spec.behavior.policy, ns, no);
  if (spec.algorithm == InterAlgorithm::dqe) {
    if (!spec.target) throw std::invalid_argument("inter-option Q-evaluation needs a target policy");
    check_policy(*spec.target, ns, no);
  }

  const bool scaled = spec.algorithm == InterAlgorithm::dql || spec.algorithm == InterAlgorithm::dqe;
  const bool gosavi = spec.algorithm == InterAlgorithm::gosavi;
  LearnerState ls = LearnerState::make(ns, no, scaled);
  GosaviState gs = GosaviState::make(gosavi ? ns : 0, gosavi ? no : 0);
  Table& q = gosavi ? gs.q : ls.q;
  const double& rbar = gosavi ? gs.rbar : ls.rbar;

  RunTrace trace;
  trace.rewards.reserve(spec.steps);
  OptionSegment seg;
  StateId s = env.start_state;
  std::size_t t = 0;

  while (t < spec.steps) {
    const OptionId o = select_option(spec.behavior, q, s, spec.params, rng);
    const bool was_greedy = q(s, o) == q.row_max(s);
    const OptionDef& opt = opts[o];
    seg.start_state = s;
    seg.option_index = o;
    seg.cum_reward = 0.0;
    seg.length = 0;
    seg.transitions.clear();
    seg.truncated = false;

    while (true) {
      const ActionId a = sample_action(opt, s, rng);
      const auto [next, r] = step(env, s, a, rng);
      seg.transitions.push_back({s, a, r, next});
      seg.cum_reward += r;
      ++seg.length;
      trace.rewards.push_back(r);
      ++t;
      s = next;
      const bool terminated = sample_termination(opt, s, rng);
      if (terminated) {
        seg.end_state = s;
        const double before = q(seg.start_state, o);
        switch (spec.algorithm) {
          case InterAlgorithm::dql: inter_dql_update(ls, seg, spec.params); break;
          case InterAlgorithm::dqe: inter_dqe_update(ls, seg, spec.params, *spec.target); break;
          case InterAlgorithm::unscaled: inter_unscaled_update(ls, seg, spec.params); break;
          case InterAlgorithm::gosavi: gosavi_update(gs, seg, was_greedy, spec.params); break;
        }
        trace.update_stats.add(std::abs(q(seg.start_state, o) - before));
        ++trace.updates;
      } else if (seg.length >= spec.max_option_steps) {
        throw std::runtime_error("option '" + opts.labels[o] + "' ran for " +
                                 std::to_string(seg.length) + " steps without terminating");
      }
      maybe_snapshot(trace, t, spec.snapshot_every, spec.keep_q_snapshots, rbar, q);
      if (terminated || t >= spec.steps) break;
    }
  }

  if (gosavi) {
    ls.q = gs.q;
    ls.rbar = gs.rbar;
    ls.counts = gs.counts;
  }
  trace.final_state = std::move(ls);
  return trace;
}

RunTrace run_intra_agent(const FiniteMdp& env, const OptionSet& opts, const IntraRunSpec& spec,
                         Rng& rng) {
  spec.params.validate();
  const std::size_t ns = env.num_states;
  const std::size_t no = opts.size();
  if (no == 0) throw std::invalid_argument("run_intra_agent: empty option set");
  const OptionSet& exec = spec.behavior_options ? *spec.behavior_options : opts;
  const bool executes_learned = &exec == &opts;
  if (!executes_learned && !spec.behavior.policy)
    throw std::invalid_argument("epsilon-greedy behaviour must execute the learned option set");
  if (!executes_learned && spec.interrupt)
    throw std::invalid_argument("interruption needs the behaviour to execute the learned options");
  if (spec.behavior.policy) check_policy(*spec.behavior.policy, ns, exec.size());
  if (spec.algorithm == IntraAlgorithm::dqe) {
    if (!spec.target) throw std::invalid_argument("intra-option Q-evaluation needs a target policy");
    check_policy(*spec.target, ns, no);
  }

  LearnerState ls = LearnerState::make(ns, no, false);
  RunTrace trace;
  trace.rewards.reserve(spec.steps);
  StateId s = env.start_state;
  OptionId o = 0;
  bool need_option = true;

  for (std::size_t t = 1; t <= spec.steps; ++t) {
    if (need_option ||
        (spec.interrupt && interruption_check(ls.q, s, o) == Interruption::terminate)) {
      o = select_option(spec.behavior, ls.q, s, spec.params, rng);
    }
    const OptionDef& opt = exec[o];
    const ActionId a = sample_action(opt, s, rng);
    const auto [next, r] = step(env, s, a, rng);
    trace.rewards.push_back(r);
    const Transition tr{s, a, r, next};
    const double bprob = opt.pi(s, a);
    const double inc = spec.algorithm == IntraAlgorithm::dql
                           ? intra_dql_update(ls, tr, bprob, opts, spec.params)
                           : intra_dqe_update(ls, tr, bprob, opts, spec.params, *spec.target);
    trace.update_stats.add(std::abs(inc));
    ++trace.updates;
    need_option = sample_termination(opt, next, rng);
    s = next;
    maybe_snapshot(trace, t, spec.snapshot_every, spec.keep_q_snapshots, ls.rbar, ls.q);
  }
  trace.final_state = std::move(ls);
  return trace;
}

}  // namespace avgopt
