#include "avgopt/harness.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <ostream>
#include <thread>

#include "avgopt/planners.hpp"

namespace avgopt {

ExperimentContext ExperimentContext::build(const ExperimentConfig& cfg) {
  ExperimentContext ctx;
  FourRoomConfig fc;
  fc.map_text = resolve_map_text(cfg);
  fc.active_goal = cfg.env.goal;
  fc.goal_reward = cfg.env.goal_reward;
  ctx.env = build_fourroom(fc);
  ctx.options = fourroom_option_set(ctx.env, cfg.options.set);
  ctx.primitives = fourroom_option_set(ctx.env, "A");
  ctx.models = exact_option_models(ctx.env.mdp, ctx.options);
  ctx.optimal = smdp_policy_iteration(ctx.models);
  return ctx;
}

namespace {

Table uniform_policy(std::size_t states, std::size_t options) {
  return Table(states, options, 1.0 / static_cast<double>(options));
}

std::optional<double> window_mean(const std::vector<double>& rewards, std::size_t step, std::size_t window) {
  if (rewards.size() < step || step == 0) return std::nullopt;
  const std::size_t w = std::min(window, step);
  double sum = 0.0;
  for (std::size_t i = step - w; i < step; ++i) sum += rewards[i];
  return sum / static_cast<double>(w);
}

void fill_series(RunRecord& rec, const std::vector<double>& rewards, const std::vector<Snapshot>& snaps,
                 const ExperimentContext& ctx, const ExperimentConfig& cfg) {
  for (const auto& snap : snaps) {
    SeriesPoint pt;
    pt.step = snap.step;
    pt.window_rate = window_mean(rewards, snap.step, cfg.execution.window);
    pt.rbar = snap.rbar;
    if (cfg.execution.eval_greedy && !snap.q.empty())
      pt.greedy_rate = rate_from_state(ctx.models, greedy_policy(snap.q), ctx.env.mdp.start_state);
    rec.series.push_back(pt);
  }
  double total = 0.0;
  for (double r : rewards) total += r;
  rec.mean_reward = rewards.empty() ? 0.0 : total / static_cast<double>(rewards.size());
}

void finish_record(RunRecord& rec, const LearnerState& ls, const ExperimentContext& ctx,
                   const ExperimentConfig& cfg) {
  rec.final_rbar = ls.rbar;
  rec.final_q = ls.q;
  if (cfg.execution.eval_greedy && !ls.q.empty())
    rec.final_greedy_rate = rate_from_state(ctx.models, greedy_policy(ls.q), ctx.env.mdp.start_state);
}

Behavior make_behavior(const ExperimentConfig& cfg, std::size_t states, std::size_t options) {
  Behavior b;
  if (cfg.algorithm.behavior == "uniform") b.policy = uniform_policy(states, options);
  return b;
}

}  // namespace

RunRecord run_single(const ExperimentContext& ctx, const ExperimentConfig& cfg, std::size_t run_id) {
  RunRecord rec;
  rec.run_id = run_id;
  rec.seed = cfg.execution.seed + run_id;
  Rng rng(rec.seed);
  const std::string& name = cfg.algorithm.name;
  const FiniteMdp& mdp = ctx.env.mdp;
  const std::size_t S = mdp.num_states;
  const std::size_t O = ctx.options.size();
  const bool keep_q = cfg.execution.eval_greedy;
  const Table target = to_table(ctx.optimal.policy, O);

  if (name == "inter_dql" || name == "inter_dqe" || name == "inter_unscaled" || name == "gosavi") {
    if (cfg.algorithm.behavior == "uniform_primitive")
      throw ConfigError("config field 'algorithm.behavior': inter-option agents execute their own options");
    InterRunSpec spec;
    spec.algorithm = name == "inter_dql"        ? InterAlgorithm::dql
                     : name == "inter_dqe"      ? InterAlgorithm::dqe
                     : name == "inter_unscaled" ? InterAlgorithm::unscaled
                                                : InterAlgorithm::gosavi;
    spec.params = cfg.params;
    spec.steps = cfg.execution.steps;
    spec.snapshot_every = cfg.execution.snapshot_every;
    spec.keep_q_snapshots = keep_q;
    spec.behavior = make_behavior(cfg, S, O);
    if (spec.algorithm == InterAlgorithm::dqe) spec.target = target;
    spec.max_option_steps = cfg.execution.max_option_steps;
    const RunTrace trace = run_inter_agent(mdp, ctx.options, spec, rng);
    fill_series(rec, trace.rewards, trace.snapshots, ctx, cfg);
    finish_record(rec, trace.final_state, ctx, cfg);
    rec.update_stats = trace.update_stats;
  } else if (name == "intra_dql" || name == "intra_dqe") {
    IntraRunSpec spec;
    spec.algorithm = name == "intra_dql" ? IntraAlgorithm::dql : IntraAlgorithm::dqe;
    spec.params = cfg.params;
    spec.steps = cfg.execution.steps;
    spec.snapshot_every = cfg.execution.snapshot_every;
    spec.keep_q_snapshots = keep_q;
    spec.interrupt = cfg.algorithm.interrupt;
    if (cfg.algorithm.behavior == "uniform_primitive") {
      spec.behavior_options = &ctx.primitives;
      spec.behavior.policy = uniform_policy(S, ctx.primitives.size());
    } else {
      spec.behavior = make_behavior(cfg, S, O);
    }
    if (spec.algorithm == IntraAlgorithm::dqe) spec.target = target;
    const RunTrace trace = run_intra_agent(mdp, ctx.options, spec, rng);
    fill_series(rec, trace.rewards, trace.snapshots, ctx, cfg);
    finish_record(rec, trace.final_state, ctx, cfg);
    rec.update_stats = trace.update_stats;
  } else if (name == "combined") {
    CombinedRunSpec spec;
    spec.params = cfg.params;
    spec.steps = cfg.execution.steps;
    spec.planning_steps = cfg.algorithm.planning_steps;
    spec.snapshot_every = cfg.execution.snapshot_every;
    spec.keep_q_snapshots = keep_q;
    const CombinedTrace trace = run_combined_agent(mdp, ctx.options, spec, rng);
    fill_series(rec, trace.run.rewards, trace.run.snapshots, ctx, cfg);
    finish_record(rec, trace.run.final_state, ctx, cfg);
    rec.model_error = model_error(trace.model, ctx.models);
    rec.update_stats = trace.run.update_stats;
  } else if (name == "inter_planning" || name == "intra_planning") {
    const SearchControl control = SearchControl::all(S, O);
    const PlanningTrace trace =
        name == "inter_planning"
            ? run_inter_planning(ctx.models, control, cfg.params, cfg.execution.steps,
                                 cfg.execution.snapshot_every, rng)
            : run_intra_planning(mdp, ctx.options, control, cfg.params, cfg.execution.steps,
                                 cfg.execution.snapshot_every, rng);
    fill_series(rec, {}, trace.snapshots, ctx, cfg);
    finish_record(rec, trace.final_state, ctx, cfg);
  } else if (name == "model_learning") {
    OptionModel model = OptionModel::zeros(S, O);
    std::vector<double> rewards;
    rewards.reserve(cfg.execution.steps);
    std::vector<Snapshot> snaps;
    const double bprob = 1.0 / static_cast<double>(mdp.num_actions);
    const bool averaging = cfg.params.schedule == StepsizeSchedule::one_over_visits;
    std::vector<double> weight(averaging ? S * O : 0, 0.0);
    StateId s = mdp.start_state;
    for (std::size_t t = 1; t <= cfg.execution.steps; ++t) {
      const ActionId a = rng.below(mdp.num_actions);
      const auto [next, r] = step(mdp, s, a, rng);
      rewards.push_back(r);
      const Transition tr{s, a, r, next};
      if (averaging)
        model_averaging_update(model, tr, bprob, ctx.options, weight);
      else
        model_learning_update(model, tr, bprob, ctx.options, cfg.params.alpha);
      s = next;
      if (cfg.execution.snapshot_every && t % cfg.execution.snapshot_every == 0) snaps.push_back({t, 0.0, {}});
    }
    fill_series(rec, rewards, snaps, ctx, cfg);
    rec.model_error = model_error(model, ctx.models);
  } else {
    throw ConfigError("config field 'algorithm.name': unknown algorithm '" + name + "'");
  }
  return rec;
}

std::vector<RunRecord> run_experiment(const ExperimentContext& ctx, const ExperimentConfig& cfg) {
  cfg.validate();
  const std::size_t runs = cfg.execution.runs;
  std::vector<RunRecord> records(runs);
  std::vector<std::exception_ptr> errors(runs);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < runs; i = next++) {
      try {
        records[i] = run_single(ctx, cfg, i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t jobs = std::max<std::size_t>(1, std::min(cfg.execution.jobs, runs));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return records;
}

std::vector<RunRecord> run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  return run_experiment(ExperimentContext::build(cfg), cfg);
}

std::vector<double> reward_rate_curve(const std::vector<double>& rewards, std::size_t window) {
  if (window == 0) throw std::invalid_argument("reward_rate_curve: window must be >= 1");
  std::vector<double> curve;
  for (std::size_t end = window; end <= rewards.size(); end += window) {
    double sum = 0.0;
    for (std::size_t i = end - window; i < end; ++i) sum += rewards[i];
    curve.push_back(sum / static_cast<double>(window));
  }
  return curve;
}

std::vector<double> greedy_snapshot_eval(const std::vector<Snapshot>& snapshots, const OptionModel& models,
                                         StateId start) {
  std::vector<double> out;
  out.reserve(snapshots.size());
  for (const auto& snap : snapshots) {
    if (snap.q.empty()) throw std::invalid_argument("greedy_snapshot_eval: snapshot without Q");
    out.push_back(rate_from_state(models, greedy_policy(snap.q), start));
  }
  return out;
}

double final_window_rate(const RunRecord& rec) {
  std::vector<double> rates;
  for (const auto& pt : rec.series)
    if (pt.window_rate) rates.push_back(*pt.window_rate);
  if (rates.empty()) return 0.0;
  const std::size_t k = std::max<std::size_t>(1, rates.size() / 10);
  double sum = 0.0;
  for (std::size_t i = rates.size() - k; i < rates.size(); ++i) sum += rates[i];
  return sum / static_cast<double>(k);
}

std::pair<double, double> mean_and_stderr(const std::vector<double>& xs) {
  if (xs.empty()) return {0.0, 0.0};
  const double n = static_cast<double>(xs.size());
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= n;
  if (xs.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / (n - 1.0)) / std::sqrt(n)};
}

std::vector<SweepPoint> sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  const ExperimentContext ctx = ExperimentContext::build(cfg);
  auto or_default = [](const std::vector<double>& xs, double d) {
    return xs.empty() ? std::vector<double>{d} : xs;
  };
  std::vector<SweepPoint> points;
  for (double alpha : or_default(cfg.sweep.alpha, cfg.params.alpha))
    for (double beta : or_default(cfg.sweep.beta, cfg.params.beta))
      for (double eta : or_default(cfg.sweep.eta, cfg.params.eta)) {
        ExperimentConfig point = cfg;
        point.params.alpha = alpha;
        point.params.beta = beta;
        point.params.eta = eta;
        SweepPoint sp{alpha, beta, eta, 0.0, 0.0, run_experiment(ctx, point)};
        std::vector<double> metric;
        for (const auto& r : sp.records) metric.push_back(r.mean_reward);
        std::tie(sp.mean, sp.std_error) = mean_and_stderr(metric);
        points.push_back(std::move(sp));
      }
  return points;
}

void write_results(const std::vector<RunRecord>& records, std::ostream& os) {
  const auto old = os.precision(10);
  os << "run_id,seed,step,window_rate,rbar,greedy_rate\n";
  for (const auto& rec : records)
    for (const auto& pt : rec.series) {
      os << rec.run_id << ',' << rec.seed << ',' << pt.step << ',';
      if (pt.window_rate) os << *pt.window_rate;
      os << ',' << pt.rbar << ',';
      if (pt.greedy_rate) os << *pt.greedy_rate;
      os << '\n';
    }
  os.precision(old);
}

void write_sweep_summary(const std::vector<SweepPoint>& points, std::ostream& os) {
  const auto old = os.precision(10);
  os << "alpha,beta,eta,runs,mean,stderr\n";
  for (const auto& p : points)
    os << p.alpha << ',' << p.beta << ',' << p.eta << ',' << p.records.size() << ',' << p.mean << ','
       << p.std_error << '\n';
  os.precision(old);
}

}  // namespace avgopt
