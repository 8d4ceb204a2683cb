// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero when any selected criterion fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include "avgopt/harness.hpp"
#include "avgopt/oracle.hpp"
#include "avgopt/planners.hpp"

using namespace avgopt;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string fmt2(const char* f, double a, double b) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::size_t jobs() { return std::max(1u, std::thread::hardware_concurrency()); }

ExperimentConfig base_config(const std::string& algorithm, Goal goal, const std::string& set) {
  ExperimentConfig c;
  c.algorithm.name = algorithm;
  c.env.goal = goal;
  c.options.set = set;
  c.params.alpha = 0.125;
  c.params.beta = 0.5;
  c.params.eta = 0.1;
  c.params.epsilon = 0.1;
  // Lowest-index ties leave the zero-initialised greedy agent pressed against
  // a wall; random ties let it explore until the first reward.
  c.params.ties = TieBreak::random;
  c.execution.steps = 200'000;
  c.execution.runs = 10;
  c.execution.seed = 0;
  c.execution.window = 1000;
  c.execution.snapshot_every = 200'000;  // only the final greedy policy is evaluated
  c.execution.jobs = jobs();
  return c;
}

// 1. Exact optimal rates on the default map.
Verdict criterion1() {
  const auto t0 = std::chrono::steady_clock::now();
  struct Case {
    Goal goal;
    const char* set;
    double expected;
  };
  const Case cases[] = {{Goal::G1, "A+H", 0.0625}, {Goal::G2, "H", 1.0 / 14.0}, {Goal::G2, "A", 1.0 / 14.0},
                        {Goal::G2, "A+H", 1.0 / 14.0}};
  bool ok = true;
  std::string detail;
  for (const auto& c : cases) {
    ExperimentConfig cfg;
    cfg.env.goal = c.goal;
    cfg.options.set = c.set;
    const double r = ExperimentContext::build(cfg).optimal.rate;
    const double err = std::abs(r - c.expected);
    ok = ok && err < 1e-9;
    detail += std::string(goal_name(c.goal)) + "/" + c.set + fmt(" r*=%.12f ", r);
  }
  const double secs = seconds_since(t0);
  ok = ok && secs < 5.0;
  return {ok, detail + fmt("(%.2fs)", secs)};
}

// 2. Exact hallway models are fixed points; learned models approach them.
Verdict criterion2() {
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentConfig cfg = base_config("model_learning", Goal::G1, "H");
  cfg.execution.eval_greedy = false;
  cfg.params.schedule = StepsizeSchedule::one_over_visits;
  const auto ctx = ExperimentContext::build(cfg);
  const double residual = model_fixed_point_residual(ctx.env.mdp, ctx.options, ctx.models);
  const auto recs = run_experiment(ctx, cfg);
  int good = 0;
  double worst_mp = 0, worst_mr = 0, worst_ml = 0;
  for (const auto& r : recs) {
    const auto& e = *r.model_error;
    good += e.mp < 0.01 && e.mr < 0.01 && e.ml < 0.01;
    worst_mp = std::max(worst_mp, e.mp);
    worst_mr = std::max(worst_mr, e.mr);
    worst_ml = std::max(worst_ml, e.ml);
  }
  const double secs = seconds_since(t0);
  const bool ok = residual < 1e-9 && good >= 8 && secs < 120.0;
  return {ok, fmt("exact residual %.2e; ", residual) + std::to_string(good) + "/10 seeds under 0.01" +
                  fmt2(" (worst mp %.4f mr %.4f", worst_mp, worst_mr) + fmt(" ml %.4f)", worst_ml) +
                  fmt(" (%.1fs)", secs)};
}

// 3. Inter-option control on G1 and the ordering of option sets.
Verdict criterion3() {
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<double> final_rates;
  int optimal = 0, optimal_and_close = 0;
  for (const char* set : {"A+H", "A", "H"}) {
    ExperimentConfig cfg = base_config("inter_dql", Goal::G1, set);
    const auto ctx = ExperimentContext::build(cfg);
    const auto recs = run_experiment(ctx, cfg);
    double mean_final = 0.0;
    for (const auto& r : recs) mean_final += final_window_rate(r) / static_cast<double>(recs.size());
    final_rates.push_back(mean_final);
    if (std::string(set) == "A+H") {
      for (const auto& r : recs) {
        const bool opt = std::abs(*r.final_greedy_rate - ctx.optimal.rate) < 1e-9;
        optimal += opt;
        optimal_and_close += opt && std::abs(r.final_rbar - ctx.optimal.rate) < 0.01;
      }
    }
  }
  const double secs = seconds_since(t0);
  const bool order = final_rates[0] >= final_rates[1] && final_rates[0] >= final_rates[2];
  const bool ok = optimal_and_close >= 8 && order && secs < 180.0;
  return {ok, std::to_string(optimal) + "/10 greedy optimal, " + std::to_string(optimal_and_close) +
                  "/10 also |rbar-r*|<0.01; final windowed A+H " + fmt("%.4f", final_rates[0]) +
                  fmt2(" A %.4f H %.4f", final_rates[1], final_rates[2]) + fmt(" (%.1fs)", secs)};
}

// 4. Intra-option control on G2 from uniformly random primitive behaviour.
Verdict criterion4() {
  ExperimentConfig cfg = base_config("intra_dql", Goal::G2, "H");
  cfg.algorithm.behavior = "uniform_primitive";
  const auto ctx = ExperimentContext::build(cfg);
  const auto recs = run_experiment(ctx, cfg);
  int hits = 0;
  for (const auto& r : recs) hits += std::abs(*r.final_greedy_rate - 1.0 / 14.0) < 1e-9;
  return {hits >= 8, std::to_string(hits) + "/10 seeds with greedy rate 1/14 over H"};
}

// 5. Prediction of the optimal policy's rate.
Verdict criterion5() {
  std::string detail;
  bool ok = true;
  for (const char* algo : {"inter_dqe", "intra_dqe"}) {
    ExperimentConfig cfg = base_config(algo, Goal::G1, "A+H");
    cfg.algorithm.behavior = "uniform";
    cfg.execution.eval_greedy = false;
    // No step budget is pinned here. Under uniform option behaviour the
    // inter-option R-bar is still in its slow transient at 200k steps.
    cfg.execution.steps = 1'000'000;
    cfg.execution.snapshot_every = 1'000'000;
    const auto recs = run_experiment(cfg);
    int close = 0;
    double worst = 0.0;
    for (const auto& r : recs) {
      const double err = std::abs(r.final_rbar - 0.0625);
      close += err < 0.01;
      worst = std::max(worst, err);
    }
    ok = ok && close >= 8;
    detail += std::string(algo) + " " + std::to_string(close) + "/10" + fmt(" (worst err %.4f) ", worst);
  }
  return {ok, detail};
}

// 6. Interruption: exact improvement and a paired learning comparison.
Verdict criterion6() {
  ExperimentConfig cfg = base_config("intra_dql", Goal::G3, "H");
  cfg.execution.eval_greedy = false;
  const auto ctx = ExperimentContext::build(cfg);
  const auto exact = interrupted_policy_rate(ctx.env.mdp, ctx.options, to_table(ctx.optimal.policy, ctx.options.size()));
  const bool oracle_ok = exact.r_mu_prime > exact.r_mu;
  const auto plain = run_experiment(ctx, cfg);
  cfg.algorithm.interrupt = true;
  const auto inter = run_experiment(ctx, cfg);
  int wins = 0;
  double mean_plain = 0.0, mean_inter = 0.0;
  for (std::size_t i = 0; i < plain.size(); ++i) {
    const double a = final_window_rate(plain[i]), b = final_window_rate(inter[i]);
    wins += b > a;
    mean_plain += a / static_cast<double>(plain.size());
    mean_inter += b / static_cast<double>(plain.size());
  }
  const bool ok = oracle_ok && mean_inter > mean_plain && wins >= 7;
  return {ok, fmt2("oracle r(mu)=%.6f r(mu')=%.6f; ", exact.r_mu, exact.r_mu_prime) +
                  fmt2("final windowed plain %.4f interrupted %.4f, ", mean_plain, mean_inter) +
                  std::to_string(wins) + "/10 paired wins"};
}

// 7. R-bar moves by eta times the total Q change after every update.
Verdict criterion7() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto env = build_fourroom({});
  const OptionSet opts = fourroom_option_set(env, "A+H");
  const OptionModel models = exact_option_models(env.mdp, opts);
  const std::size_t S = env.mdp.num_states, O = opts.size();
  const Table mu(S, O, 1.0 / static_cast<double>(O));
  LearnerParams p;
  p.alpha = 0.3;
  p.beta = 0.4;
  p.eta = 0.7;
  double worst = 0.0;
  auto check = [&](const LearnerState& ls) {
    const double sq = ls.q.sum();
    worst = std::max(worst, std::abs(ls.rbar - p.eta * sq) / (1.0 + std::abs(sq)));
  };
  Rng rng(7);
  LearnerState dql = LearnerState::make(S, O, true), dqe = LearnerState::make(S, O, true),
               uns = LearnerState::make(S, O, false), idql = LearnerState::make(S, O, false),
               idqe = LearnerState::make(S, O, false), iplan = LearnerState::make(S, O, false),
               aplan = LearnerState::make(S, O, false);
  StateId s = env.mdp.start_state;
  for (int i = 0; i < 10000; ++i) {
    const OptionId o = rng.below(O);
    const auto seg = execute_option(env.mdp, opts[o], s, rng, kDefaultMaxOptionSteps, o);
    inter_dql_update(dql, seg, p);
    inter_dqe_update(dqe, seg, p, mu);
    inter_unscaled_update(uns, seg, p);
    const Transition& t = seg.transitions.front();
    intra_dql_update(idql, t, o, opts, p);
    intra_dqe_update(idqe, t, o, opts, p, mu);
    inter_planning_step(iplan, models, rng.below(S), rng.below(O), rng, p);
    intra_planning_step(aplan, env.mdp, rng.below(S), rng.below(O), opts, rng, p);
    for (const auto* ls : {&dql, &dqe, &uns, &idql, &idqe, &iplan, &aplan}) check(*ls);
    s = seg.end_state;
  }
  CombinedRunSpec spec;
  spec.params = p;
  spec.params.beta = 0.1;
  spec.steps = 10000;
  spec.planning_steps = 3;
  spec.snapshot_every = 1;
  const auto combined = run_combined_agent(env.mdp, opts, spec, rng);
  for (const auto& snap : combined.run.snapshots) {
    const double sq = snap.q.sum();
    worst = std::max(worst, std::abs(snap.rbar - p.eta * sq) / (1.0 + std::abs(sq)));
  }
  const double secs = seconds_since(t0);
  return {worst < 1e-9 && secs < 10.0, fmt("max relative ledger error %.2e", worst) + fmt(" (%.1fs)", secs)};
}

// 8. Expected updates vanish at the exact solution.
Verdict criterion8() {
  const auto env = build_fourroom({});
  const OptionSet opts = fourroom_option_set(env, "A+H");
  const FiniteMdp& m = env.mdp;
  const std::size_t S = m.num_states, O = opts.size();
  const OptionModel models = exact_option_models(m, opts);
  LearnerParams p;
  p.alpha = 1.0;
  p.beta = 0.5;
  p.eta = 0.0;

  // Inter: segments from (s, o) with the expected reward and length; the
  // update is linear in both once L equals the exact expected length.
  const auto smdp = smdp_policy_iteration(models);
  double inter = 0.0;
  for (StateId s = 0; s < S; ++s)
    for (OptionId o = 0; o < O; ++o) {
      double expected = 0.0;
      for (StateId x = 0; x < S; ++x) {
        const double w = models.p(s, o, x);
        if (w == 0.0) continue;
        LearnerState ls = LearnerState::make(S, O, true);
        ls.q = smdp.q;
        ls.rbar = smdp.rate;
        ls.len = Table(S, O);
        ls.len.values() = models.ml;
        OptionSegment seg;
        seg.start_state = s;
        seg.option_index = o;
        seg.cum_reward = models.r(s, o);
        seg.length = 0;
        seg.end_state = x;
        // L is held at the exact expected length by a zero length step.
        LearnerParams q = p;
        q.beta = 0.0;
        inter_dql_update(ls, seg, q);
        expected += w * (ls.q(s, o) - smdp.q(s, o));
      }
      inter = std::max(inter, std::abs(expected));
    }

  // Intra and model: uniformly random actions, so every option is covered,
  // enumerating actions and outcomes.
  const auto intra_sol = intra_optimality_solve(m, opts);
  const double b = 1.0 / static_cast<double>(m.num_actions);
  double intra = 0.0, model = 0.0;
  for (StateId s = 0; s < S; ++s) {
    std::vector<double> dq(O, 0.0);
    std::vector<double> dmp(O * S, 0.0), dmr(O, 0.0), dml(O, 0.0);
    for (ActionId a = 0; a < m.num_actions; ++a)
      for (const auto& out : m.row(s, a)) {
        const double w = b * out.probability;
        const Transition t{s, a, m.reward(out), out.next_state};
        LearnerState ls = LearnerState::make(S, O, false);
        ls.q = intra_sol.q;
        ls.rbar = intra_sol.rate;
        intra_dql_update(ls, t, b, opts, p);
        OptionModel next = models;
        model_learning_update(next, t, b, opts, 1.0);
        for (OptionId o = 0; o < O; ++o) {
          dq[o] += w * (ls.q(s, o) - intra_sol.q(s, o));
          dmr[o] += w * (next.r(s, o) - models.r(s, o));
          dml[o] += w * (next.l(s, o) - models.l(s, o));
          for (StateId x = 0; x < S; ++x) dmp[o * S + x] += w * (next.p(s, o, x) - models.p(s, o, x));
        }
      }
    for (double v : dq) intra = std::max(intra, std::abs(v));
    for (const auto* v : {&dmp, &dmr, &dml})
      for (double x : *v) model = std::max(model, std::abs(x));
  }
  const bool ok = inter < 1e-9 && intra < 1e-9 && model < 1e-9;
  return {ok, fmt("inter %.2e", inter) + fmt2(", intra %.2e, model %.2e", intra, model)};
}

// 9. The intra-option optimum composes into the option-level optimum.
Verdict criterion9() {
  bool ok = true;
  std::string detail;
  for (Goal g : {Goal::G1, Goal::G2, Goal::G3})
    for (const char* set : {"A+H", "H"}) {
      ExperimentConfig cfg;
      cfg.env.goal = g;
      cfg.options.set = set;
      const auto ctx = ExperimentContext::build(cfg);
      const auto sol = intra_optimality_solve(ctx.env.mdp, ctx.options);
      const double res = smdp_residual(ctx.models, sol.q, sol.rate);
      DeterministicPolicy greedy(ctx.env.mdp.num_states);
      for (StateId s = 0; s < greedy.size(); ++s) greedy[s] = sol.q.row_argmax(s);
      const double rate = rate_from_state(ctx.models, greedy, ctx.env.mdp.start_state);
      const bool good = res < 1e-8 && std::abs(rate - ctx.optimal.rate) < 1e-9;
      ok = ok && good;
      detail += std::string(goal_name(g)) + "/" + set + fmt(" res %.1e", res) + (good ? " ok; " : " BAD; ");
    }
  return {ok, detail};
}

// 10. Random value tables: the gap to r* against the residual span.
Verdict criterion10() {
  const auto env = build_fourroom({});
  const OptionSet opts = fourroom_option_set(env, "A+H");
  const OptionModel models = exact_option_models(env.mdp, opts);
  const double rstar = smdp_policy_iteration(models).rate;
  Rng rng(10);
  int held = 0, scaled_held = 0;
  double min_slack = 1e300;
  for (int k = 0; k < 100; ++k) {
    Table q(models.num_states, models.num_options);
    const double scale = k < 50 ? 1.0 : 0.01;  // half the tables near-flat
    for (auto& v : q.values()) v = scale * rng.uniform();
    DeterministicPolicy greedy(models.num_states);
    for (StateId s = 0; s < greedy.size(); ++s) greedy[s] = q.row_argmax(s);
    const double gap = std::abs(rstar - rate_from_state(models, greedy, env.mdp.start_state));
    const double span = bellman_residual_span(models, q);
    held += gap <= span;
    scaled_held += gap <= scaled_residual_span(models, q);
    min_slack = std::min(min_slack, span - gap);
  }
  return {held == 100, std::to_string(held) + "/100 within span(TQ-Q), " + std::to_string(scaled_held) +
                           "/100 within the length-scaled span" + fmt(", min slack %.4f", min_slack)};
}

// 11. Gosavi's baseline is more sensitive to the step size.
Verdict criterion11() {
  const std::vector<double> grid = {0.5, 0.125, 0.03125, 0.0078125, 0.001953125};
  auto range_at_best_beta = [&](const std::string& algo, double& best_beta) {
    double best_mean = -1e300, best_range = 0.0;
    for (double beta : grid) {
      std::vector<double> per_alpha;
      for (double alpha : grid) {
        ExperimentConfig cfg = base_config(algo, Goal::G1, "A+H");
        cfg.params.alpha = alpha;
        cfg.params.beta = beta;
        cfg.execution.runs = 5;
        cfg.execution.eval_greedy = false;
        const auto recs = run_experiment(cfg);
        double m = 0.0;
        for (const auto& r : recs) m += r.mean_reward / static_cast<double>(recs.size());
        per_alpha.push_back(m);
      }
      double mean = 0.0;
      for (double v : per_alpha) mean += v / static_cast<double>(per_alpha.size());
      if (mean > best_mean) {
        best_mean = mean;
        best_beta = beta;
        best_range = *std::max_element(per_alpha.begin(), per_alpha.end()) -
                     *std::min_element(per_alpha.begin(), per_alpha.end());
      }
    }
    return best_range;
  };
  double beta_g = 0.0, beta_d = 0.0;
  const double gosavi = range_at_best_beta("gosavi", beta_g);
  const double dql = range_at_best_beta("inter_dql", beta_d);
  return {gosavi > dql, fmt2("alpha range: gosavi %.4f (beta %g), ", gosavi, beta_g) +
                            fmt2("inter_dql %.4f (beta %g)", dql, beta_d)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::function<Verdict()>> criteria = {criterion1, criterion2, criterion3, criterion4,
                                                          criterion5, criterion6, criterion7, criterion8,
                                                          criterion9, criterion10, criterion11};
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc) {
      selected.push_back(std::atoi(argv[++i]));
    } else {
      std::fprintf(stderr, "usage: %s [--criterion N]...\n", argv[0]);
      return 2;
    }
  }
  if (selected.empty())
    for (int n = 1; n <= static_cast<int>(criteria.size()); ++n) selected.push_back(n);
  bool all = true;
  for (int n : selected) {
    if (n < 1 || n > static_cast<int>(criteria.size())) {
      std::fprintf(stderr, "no criterion %d\n", n);
      return 2;
    }
    Verdict out;
    try {
      out = criteria[n - 1]();
    } catch (const std::exception& e) {
      out = {false, std::string("error: ") + e.what()};
    }
    std::printf("%s criterion %d: %s\n", out.pass ? "PASS" : "FAIL", n, out.detail.c_str());
    std::fflush(stdout);
    all = all && out.pass;
  }
  return all ? 0 : 1;
}
