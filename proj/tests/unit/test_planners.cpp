#include <gtest/gtest.h>

#include <cmath>

#include "avgopt/oracle.hpp"
#include "avgopt/planners.hpp"
#include "test_util.hpp"

using namespace avgopt;

namespace {

LearnerParams params(double alpha, double eta) {
  LearnerParams p;
  p.alpha = alpha;
  p.eta = eta;
  return p;
}

}  // namespace

TEST(SearchControl, MarkAndSample) {
  SearchControl sc(3, 2);
  Rng rng(1);
  EXPECT_TRUE(sc.empty());
  EXPECT_FALSE(sc.sample(rng).has_value());
  sc.mark(2, 1);
  sc.mark(2, 1);
  sc.mark(0, 0);
  EXPECT_EQ(sc.size(), 2u);
  EXPECT_TRUE(sc.contains(2, 1));
  EXPECT_FALSE(sc.contains(1, 1));
  int first = 0;
  for (int i = 0; i < 10000; ++i) first += *sc.sample(rng) == std::make_pair(StateId{2}, OptionId{1});
  EXPECT_NEAR(first / 10000.0, 0.5, 0.02);
  EXPECT_EQ(SearchControl::all(3, 2).size(), 6u);
}

TEST(InterPlanningStep, DeterministicRowBySubstitution) {
  OptionModel m = OptionModel::zeros(2, 1);
  m.p(0, 0, 1) = 1.0;
  m.r(0, 0) = 3.0;
  m.l(0, 0) = 2.0;
  auto ls = LearnerState::make(2, 1, false);
  ls.q(1, 0) = 1.0;
  ls.rbar = 0.5;
  Rng rng(1);
  ASSERT_TRUE(inter_planning_step(ls, m, 0, 0, rng, params(0.5, 0.1)));
  const double delta = 3.0 - 2.0 * 0.5 + 1.0 - 0.0;
  EXPECT_DOUBLE_EQ(ls.q(0, 0), 0.5 * delta / 2.0);
  EXPECT_DOUBLE_EQ(ls.rbar, 0.5 + 0.1 * 0.5 * delta / 2.0);
}

TEST(InterPlanningStep, UnnormalisedRowIsNormalised) {
  OptionModel m = OptionModel::zeros(3, 1, 1.0);
  m.p(0, 0, 1) = 0.02;
  m.p(0, 0, 2) = 0.02;
  auto ls = LearnerState::make(3, 1, false);
  ls.q(1, 0) = 1.0;
  ls.q(2, 0) = 3.0;
  Rng rng(2);
  double total = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    auto copy = ls;
    inter_planning_step(copy, m, 0, 0, rng, params(1.0, 0.1));
    total += copy.q(0, 0);
  }
  EXPECT_NEAR(total / n, 2.0, 0.03);
}

TEST(InterPlanningStep, EmptyRowIsSkippedWithoutVariates) {
  OptionModel m = OptionModel::zeros(2, 1, 1.0);
  m.p(0, 0, 1) = 1e-7;
  auto ls = LearnerState::make(2, 1, false);
  Rng a(3), b(3);
  EXPECT_FALSE(inter_planning_step(ls, m, 0, 0, a, params(0.5, 0.1)));
  EXPECT_EQ(ls.q.sum(), 0.0);
  EXPECT_EQ(a.uniform(), b.uniform());
}

TEST(InterPlanningStep, PrimitiveModelMatchesOneStepUpdateInExpectation) {
  Rng mk(4);
  const FiniteMdp m = testutil::random_mdp(4, 2, mk);
  const OptionSet opts = primitive_options(4, 2);
  const OptionModel model = exact_option_models(m, opts);
  auto base = LearnerState::make(4, 2, false);
  for (auto& v : base.q.values()) v = mk.uniform();
  base.rbar = 0.2;
  // Exact expectation of the planning step: s' weighted by mp.
  double expected_plan = model.r(1, 1) - base.rbar - base.q(1, 1);
  for (StateId x = 0; x < 4; ++x) expected_plan += model.p(1, 1, x) * base.q.row_max(x);
  double expected_learn = 0.0;
  for (const auto& o : m.row(1, 1))
    expected_learn += o.probability * (m.reward(o) - base.rbar + base.q.row_max(o.next_state) - base.q(1, 1));
  EXPECT_NEAR(expected_plan, expected_learn, 1e-12);
}

TEST(InterPlanning, ExactModelReachesOptimalRate) {
  const auto env = testutil::fourroom(Goal::G1);
  const OptionSet opts = fourroom_option_set(env, "A+H");
  const OptionModel model = exact_option_models(env.mdp, opts);
  const auto opt = smdp_policy_iteration(model);
  Rng rng(5);
  // R-bar carries eta times the noise of every Q entry, so a small step is used.
  const auto ls = inter_planning_sweeps(model, params(0.03125, 0.1), 1500, rng);
  EXPECT_NEAR(ls.rbar, 0.0625, 0.01);
  DeterministicPolicy greedy(env.mdp.num_states);
  for (StateId s = 0; s < env.mdp.num_states; ++s) greedy[s] = ls.q.row_argmax(s);
  EXPECT_NEAR(rate_from_state(model, greedy, env.mdp.start_state), opt.rate, 1e-9);
}

TEST(InterPlanning, EmptyControlIsNoOp) {
  const OptionModel model = OptionModel::zeros(2, 2, 1.0);
  Rng rng(6);
  const auto trace = run_inter_planning(model, SearchControl(2, 2), params(0.5, 0.1), 100, 10, rng);
  EXPECT_EQ(trace.updates, 0u);
  EXPECT_EQ(trace.final_state.q.sum(), 0.0);
  EXPECT_EQ(trace.final_state.rbar, 0.0);
}

TEST(IntraPlanning, TerminatingOptionsGiveOneStepQPlanning) {
  const FiniteMdp m = testutil::alternating_chain(true);
  const OptionSet opts = primitive_options(2, 2);
  auto ls = LearnerState::make(2, 2, false);
  ls.q(1, 1) = 2.0;
  Rng rng(7);
  intra_planning_step(ls, m, 0, 0, opts, rng, params(0.5, 0.1));
  EXPECT_DOUBLE_EQ(ls.q(0, 0), 0.5 * (0.0 + 2.0));
  EXPECT_EQ(ls.q(0, 1), 0.0);
}

TEST(IntraPlanning, TrueModelReachesOptimalRateOnG2) {
  const auto env = testutil::fourroom(Goal::G2);
  const OptionSet opts = fourroom_option_set(env, "A+H");
  const OptionModel model = exact_option_models(env.mdp, opts);
  Rng rng(8);
  const auto trace = run_intra_planning(env.mdp, opts, SearchControl::all(env.mdp.num_states, opts.size()),
                                        params(0.125, 0.1), 600000, 100000, rng);
  DeterministicPolicy greedy(env.mdp.num_states);
  for (StateId s = 0; s < env.mdp.num_states; ++s) greedy[s] = trace.final_state.q.row_argmax(s);
  EXPECT_NEAR(rate_from_state(model, greedy, env.mdp.start_state), 1.0 / 14.0, 1e-9);
  EXPECT_EQ(trace.snapshots.size(), 6u);
}

TEST(Coupling, PlannersAndCombinedAgent) {
  Rng mk(11);
  const FiniteMdp m = testutil::random_mdp(5, 2, mk);
  const OptionSet opts = testutil::random_options(m, 2, mk);
  const OptionModel model = exact_option_models(m, opts);
  const auto p = params(0.3, 0.6);
  Rng rng(12);
  auto a = LearnerState::make(5, opts.size(), false);
  auto b = LearnerState::make(5, opts.size(), false);
  for (int i = 0; i < 10000; ++i) {
    const StateId s = rng.below(5);
    const OptionId o = rng.below(opts.size());
    inter_planning_step(a, model, s, o, rng, p);
    intra_planning_step(b, m, s, o, opts, rng, p);
    for (const auto* ls : {&a, &b}) {
      const double sq = ls->q.sum();
      ASSERT_LT(std::abs(ls->rbar - p.eta * sq), 1e-9 * (1.0 + std::abs(sq)));
    }
  }
  CombinedRunSpec spec;
  spec.params = p;
  spec.params.beta = 0.2;
  spec.steps = 2000;
  spec.planning_steps = 5;
  spec.snapshot_every = 1;
  const auto trace = run_combined_agent(m, opts, spec, rng);
  for (const auto& snap : trace.run.snapshots) {
    const double sq = snap.q.sum();
    ASSERT_LT(std::abs(snap.rbar - p.eta * sq), 1e-9 * (1.0 + std::abs(sq)));
  }
}

TEST(Combined, ZeroPlanningLeavesValuesAlone) {
  const auto env = testutil::fourroom(Goal::G1);
  const OptionSet opts = fourroom_option_set(env, "A+H");
  CombinedRunSpec spec;
  spec.steps = 3000;
  spec.planning_steps = 0;
  spec.params.beta = 0.1;
  Rng rng(13);
  const auto trace = run_combined_agent(env.mdp, opts, spec, rng);
  EXPECT_EQ(trace.run.final_state.q.sum(), 0.0);
  EXPECT_EQ(trace.run.final_state.rbar, 0.0);
  EXPECT_EQ(trace.planning_updates, 0u);
  double learned = 0.0;
  for (double v : trace.model.ml) learned += std::abs(v - 1.0);
  EXPECT_GT(learned, 0.0);
  EXPECT_EQ(trace.run.rewards.size(), 3000u);
}

TEST(Combined, SameSeedSameTrace) {
  const auto env = testutil::fourroom(Goal::G1);
  const OptionSet opts = fourroom_option_set(env, "A+H");
  CombinedRunSpec spec;
  spec.steps = 1000;
  spec.planning_steps = 3;
  spec.params.beta = 0.1;
  Rng a(14), b(14);
  const auto x = run_combined_agent(env.mdp, opts, spec, a);
  const auto y = run_combined_agent(env.mdp, opts, spec, b);
  EXPECT_EQ(x.run.rewards, y.run.rewards);
  EXPECT_EQ(x.run.final_state.q, y.run.final_state.q);
  EXPECT_EQ(x.model.mp, y.model.mp);
}
