#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "avgopt/fourroom.hpp"
#include "avgopt/mdp.hpp"
#include "avgopt/option_model.hpp"
#include "avgopt/options.hpp"
#include "avgopt/table.hpp"

namespace avgopt {

class OracleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct OracleSolution {
  Table q;
  double rate = 0.0;      // r* or r(mu)
  double residual = 0.0;  // max-abs Bellman residual of (q, rate)
  std::string normalization;
  DeterministicPolicy policy;       // optimal / evaluated policy when deterministic
  std::vector<double> stationary;   // over states (evaluation only)
  std::size_t iterations = 0;
};

/// Exact model of one option (num_options = 1) from dense linear solves.
/// Throws OracleError naming (s, o) when the option can run forever from s.
OptionModel exact_option_model(const FiniteMdp& mdp, const OptionDef& opt, OptionId label = 0);
OptionModel exact_option_models(const FiniteMdp& mdp, const OptionSet& opts);

/// Max-abs residual of the three model equations at `m`.
double model_fixed_point_residual(const FiniteMdp& mdp, const OptionSet& opts, const OptionModel& m);

/// Optimal (q*, r*) of the SMDP defined by `models`, via relative value
/// iteration followed by policy iteration. q is pinned so that
/// q(s_ref, mu(s_ref)) = 0 at the lowest-index recurrent state s_ref.
OracleSolution smdp_policy_iteration(const OptionModel& models, double tol = 1e-10);

/// Evaluation of a (stochastic) policy over options: r(mu) from the
/// stationary distribution of the termination-state chain and a mean-zero q.
/// Throws OracleError when the chain has more than one recurrent class.
OracleSolution evaluate_policy(const OptionModel& models, const Table& mu);

/// Long-run reward rate from `start`, valid for multichain policies: the
/// class rates weighted by the probability of being absorbed in each class.
double rate_from_state(const OptionModel& models, const Table& mu, StateId start);
double rate_from_state(const OptionModel& models, const DeterministicPolicy& mu, StateId start);

/// max |mr - rbar*ml + sum_x mp max_o' q(x, o') - q(s, o)| (optimality) or
/// with sum_o' mu(o'|x) q(x, o') in place of the max (evaluation).
double smdp_residual(const OptionModel& models, const Table& q, double rbar);
double smdp_evaluation_residual(const OptionModel& models, const Table& q, double rbar, const Table& mu);

enum class IntraMode { optimality, evaluation };

/// Max over (s, o) of |sum_a pi sum_{s',r} p (r - rbar + u(s', o)) - q(s, o)|,
/// with u the optimality or mu-evaluation continuation value.
double intra_residual(const FiniteMdp& mdp, const OptionSet& opts, const Table& q, double rbar,
                      IntraMode mode, const Table* mu = nullptr);

/// Solves the intra-option optimality equations directly, by policy
/// iteration on the chain over (state, executing option).
OracleSolution intra_optimality_solve(const FiniteMdp& mdp, const OptionSet& opts, double tol = 1e-10);

/// Solves the linear intra-option evaluation equations for mu.
OracleSolution intra_evaluation_solve(const FiniteMdp& mdp, const OptionSet& opts, const Table& mu);

struct InterruptionResult {
  double r_mu = 0.0;
  double r_mu_prime = 0.0;
  std::size_t flipped = 0;  // (s, o) pairs whose termination became 1
  OptionSet interrupted;
};

/// Builds O' by setting beta(s, o) = 1 wherever q_mu(s, o) < v_mu(s), and
/// evaluates mu on both option sets. Rates are measured from `start`.
InterruptionResult interrupted_policy_rate(const FiniteMdp& mdp, const OptionSet& opts,
                                           const Table& mu);

/// 4-neighbour shortest path between open cells. Throws OracleError when a
/// cell is a wall or the target is unreachable.
int bfs_distance(const GridSpec& grid, GridPos from, GridPos to);

/// span(TQ - Q) with TQ(s, o) = mr(s, o) + sum_x mp(x|s, o) max_o' Q(x, o').
double bellman_residual_span(const OptionModel& models, const Table& q);

/// span((TQ - Q) / ml): a bound on |r* - r(mu_Q)| that also holds when
/// options have different expected lengths.
double scaled_residual_span(const OptionModel& models, const Table& q);

/// CSV "s,o,q" for a value table.
void write_q_csv(std::ostream& os, const Table& q);

}  // namespace avgopt
