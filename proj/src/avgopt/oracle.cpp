#include "avgopt/oracle.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

namespace avgopt {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct Entry {
  std::size_t to;
  double p;
};
using SparseRows = std::vector<std::vector<Entry>>;

// Closed strongly connected components (recurrent classes) of a chain given
// by its positive-probability edges, each sorted, ordered by lowest member.
std::vector<std::vector<std::size_t>> recurrent_classes(const SparseRows& rows) {
  const std::size_t n = rows.size();
  std::vector<int> index(n, -1), low(n, 0), comp(n, -1);
  std::vector<bool> on_stack(n, false);
  std::vector<std::size_t> stack;
  int counter = 0, num_comp = 0;

  // Iterative Tarjan.
  struct Frame {
    std::size_t v;
    std::size_t edge;
  };
  for (std::size_t root = 0; root < n; ++root) {
    if (index[root] >= 0) continue;
    std::vector<Frame> call{{root, 0}};
    index[root] = low[root] = counter++;
    stack.push_back(root);
    on_stack[root] = true;
    while (!call.empty()) {
      Frame& f = call.back();
      if (f.edge < rows[f.v].size()) {
        const std::size_t w = rows[f.v][f.edge++].to;
        if (index[w] < 0) {
          index[w] = low[w] = counter++;
          stack.push_back(w);
          on_stack[w] = true;
          call.push_back({w, 0});
        } else if (on_stack[w]) {
          low[f.v] = std::min(low[f.v], index[w]);
        }
        continue;
      }
      const std::size_t v = f.v;
      call.pop_back();
      if (!call.empty()) low[call.back().v] = std::min(low[call.back().v], low[v]);
      if (low[v] == index[v]) {
        while (true) {
          const std::size_t w = stack.back();
          stack.pop_back();
          on_stack[w] = false;
          comp[w] = num_comp;
          if (w == v) break;
        }
        ++num_comp;
      }
    }
  }

  std::vector<bool> closed(num_comp, true);
  for (std::size_t v = 0; v < n; ++v)
    for (const auto& e : rows[v])
      if (comp[e.to] != comp[v]) closed[comp[v]] = false;
  std::vector<std::vector<std::size_t>> classes(num_comp);
  for (std::size_t v = 0; v < n; ++v)
    if (closed[comp[v]]) classes[comp[v]].push_back(v);
  classes.erase(std::remove_if(classes.begin(), classes.end(), [](const auto& c) { return c.empty(); }),
                classes.end());
  std::sort(classes.begin(), classes.end(), [](const auto& a, const auto& b) { return a[0] < b[0]; });
  return classes;
}

SparseRows sparse_rows(const MatrixXd& p) {
  SparseRows rows(static_cast<std::size_t>(p.rows()));
  for (Eigen::Index i = 0; i < p.rows(); ++i)
    for (Eigen::Index j = 0; j < p.cols(); ++j)
      if (p(i, j) > 0.0) rows[i].push_back({static_cast<std::size_t>(j), p(i, j)});
  return rows;
}

// Per-option primitive chain under the option's policy.
void option_chain(const FiniteMdp& mdp, const OptionDef& opt, MatrixXd& p, VectorXd& r) {
  const auto n = static_cast<Eigen::Index>(mdp.num_states);
  p = MatrixXd::Zero(n, n);
  r = VectorXd::Zero(n);
  for (StateId s = 0; s < mdp.num_states; ++s)
    for (ActionId a = 0; a < mdp.num_actions; ++a) {
      const double pi = opt.pi(s, a);
      if (pi == 0.0) continue;
      for (const auto& out : mdp.row(s, a)) {
        p(s, out.next_state) += pi * out.probability;
        r(s) += pi * out.probability * mdp.reward(out);
      }
    }
}

std::string pair_name(StateId s, OptionId o) {
  return "(s=" + std::to_string(s) + ", o=" + std::to_string(o) + ")";
}

// Sparse view of a model's termination distributions.
struct SparseModel {
  std::size_t S = 0, O = 0;
  SparseRows rows;  // per (s, o)
};

SparseModel sparse_model(const OptionModel& m) {
  SparseModel sm{m.num_states, m.num_options, SparseRows(m.num_states * m.num_options)};
  for (StateId s = 0; s < m.num_states; ++s)
    for (OptionId o = 0; o < m.num_options; ++o) {
      const auto row = m.mp_row(s, o);
      for (StateId x = 0; x < m.num_states; ++x)
        if (row[x] != 0.0) sm.rows[m.pair(s, o)].push_back({x, row[x]});
    }
  return sm;
}

struct PolicyChain {
  MatrixXd p;
  VectorXd r;
  VectorXd l;
};

PolicyChain policy_chain(const OptionModel& m, const Table& mu) {
  const auto n = static_cast<Eigen::Index>(m.num_states);
  PolicyChain c{MatrixXd::Zero(n, n), VectorXd::Zero(n), VectorXd::Zero(n)};
  for (StateId s = 0; s < m.num_states; ++s)
    for (OptionId o = 0; o < m.num_options; ++o) {
      const double w = mu(s, o);
      if (w == 0.0) continue;
      c.r(s) += w * m.r(s, o);
      c.l(s) += w * m.l(s, o);
      const auto row = m.mp_row(s, o);
      for (StateId x = 0; x < m.num_states; ++x) c.p(s, x) += w * row[x];
    }
  return c;
}

void check_shapes(const OptionModel& m, const Table& t, const char* what) {
  if (t.rows() != m.num_states || t.cols() != m.num_options)
    throw std::invalid_argument(std::string(what) + " does not match the model's shape");
}

// Stationary distribution of the chain restricted to one closed class.
VectorXd class_stationary(const MatrixXd& p, const std::vector<std::size_t>& cls) {
  const auto k = static_cast<Eigen::Index>(cls.size());
  MatrixXd a(k, k);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < k; ++j) a(i, j) = (i == j ? 1.0 : 0.0) - p(cls[j], cls[i]);
  a.row(k - 1).setOnes();
  VectorXd rhs = VectorXd::Zero(k);
  rhs(k - 1) = 1.0;
  return a.partialPivLu().solve(rhs);
}

// Differential values for a unichain chain: h = r - g l + P h with h(ref) = 0.
// Returns g; h is written in place.
double differential_solve(const PolicyChain& c, std::size_t ref, VectorXd& h) {
  const auto n = c.p.rows();
  MatrixXd a = MatrixXd::Identity(n, n) - c.p;
  a.col(static_cast<Eigen::Index>(ref)) = c.l;
  const VectorXd z = a.partialPivLu().solve(c.r);
  const double g = z(static_cast<Eigen::Index>(ref));
  h = z;
  h(static_cast<Eigen::Index>(ref)) = 0.0;
  return g;
}

Table q_from_h(const OptionModel& m, const SparseModel& sm, double g, const VectorXd& h) {
  Table q(m.num_states, m.num_options);
  for (StateId s = 0; s < m.num_states; ++s)
    for (OptionId o = 0; o < m.num_options; ++o) {
      double v = m.r(s, o) - g * m.l(s, o);
      for (const auto& e : sm.rows[m.pair(s, o)]) v += e.p * h(static_cast<Eigen::Index>(e.to));
      q(s, o) = v;
    }
  return q;
}

void center(Table& q) {
  const double mean = q.sum() / static_cast<double>(q.values().size());
  for (double& v : q.values()) v -= mean;
}

}  // namespace

OptionModel exact_option_model(const FiniteMdp& mdp, const OptionDef& opt, OptionId label) {
  const std::size_t n = mdp.num_states;
  MatrixXd p;
  VectorXd r;
  option_chain(mdp, opt, p, r);

  // A state can terminate if some path under the option reaches a
  // successor with positive termination probability.
  std::vector<bool> can_stop(n, false);
  for (bool changed = true; changed;) {
    changed = false;
    for (StateId s = 0; s < n; ++s) {
      if (can_stop[s]) continue;
      for (StateId x = 0; x < n && !can_stop[s]; ++x) {
        if (p(s, x) <= 0.0) continue;
        if (opt.beta(x) > 0.0 || can_stop[x]) can_stop[s] = true;
      }
      changed = changed || can_stop[s];
    }
  }
  for (StateId s = 0; s < n; ++s)
    if (!can_stop[s])
      throw OracleError("option never terminates from " + pair_name(s, label) +
                        ": expected length is infinite");

  VectorXd beta(static_cast<Eigen::Index>(n));
  for (StateId x = 0; x < n; ++x) beta(x) = opt.beta(x);
  const MatrixXd cont = p * (VectorXd::Ones(beta.size()) - beta).asDiagonal();
  const auto lu = (MatrixXd::Identity(cont.rows(), cont.cols()) - cont).partialPivLu();
  const VectorXd ml = lu.solve(VectorXd::Ones(cont.rows()));
  const VectorXd mr = lu.solve(r);
  const MatrixXd mp = lu.solve(p * beta.asDiagonal());

  OptionModel m = OptionModel::zeros(n, 1);
  for (StateId s = 0; s < n; ++s) {
    if (!std::isfinite(ml(s)) || ml(s) < 1.0 - 1e-9)
      throw OracleError("option model solve failed at " + pair_name(s, label));
    m.l(s, 0) = ml(s);
    m.r(s, 0) = mr(s);
    for (StateId x = 0; x < n; ++x) m.p(s, 0, x) = mp(s, x);
  }
  return m;
}

OptionModel exact_option_models(const FiniteMdp& mdp, const OptionSet& opts) {
  OptionModel all = OptionModel::zeros(mdp.num_states, opts.size());
  for (OptionId o = 0; o < opts.size(); ++o) {
    const OptionModel one = exact_option_model(mdp, opts[o], o);
    for (StateId s = 0; s < mdp.num_states; ++s) {
      all.r(s, o) = one.r(s, 0);
      all.l(s, o) = one.l(s, 0);
      for (StateId x = 0; x < mdp.num_states; ++x) all.p(s, o, x) = one.p(s, 0, x);
    }
  }
  return all;
}

double model_fixed_point_residual(const FiniteMdp& mdp, const OptionSet& opts, const OptionModel& m) {
  double worst = 0.0;
  const std::size_t n = mdp.num_states;
  std::vector<double> target(n);
  for (OptionId o = 0; o < opts.size(); ++o) {
    const auto& opt = opts[o];
    for (StateId s = 0; s < n; ++s) {
      std::fill(target.begin(), target.end(), 0.0);
      double r = 0.0, l = 0.0;
      for (ActionId a = 0; a < mdp.num_actions; ++a) {
        const double pi = opt.pi(s, a);
        if (pi == 0.0) continue;
        for (const auto& out : mdp.row(s, a)) {
          const double w = pi * out.probability;
          const StateId x = out.next_state;
          const double b = opt.beta(x);
          r += w * (mdp.reward(out) + (1.0 - b) * m.r(x, o));
          l += w * (1.0 + (1.0 - b) * m.l(x, o));
          target[x] += w * b;
          for (StateId y = 0; y < n; ++y) target[y] += w * (1.0 - b) * m.p(x, o, y);
        }
      }
      worst = std::max({worst, std::abs(r - m.r(s, o)), std::abs(l - m.l(s, o))});
      for (StateId y = 0; y < n; ++y) worst = std::max(worst, std::abs(target[y] - m.p(s, o, y)));
    }
  }
  return worst;
}

double smdp_residual(const OptionModel& m, const Table& q, double rbar) {
  check_shapes(m, q, "q");
  std::vector<double> v(m.num_states);
  for (StateId x = 0; x < m.num_states; ++x) v[x] = q.row_max(x);
  double worst = 0.0;
  for (StateId s = 0; s < m.num_states; ++s)
    for (OptionId o = 0; o < m.num_options; ++o) {
      double rhs = m.r(s, o) - rbar * m.l(s, o);
      const auto row = m.mp_row(s, o);
      for (StateId x = 0; x < m.num_states; ++x) rhs += row[x] * v[x];
      worst = std::max(worst, std::abs(rhs - q(s, o)));
    }
  return worst;
}

double smdp_evaluation_residual(const OptionModel& m, const Table& q, double rbar, const Table& mu) {
  check_shapes(m, q, "q");
  check_shapes(m, mu, "mu");
  std::vector<double> v(m.num_states, 0.0);
  for (StateId x = 0; x < m.num_states; ++x)
    for (OptionId o = 0; o < m.num_options; ++o) v[x] += mu(x, o) * q(x, o);
  double worst = 0.0;
  for (StateId s = 0; s < m.num_states; ++s)
    for (OptionId o = 0; o < m.num_options; ++o) {
      double rhs = m.r(s, o) - rbar * m.l(s, o);
      const auto row = m.mp_row(s, o);
      for (StateId x = 0; x < m.num_states; ++x) rhs += row[x] * v[x];
      worst = std::max(worst, std::abs(rhs - q(s, o)));
    }
  return worst;
}

OracleSolution smdp_policy_iteration(const OptionModel& m, double tol) {
  const std::size_t S = m.num_states, O = m.num_options;
  if (S == 0 || O == 0) throw std::invalid_argument("smdp_policy_iteration: empty model");
  const SparseModel sm = sparse_model(m);
  double min_len = std::numeric_limits<double>::infinity();
  for (double l : m.ml) min_len = std::min(min_len, l);
  if (!(min_len > 0.0)) throw OracleError("option model has a non-positive expected length");

  // Warm start: relative value iteration on the aperiodic transform
  // h <- h + max_o tau/l (r + P h - h), which shares the SMDP's policies.
  const double tau = 0.5 * std::min(1.0, min_len);
  std::vector<double> h(S, 0.0), next(S);
  std::size_t iters = 0;
  for (; iters < 200000; ++iters) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (StateId s = 0; s < S; ++s) {
      double best = -std::numeric_limits<double>::infinity();
      for (OptionId o = 0; o < O; ++o) {
        double v = m.r(s, o) - h[s];
        for (const auto& e : sm.rows[m.pair(s, o)]) v += e.p * h[e.to];
        best = std::max(best, tau / m.l(s, o) * v);
      }
      next[s] = h[s] + best;
      lo = std::min(lo, best);
      hi = std::max(hi, best);
    }
    const double offset = next[0];
    for (StateId s = 0; s < S; ++s) h[s] = next[s] - offset;
    if (hi - lo < 1e-9) break;
  }

  DeterministicPolicy mu(S, 0);
  for (StateId s = 0; s < S; ++s) {
    double best = -std::numeric_limits<double>::infinity();
    for (OptionId o = 0; o < O; ++o) {
      double v = m.r(s, o) - h[s];
      for (const auto& e : sm.rows[m.pair(s, o)]) v += e.p * h[e.to];
      v /= m.l(s, o);
      if (v > best) {
        best = v;
        mu[s] = o;
      }
    }
  }

  OracleSolution sol;
  VectorXd hv;
  for (std::size_t round = 0; round < 1000; ++round) {
    const Table mu_table = to_table(mu, O);
    const PolicyChain chain = policy_chain(m, mu_table);
    const auto classes = recurrent_classes(sparse_rows(chain.p));
    if (classes.size() != 1)
      throw OracleError("policy iteration reached a policy with " + std::to_string(classes.size()) +
                        " recurrent classes; the SMDP is not unichain");
    const std::size_t ref = classes[0][0];
    const double g = differential_solve(chain, ref, hv);
    Table q = q_from_h(m, sm, g, hv);

    bool changed = false;
    for (StateId s = 0; s < S; ++s) {
      const double best = q.row_max(s);
      const double slack = 1e-12 * (1.0 + std::abs(best));
      if (q(s, mu[s]) >= best - slack) continue;
      mu[s] = q.row_argmax(s);
      changed = true;
    }
    if (!changed) {
      sol.q = std::move(q);
      sol.rate = g;
      sol.policy = mu;
      sol.iterations = round + 1;
      sol.normalization = "q(" + std::to_string(ref) + ", mu(" + std::to_string(ref) + ")) = 0";
      sol.residual = smdp_residual(m, sol.q, g);
      if (!(sol.residual < tol))
        throw OracleError("policy iteration converged with Bellman residual " +
                          std::to_string(sol.residual));
      return sol;
    }
  }
  throw OracleError("policy iteration did not converge (suspected multichain SMDP)");
}

OracleSolution evaluate_policy(const OptionModel& m, const Table& mu) {
  check_shapes(m, mu, "policy");
  const PolicyChain chain = policy_chain(m, mu);
  const auto classes = recurrent_classes(sparse_rows(chain.p));
  if (classes.size() != 1)
    throw OracleError("policy induces " + std::to_string(classes.size()) +
                      " recurrent classes; evaluation needs exactly one");
  const auto& cls = classes[0];
  const VectorXd d = class_stationary(chain.p, cls);

  OracleSolution sol;
  sol.stationary.assign(m.num_states, 0.0);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < cls.size(); ++i) {
    sol.stationary[cls[i]] = d(static_cast<Eigen::Index>(i));
    num += d(static_cast<Eigen::Index>(i)) * chain.r(cls[i]);
    den += d(static_cast<Eigen::Index>(i)) * chain.l(cls[i]);
  }
  sol.rate = num / den;

  VectorXd h;
  differential_solve(chain, cls[0], h);
  sol.q = q_from_h(m, sparse_model(m), sol.rate, h);
  center(sol.q);
  sol.normalization = "mean of q over all (s, o) is zero";
  sol.residual = smdp_evaluation_residual(m, sol.q, sol.rate, mu);

  bool deterministic = true;
  for (double w : mu.values()) deterministic = deterministic && (w == 0.0 || w == 1.0);
  if (deterministic) sol.policy = greedy_policy(mu);
  return sol;
}

double rate_from_state(const OptionModel& m, const Table& mu, StateId start) {
  check_shapes(m, mu, "policy");
  if (start >= m.num_states) throw std::out_of_range("rate_from_state: start out of range");
  const PolicyChain chain = policy_chain(m, mu);
  const auto classes = recurrent_classes(sparse_rows(chain.p));
  std::vector<int> class_of(m.num_states, -1);
  std::vector<double> rates(classes.size());
  for (std::size_t k = 0; k < classes.size(); ++k) {
    const VectorXd d = class_stationary(chain.p, classes[k]);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < classes[k].size(); ++i) {
      class_of[classes[k][i]] = static_cast<int>(k);
      num += d(static_cast<Eigen::Index>(i)) * chain.r(classes[k][i]);
      den += d(static_cast<Eigen::Index>(i)) * chain.l(classes[k][i]);
    }
    rates[k] = num / den;
  }
  if (class_of[start] >= 0) return rates[class_of[start]];

  // Absorption-weighted rate: solve (I - P_TT) b = P_T,class rate.
  std::vector<std::size_t> transient;
  std::vector<Eigen::Index> pos(m.num_states, -1);
  for (StateId s = 0; s < m.num_states; ++s)
    if (class_of[s] < 0) {
      pos[s] = static_cast<Eigen::Index>(transient.size());
      transient.push_back(s);
    }
  const auto t = static_cast<Eigen::Index>(transient.size());
  MatrixXd a = MatrixXd::Identity(t, t);
  VectorXd rhs = VectorXd::Zero(t);
  for (Eigen::Index i = 0; i < t; ++i)
    for (StateId x = 0; x < m.num_states; ++x) {
      const double p = chain.p(transient[i], x);
      if (p == 0.0) continue;
      if (class_of[x] >= 0) rhs(i) += p * rates[class_of[x]];
      else a(i, pos[x]) -= p;
    }
  const VectorXd b = a.partialPivLu().solve(rhs);
  return b(pos[start]);
}

double rate_from_state(const OptionModel& m, const DeterministicPolicy& mu, StateId start) {
  return rate_from_state(m, to_table(mu, m.num_options), start);
}

namespace {

// One-step data of every (state, option) pair under the option's policy.
struct IntraChain {
  std::size_t S = 0, O = 0;
  std::vector<double> reward;  // [s * O + o]
  SparseRows next;             // [s * O + o] -> successor states
  std::vector<double> beta;    // [s * O + o]
};

IntraChain intra_chain(const FiniteMdp& mdp, const OptionSet& opts) {
  const std::size_t S = mdp.num_states, O = opts.size();
  IntraChain c{S, O, std::vector<double>(S * O, 0.0), SparseRows(S * O), std::vector<double>(S * O)};
  std::vector<double> dense(S, 0.0);
  for (StateId s = 0; s < S; ++s)
    for (OptionId o = 0; o < O; ++o) {
      c.beta[s * O + o] = opts[o].beta(s);
      std::vector<StateId> touched;
      for (ActionId a = 0; a < mdp.num_actions; ++a) {
        const double pi = opts[o].pi(s, a);
        if (pi == 0.0) continue;
        for (const auto& out : mdp.row(s, a)) {
          const double w = pi * out.probability;
          if (dense[out.next_state] == 0.0) touched.push_back(out.next_state);
          dense[out.next_state] += w;
          c.reward[s * O + o] += w * mdp.reward(out);
        }
      }
      std::sort(touched.begin(), touched.end());
      for (StateId x : touched) {
        c.next[s * O + o].push_back({x, dense[x]});
        dense[x] = 0.0;
      }
    }
  return c;
}

// Rate-free one-step backup: r(s,o) + sum_x P(x) u(x, o).
template <class TerminalValue>
double intra_backup(const IntraChain& c, const Table& q, StateId s, OptionId o, TerminalValue&& tv) {
  double v = c.reward[s * c.O + o];
  for (const auto& e : c.next[s * c.O + o]) {
    const double b = c.beta[e.to * c.O + o];
    v += e.p * ((1.0 - b) * q(e.to, o) + b * tv(e.to));
  }
  return v;
}

// Solves q = r - g + P q over augmented states z = s*O + o, where the chain
// continues with o or switches to an option drawn from `choice(x)`.
double intra_linear_solve(const IntraChain& c, const std::function<void(StateId, std::vector<Entry>&)>& choice,
                          Table& q, std::size_t& ref_out) {
  const std::size_t n = c.S * c.O;
  SparseRows chain(n);
  std::vector<Entry> pick;
  for (StateId s = 0; s < c.S; ++s)
    for (OptionId o = 0; o < c.O; ++o) {
      auto& row = chain[s * c.O + o];
      for (const auto& e : c.next[s * c.O + o]) {
        const double b = c.beta[e.to * c.O + o];
        if (b < 1.0) row.push_back({e.to * c.O + o, e.p * (1.0 - b)});
        if (b > 0.0) {
          choice(e.to, pick);
          for (const auto& k : pick) row.push_back({e.to * c.O + k.to, e.p * b * k.p});
        }
      }
    }
  const auto classes = recurrent_classes(chain);
  if (classes.size() != 1)
    throw OracleError("intra-option chain has " + std::to_string(classes.size()) +
                      " recurrent classes; it must be unichain");
  const std::size_t ref = classes[0][0];

  std::vector<Eigen::Triplet<double>> trips;
  for (std::size_t z = 0; z < n; ++z) {
    if (z != ref) trips.emplace_back(z, z, 1.0);
    for (const auto& e : chain[z])
      if (e.to != ref) trips.emplace_back(z, e.to, -e.p);
    trips.emplace_back(z, ref, 1.0);  // coefficient of the rate
  }
  Eigen::SparseMatrix<double> a(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  a.setFromTriplets(trips.begin(), trips.end());
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(a);
  if (lu.info() != Eigen::Success) throw OracleError("intra-option linear system is singular");
  VectorXd rhs(static_cast<Eigen::Index>(n));
  for (std::size_t z = 0; z < n; ++z) rhs(z) = c.reward[z];
  const VectorXd x = lu.solve(rhs);
  if (lu.info() != Eigen::Success) throw OracleError("intra-option linear solve failed");
  q = Table(c.S, c.O);
  for (std::size_t z = 0; z < n; ++z) q.values()[z] = z == ref ? 0.0 : x(z);
  ref_out = ref;
  return x(ref);
}

}  // namespace

double intra_residual(const FiniteMdp& mdp, const OptionSet& opts, const Table& q, double rbar,
                      IntraMode mode, const Table* mu) {
  if (q.rows() != mdp.num_states || q.cols() != opts.size())
    throw std::invalid_argument("intra_residual: q has the wrong shape");
  if (mode == IntraMode::evaluation && !mu)
    throw std::invalid_argument("intra_residual: evaluation mode needs a policy");
  const IntraChain c = intra_chain(mdp, opts);
  std::vector<double> terminal(c.S, 0.0);
  for (StateId x = 0; x < c.S; ++x) {
    if (mode == IntraMode::optimality) terminal[x] = q.row_max(x);
    else
      for (OptionId o = 0; o < c.O; ++o) terminal[x] += (*mu)(x, o) * q(x, o);
  }
  double worst = 0.0;
  for (StateId s = 0; s < c.S; ++s)
    for (OptionId o = 0; o < c.O; ++o) {
      const double rhs = intra_backup(c, q, s, o, [&](StateId x) { return terminal[x]; }) - rbar;
      worst = std::max(worst, std::abs(rhs - q(s, o)));
    }
  return worst;
}

OracleSolution intra_optimality_solve(const FiniteMdp& mdp, const OptionSet& opts, double tol) {
  const IntraChain c = intra_chain(mdp, opts);
  const std::size_t S = c.S, O = c.O;

  // Warm start: damped relative value iteration, q <- q + tau (Tq - q).
  const double tau = 0.5;
  Table q(S, O), tq(S, O);
  std::vector<double> vmax(S);
  for (std::size_t it = 0; it < 200000; ++it) {
    for (StateId x = 0; x < S; ++x) vmax[x] = q.row_max(x);
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (StateId s = 0; s < S; ++s)
      for (OptionId o = 0; o < O; ++o) {
        const double d = intra_backup(c, q, s, o, [&](StateId x) { return vmax[x]; }) - q(s, o);
        tq(s, o) = q(s, o) + tau * d;
        lo = std::min(lo, d);
        hi = std::max(hi, d);
      }
    const double offset = tq(0, 0);
    for (std::size_t z = 0; z < S * O; ++z) q.values()[z] = tq.values()[z] - offset;
    if (hi - lo < 1e-9) break;
  }

  DeterministicPolicy choice = greedy_policy(q);
  OracleSolution sol;
  for (std::size_t round = 0; round < 1000; ++round) {
    std::size_t ref = 0;
    Table qn;
    const double g = intra_linear_solve(
        c,
        [&](StateId x, std::vector<Entry>& pick) {
          pick.assign(1, Entry{choice[x], 1.0});
        },
        qn, ref);
    bool changed = false;
    for (StateId s = 0; s < S; ++s) {
      const double best = qn.row_max(s);
      if (qn(s, choice[s]) >= best - 1e-12 * (1.0 + std::abs(best))) continue;
      choice[s] = qn.row_argmax(s);
      changed = true;
    }
    if (!changed) {
      sol.q = std::move(qn);
      sol.rate = g;
      sol.policy = choice;
      sol.iterations = round + 1;
      sol.normalization = "q(" + std::to_string(ref / O) + ", " + std::to_string(ref % O) + ") = 0";
      sol.residual = intra_residual(mdp, opts, sol.q, g, IntraMode::optimality);
      if (!(sol.residual < tol))
        throw OracleError("intra-option policy iteration converged with residual " +
                          std::to_string(sol.residual));
      return sol;
    }
  }
  throw OracleError("intra-option policy iteration did not converge");
}

OracleSolution intra_evaluation_solve(const FiniteMdp& mdp, const OptionSet& opts, const Table& mu) {
  if (mu.rows() != mdp.num_states || mu.cols() != opts.size())
    throw std::invalid_argument("intra_evaluation_solve: policy has the wrong shape");
  const IntraChain c = intra_chain(mdp, opts);
  OracleSolution sol;
  std::size_t ref = 0;
  sol.rate = intra_linear_solve(
      c,
      [&](StateId x, std::vector<Entry>& pick) {
        pick.clear();
        for (OptionId o = 0; o < c.O; ++o)
          if (mu(x, o) > 0.0) pick.push_back({o, mu(x, o)});
      },
      sol.q, ref);
  center(sol.q);
  sol.normalization = "mean of q over all (s, o) is zero";
  sol.residual = intra_residual(mdp, opts, sol.q, sol.rate, IntraMode::evaluation, &mu);
  return sol;
}

InterruptionResult interrupted_policy_rate(const FiniteMdp& mdp, const OptionSet& opts, const Table& mu) {
  const OptionModel models = exact_option_models(mdp, opts);
  InterruptionResult res;
  res.r_mu = rate_from_state(models, mu, mdp.start_state);

  const OracleSolution eval = evaluate_policy(models, mu);
  res.interrupted = opts;
  for (StateId s = 0; s < mdp.num_states; ++s) {
    double v = 0.0;
    for (OptionId o = 0; o < opts.size(); ++o) v += mu(s, o) * eval.q(s, o);
    for (OptionId o = 0; o < opts.size(); ++o) {
      const double slack = 1e-9 * (1.0 + std::abs(v));
      auto& beta = res.interrupted.options[o].termination[s];
      if (eval.q(s, o) < v - slack && beta < 1.0) {
        beta = 1.0;
        ++res.flipped;
      }
    }
  }
  const OptionModel interrupted = exact_option_models(mdp, res.interrupted);
  res.r_mu_prime = rate_from_state(interrupted, mu, mdp.start_state);
  return res;
}

int bfs_distance(const GridSpec& grid, GridPos from, GridPos to) {
  if (!grid.open(from)) throw OracleError("bfs_distance: " + to_string(from) + " is not an open cell");
  if (!grid.open(to)) throw OracleError("bfs_distance: " + to_string(to) + " is not an open cell");
  const auto dist = distance_field(grid, to, [](GridPos) { return true; });
  const int d = dist[grid.index(from)];
  if (d < 0) throw OracleError("bfs_distance: " + to_string(to) + " unreachable from " + to_string(from));
  return d;
}

namespace {

template <class Scale>
double residual_span(const OptionModel& m, const Table& q, Scale&& scale) {
  check_shapes(m, q, "q");
  std::vector<double> v(m.num_states);
  for (StateId x = 0; x < m.num_states; ++x) v[x] = q.row_max(x);
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (StateId s = 0; s < m.num_states; ++s)
    for (OptionId o = 0; o < m.num_options; ++o) {
      double tq = m.r(s, o);
      const auto row = m.mp_row(s, o);
      for (StateId x = 0; x < m.num_states; ++x) tq += row[x] * v[x];
      const double d = scale(s, o, tq - q(s, o));
      lo = std::min(lo, d);
      hi = std::max(hi, d);
    }
  return hi - lo;
}

}  // namespace

double bellman_residual_span(const OptionModel& m, const Table& q) {
  return residual_span(m, q, [](StateId, OptionId, double d) { return d; });
}

double scaled_residual_span(const OptionModel& m, const Table& q) {
  return residual_span(m, q, [&m](StateId s, OptionId o, double d) { return d / m.l(s, o); });
}

void write_q_csv(std::ostream& os, const Table& q) {
  const auto old = os.precision(17);
  os << "s,o,q\n";
  for (std::size_t s = 0; s < q.rows(); ++s)
    for (std::size_t o = 0; o < q.cols(); ++o) os << s << ',' << o << ',' << q(s, o) << '\n';
  os.precision(old);
}

}  // namespace avgopt
