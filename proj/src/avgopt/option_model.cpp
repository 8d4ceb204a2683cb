#include "avgopt/option_model.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace avgopt {

OptionModel OptionModel::zeros(std::size_t num_states, std::size_t num_options, double ml_init) {
  OptionModel m;
  m.num_states = num_states;
  m.num_options = num_options;
  m.mp.assign(num_states * num_options * num_states, 0.0);
  m.mr.assign(num_states * num_options, 0.0);
  m.ml.assign(num_states * num_options, ml_init);
  return m;
}

namespace {

template <class StepFn>
std::size_t model_update_impl(OptionModel& m, const Transition& t, double behavior_prob,
                              const OptionSet& opts, StepFn&& step_for) {
  if (!(behavior_prob > 0.0))
    throw std::invalid_argument("model update: behaviour probability of the action is zero");
  if (m.num_options != opts.size()) throw std::invalid_argument("model update: option count mismatch");
  const StateId s = t.state;
  const StateId next = t.next_state;
  const std::size_t n = m.num_states;
  thread_local std::vector<double> row;
  std::size_t updated = 0;
  for (OptionId o = 0; o < opts.size(); ++o) {
    const double pi = opts[o].pi(s, t.action);
    if (pi == 0.0) continue;
    const double step = step_for(o, pi / behavior_prob);
    const double b = opts[o].beta(next);
    const double cont = 1.0 - b;

    // Row S and row S' coincide when S' = S; build the new row from a copy.
    const auto from = m.mp_row(next, o);
    row.assign(from.begin(), from.end());
    auto to = m.mp_row(s, o);
    for (StateId x = 0; x < n; ++x) {
      const double target = (x == next ? b : 0.0) + cont * row[x];
      row[x] = to[x] + step * (target - to[x]);
    }
    std::copy(row.begin(), row.end(), to.begin());

    const double r_target = t.reward + cont * m.r(next, o);
    const double l_target = 1.0 + cont * m.l(next, o);
    m.r(s, o) += step * (r_target - m.r(s, o));
    m.l(s, o) += step * (l_target - m.l(s, o));
    ++updated;
  }
  return updated;
}

}  // namespace

std::size_t model_learning_update(OptionModel& m, const Transition& t, double behavior_prob,
                                  const OptionSet& opts, double alpha) {
  return model_update_impl(m, t, behavior_prob, opts, [alpha](OptionId, double rho) { return alpha * rho; });
}

std::size_t model_averaging_update(OptionModel& m, const Transition& t, double behavior_prob,
                                   const OptionSet& opts, std::vector<double>& weight) {
  if (weight.size() != m.mp.size() / std::max<std::size_t>(1, m.num_states))
    throw std::invalid_argument("model update: weight table has the wrong size");
  return model_update_impl(m, t, behavior_prob, opts, [&](OptionId o, double rho) {
    double& w = weight[m.pair(t.state, o)];
    w += rho;
    return rho / w;
  });
}

std::size_t model_learning_update(OptionModel& m, const Transition& t, OptionId executing,
                                  const OptionSet& opts, double alpha) {
  if (executing >= opts.size()) throw std::out_of_range("executing option out of range");
  return model_learning_update(m, t, opts[executing].pi(t.state, t.action), opts, alpha);
}

namespace {

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

}  // namespace

ModelError model_error(const OptionModel& m, const OptionModel& exact) {
  if (m.num_states != exact.num_states || m.num_options != exact.num_options ||
      m.mp.size() != exact.mp.size() || m.mr.size() != exact.mr.size() ||
      m.ml.size() != exact.ml.size())
    throw std::invalid_argument("model_error: models have different shapes");
  return {max_abs_diff(m.mp, exact.mp), max_abs_diff(m.mr, exact.mr), max_abs_diff(m.ml, exact.ml)};
}

void write_model_csv(std::ostream& os, const OptionModel& m) {
  const auto old_precision = os.precision(17);
  os << "part,s,o,x,value\n";
  for (StateId s = 0; s < m.num_states; ++s)
    for (OptionId o = 0; o < m.num_options; ++o)
      for (StateId x = 0; x < m.num_states; ++x)
        os << "mp," << s << ',' << o << ',' << x << ',' << m.p(s, o, x) << '\n';
  for (StateId s = 0; s < m.num_states; ++s)
    for (OptionId o = 0; o < m.num_options; ++o) os << "mr," << s << ',' << o << ",," << m.r(s, o) << '\n';
  for (StateId s = 0; s < m.num_states; ++s)
    for (OptionId o = 0; o < m.num_options; ++o) os << "ml," << s << ',' << o << ",," << m.l(s, o) << '\n';
  os.precision(old_precision);
}

OptionModel read_model_csv(std::istream& is) {
  struct Entry {
    std::string part;
    std::size_t s, o, x;
    double value;
  };
  std::vector<Entry> entries;
  std::string line;
  std::size_t line_no = 0;
  std::size_t states = 0, options = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line_no == 1) {
      if (line != "part,s,o,x,value") throw std::runtime_error("model CSV: unexpected header");
      continue;
    }
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() == 4 && line.back() == ',') fields.push_back("");
    if (fields.size() != 5)
      throw std::runtime_error("model CSV line " + std::to_string(line_no) + ": expected 5 fields");
    try {
      Entry e{fields[0], std::stoul(fields[1]), std::stoul(fields[2]),
              fields[3].empty() ? 0 : std::stoul(fields[3]), std::stod(fields[4])};
      if (e.part != "mp" && e.part != "mr" && e.part != "ml")
        throw std::runtime_error("unknown part '" + e.part + "'");
      states = std::max({states, e.s + 1, e.part == "mp" ? e.x + 1 : 0});
      options = std::max(options, e.o + 1);
      entries.push_back(std::move(e));
    } catch (const std::logic_error&) {
      throw std::runtime_error("model CSV line " + std::to_string(line_no) + ": bad number");
    }
  }
  OptionModel m = OptionModel::zeros(states, options);
  for (const auto& e : entries) {
    if (e.part == "mp") m.p(e.s, e.o, e.x) = e.value;
    else if (e.part == "mr") m.r(e.s, e.o) = e.value;
    else m.l(e.s, e.o) = e.value;
  }
  return m;
}

}  // namespace avgopt
