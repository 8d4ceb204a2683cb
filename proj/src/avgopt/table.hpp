#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

namespace avgopt {

/// Dense row-major (state, option) table. Used for option values, expected
/// lengths, and stochastic policies over options.
class Table {
 public:
  Table() = default;
  Table(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::vector<double>& values() { return data_; }
  const std::vector<double>& values() const { return data_; }

  double sum() const { return std::accumulate(data_.begin(), data_.end(), 0.0); }

  double row_max(std::size_t r) const {
    auto v = row(r);
    return *std::max_element(v.begin(), v.end());
  }

  // Lowest index among maximisers.
  std::size_t row_argmax(std::size_t r) const {
    auto v = row(r);
    return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
  }

  friend bool operator==(const Table&, const Table&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Deterministic policy over options: one option index per state.
using DeterministicPolicy = std::vector<std::size_t>;

/// One-hot policy table for a deterministic policy.
inline Table to_table(const DeterministicPolicy& mu, std::size_t num_options) {
  Table t(mu.size(), num_options);
  for (std::size_t s = 0; s < mu.size(); ++s) t(s, mu[s]) = 1.0;
  return t;
}

/// Greedy (lowest-index argmax) policy with respect to q.
inline DeterministicPolicy greedy_policy(const Table& q) {
  DeterministicPolicy mu(q.rows());
  for (std::size_t s = 0; s < q.rows(); ++s) mu[s] = q.row_argmax(s);
  return mu;
}

}  // namespace avgopt
