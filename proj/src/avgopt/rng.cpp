#include "avgopt/rng.hpp"

#include <numeric>
#include <stdexcept>

namespace avgopt {

std::size_t Rng::below(std::size_t n) {
  if (n == 0) throw std::invalid_argument("Rng::below: empty range");
  auto k = static_cast<std::size_t>(uniform() * static_cast<double>(n));
  return k < n ? k : n - 1;
}

std::size_t Rng::categorical(std::span<const double> weights) {
  return categorical(weights, std::accumulate(weights.begin(), weights.end(), 0.0));
}

std::size_t Rng::categorical(std::span<const double> weights, double total) {
  if (weights.empty() || !(total > 0.0))
    throw std::invalid_argument("Rng::categorical: weights must have positive mass");
  const double u = uniform() * total;
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    acc += weights[i];
    last_positive = i;
    if (u < acc) return i;
  }
  // Rounding can leave u just above the accumulated sum.
  return last_positive;
}

}  // namespace avgopt
