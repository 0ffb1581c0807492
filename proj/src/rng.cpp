#include "pcfgset/rng.hpp"

#include <numeric>

namespace pcfgset {

std::size_t Rng::categorical(const std::vector<double>& weights) {
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  double u = uniform() * total;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (u < weights[i]) return i;
    u -= weights[i];
  }
  // Rounding left u at the top edge; return the last non-zero bin.
  for (std::size_t i = weights.size(); i-- > 0;) {
    if (weights[i] > 0.0) return i;
  }
  return weights.size() - 1;
}

std::vector<double> Rng::dirichlet(std::size_t dim, double alpha) {
  std::gamma_distribution<double> gamma(alpha, 1.0);
  std::vector<double> out(dim);
  double total = 0.0;
  do {
    total = 0.0;
    for (auto& x : out) {
      x = gamma(engine_);
      total += x;
    }
  } while (total <= 0.0);
  for (auto& x : out) x /= total;
  return out;
}

}  // namespace pcfgset
