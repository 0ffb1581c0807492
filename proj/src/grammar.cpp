#include "pcfgset/grammar.hpp"

#include <cmath>
#include <numeric>

#include "pcfgset/error.hpp"

namespace pcfgset {

namespace {

constexpr double kTolerance = 1e-9;

template <typename Range>
void check_distribution(const Range& r, const char* what) {
  double total = 0.0;
  for (double x : r) {
    if (!(x >= 0.0)) throw Error(std::string(what) + " has a negative or NaN component");
    total += x;
  }
  if (std::abs(total - 1.0) > kTolerance) {
    throw Error(std::string(what) + " sums to " + std::to_string(total) + ", expected 1");
  }
}

template <typename Range>
void normalise(Range& r) {
  const double total = std::accumulate(r.begin(), r.end(), 0.0);
  for (double& x : r) x /= total;
}

}  // namespace

void GrammarParams::validate() const {
  check_distribution(std::array{p_unary, p_binary, p_leaf}, "S-expansion probabilities");
  if (p_unary + p_binary <= 0.0) throw Error("at least one function expansion must have mass");
  check_distribution(unary_weights, "unary function weights");
  check_distribution(binary_weights, "binary function weights");
  if (max_arg_len < 1) throw Error("max_arg_len must be >= 1");
  if (static_cast<int>(arg_len_dist.size()) != max_arg_len) {
    throw Error("arg_len_dist must have max_arg_len entries");
  }
  check_distribution(arg_len_dist, "argument length distribution");
}

GrammarParams GrammarParams::uniform(double p_unary, double p_binary, double p_leaf, int max_arg_len) {
  GrammarParams p;
  p.p_unary = p_unary;
  p.p_binary = p_binary;
  p.p_leaf = p_leaf;
  p.unary_weights.fill(1.0 / 6.0);
  p.binary_weights.fill(1.0 / 4.0);
  p.max_arg_len = max_arg_len;
  p.arg_len_dist.assign(static_cast<std::size_t>(max_arg_len), 1.0 / max_arg_len);
  return p;
}

GrammarParams GrammarParams::defaults() {
  // Frozen output of `pcfgset naturalise --seed 42` on data/reference_distribution.csv.
  GrammarParams p;
  p.p_unary = 0.2813;
  p.p_binary = 0.2640;
  p.p_leaf = 0.4547;
  p.unary_weights = {0.1659, 0.1676, 0.1676, 0.1662, 0.1668, 0.1659};
  p.binary_weights = {0.2494, 0.2498, 0.2487, 0.2521};
  p.max_arg_len = kDefaultMaxArgLen;
  p.arg_len_dist = {0.1875, 0.2014, 0.2082, 0.2073, 0.1955};
  normalise(p.unary_weights);
  normalise(p.binary_weights);
  normalise(p.arg_len_dist);
  return p;
}

}  // namespace pcfgset
