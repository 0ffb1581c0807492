#pragma once

#include <array>
#include <vector>

#include "pcfgset/lexicon.hpp"

namespace pcfgset {

inline constexpr int kDefaultMaxArgLen = 5;
inline constexpr int kDefaultMaxRecursion = 25;

// Production probabilities of the input grammar.
struct GrammarParams {
  // S -> F_U S | F_B S , S | X
  double p_unary = 0.0;
  double p_binary = 0.0;
  double p_leaf = 0.0;
  std::array<double, 6> unary_weights{};   // indexed like kUnaryFunctions
  std::array<double, 4> binary_weights{};  // indexed like kBinaryFunctions
  // arg_len_dist[k - 1] = P(leaf has k symbols), k in 1..max_arg_len.
  std::vector<double> arg_len_dist;
  int max_arg_len = kDefaultMaxArgLen;

  // Throws pcfgset::Error describing the first violated invariant.
  void validate() const;

  double weight(BaseFunction fn) const {
    return arity(fn) == 1 ? unary_weights[class_index(fn)] : binary_weights[class_index(fn)];
  }

  // Parameters fitted to the shipped reference distribution.
  static GrammarParams defaults();
  // Uniform function weights and argument lengths with the given S-expansion split.
  static GrammarParams uniform(double p_unary, double p_binary, double p_leaf,
                               int max_arg_len = kDefaultMaxArgLen);

  friend bool operator==(const GrammarParams&, const GrammarParams&) = default;
};

}  // namespace pcfgset
