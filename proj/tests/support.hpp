#pragma once

#include <random>
#include <string>
#include <vector>

#include "pcfgset/alphabet.hpp"
#include "pcfgset/lexicon.hpp"
#include "pcfgset/syntax_tree.hpp"

namespace pcfgset::testing {

// Random tree generator for property tests, independent of the grammar sampler.
class RandomTrees {
 public:
  explicit RandomTrees(unsigned seed) : rng_(seed) {}

  SymbolString symbols(int max_len = 6) {
    std::uniform_int_distribution<int> len(1, max_len);
    std::uniform_int_distribution<std::size_t> pick(0, alphabet_.size() - 1);
    SymbolString out(static_cast<std::size_t>(len(rng_)));
    for (auto& s : out) s = alphabet_[pick(rng_)];
    return out;
  }

  SyntaxTree tree(int max_depth = 6) {
    std::uniform_int_distribution<int> choice(0, 2);
    const int c = max_depth <= 0 ? 2 : choice(rng_);
    if (c == 2) return SyntaxTree::leaf(symbols(4));
    std::uniform_int_distribution<std::size_t> fn(0, kAllFunctions.size() - 1);
    const BaseFunction f = kAllFunctions[fn(rng_)];
    std::vector<SyntaxTree> args;
    for (int i = 0; i < arity(f); ++i) args.push_back(tree(max_depth - 1));
    return SyntaxTree::apply(f, std::move(args));
  }

  // Root is always an application.
  SyntaxTree composed(int max_depth = 6) {
    for (;;) {
      SyntaxTree t = tree(max_depth);
      if (!t.is_leaf()) return t;
    }
  }

  std::mt19937& engine() { return rng_; }

 private:
  std::mt19937 rng_;
  Alphabet alphabet_;
};

inline SymbolString syms(const std::string& text) { return split_tokens(text); }

}  // namespace pcfgset::testing
