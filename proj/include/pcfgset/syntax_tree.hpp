#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pcfgset/lexicon.hpp"

namespace pcfgset {

using SymbolString = std::vector<std::string>;

// Function applications over literal-run leaves. A node is either a leaf
// (non-empty symbol list) or an application with exactly `arity` children.
class SyntaxTree {
 public:
  static SyntaxTree leaf(SymbolString symbols);
  static SyntaxTree apply(FunctionSymbol fn, std::vector<SyntaxTree> args);
  static SyntaxTree apply(BaseFunction fn, std::vector<SyntaxTree> args) {
    return apply(FunctionSymbol::of(fn), std::move(args));
  }

  bool is_leaf() const noexcept { return !fn_.has_value(); }

  const FunctionSymbol& function() const { return *fn_; }
  void set_function(FunctionSymbol fn);

  const std::vector<SyntaxTree>& args() const noexcept { return args_; }
  std::vector<SyntaxTree>& args() noexcept { return args_; }

  const SymbolString& symbols() const noexcept { return symbols_; }
  SymbolString& symbols() noexcept { return symbols_; }

  friend bool operator==(const SyntaxTree&, const SyntaxTree&) = default;

 private:
  std::optional<FunctionSymbol> fn_;
  SymbolString symbols_;
  std::vector<SyntaxTree> args_;
};

struct SequenceStats {
  int length = 0;
  int depth = 0;
  int num_functions = 0;

  friend bool operator==(const SequenceStats&, const SequenceStats&) = default;
};

SyntaxTree parse(std::span<const Token> tokens, const Lexicon& lexicon = Lexicon::standard());
SyntaxTree parse(std::string_view text, const Lexicon& lexicon = Lexicon::standard());
SyntaxTree parse(std::span<const std::string> pieces, const Lexicon& lexicon = Lexicon::standard());

std::vector<Token> render(const SyntaxTree& tree);
TokenSeq render_surface(const SyntaxTree& tree);
std::string render_text(const SyntaxTree& tree);

SequenceStats stats(const SyntaxTree& tree);

// Calls fn(node) for every application node in prefix order.
template <typename Fn>
void for_each_apply(const SyntaxTree& tree, Fn&& fn) {
  if (tree.is_leaf()) return;
  fn(tree);
  for (const auto& child : tree.args()) for_each_apply(child, fn);
}

template <typename Fn>
void for_each_leaf(const SyntaxTree& tree, Fn&& fn) {
  if (tree.is_leaf()) {
    fn(tree);
    return;
  }
  for (const auto& child : tree.args()) for_each_leaf(child, fn);
}

template <typename Fn>
void for_each_leaf_mut(SyntaxTree& tree, Fn&& fn) {
  if (tree.is_leaf()) {
    fn(tree);
    return;
  }
  for (auto& child : tree.args()) for_each_leaf_mut(child, fn);
}

}  // namespace pcfgset
