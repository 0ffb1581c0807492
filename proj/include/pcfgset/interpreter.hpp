#pragma once

#include <span>

#include "pcfgset/syntax_tree.hpp"

namespace pcfgset {

// Applies one interpretation function to already-evaluated arguments.
// Throws ArityMismatchError or EmptyArgumentError.
SymbolString apply_function(BaseFunction fn, std::span<const SymbolString> args);

inline SymbolString apply_function(const FunctionSymbol& fn, std::span<const SymbolString> args) {
  return apply_function(fn.base, args);
}

// Bottom-up meaning of a sequence.
SymbolString evaluate(const SyntaxTree& tree);

}  // namespace pcfgset
