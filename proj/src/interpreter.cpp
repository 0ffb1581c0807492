#include "pcfgset/interpreter.hpp"

#include <algorithm>

#include "pcfgset/error.hpp"

namespace pcfgset {

SymbolString apply_function(BaseFunction fn, std::span<const SymbolString> args) {
  if (static_cast<int>(args.size()) != arity(fn)) {
    throw ArityMismatchError(std::string(base_name(fn)) + " expects " + std::to_string(arity(fn)) +
                             " argument(s), got " + std::to_string(args.size()));
  }
  for (const auto& a : args) {
    if (a.empty()) throw EmptyArgumentError(std::string(base_name(fn)) + " received an empty argument");
  }
  const SymbolString& x = args[0];
  switch (fn) {
    case BaseFunction::kCopy:
      return x;
    case BaseFunction::kReverse:
      return SymbolString(x.rbegin(), x.rend());
    case BaseFunction::kShift: {
      SymbolString out(x.begin() + 1, x.end());
      out.push_back(x.front());
      return out;
    }
    case BaseFunction::kEcho: {
      SymbolString out = x;
      out.push_back(x.back());
      return out;
    }
    case BaseFunction::kSwap: {
      SymbolString out = x;
      std::swap(out.front(), out.back());
      return out;
    }
    case BaseFunction::kRepeat: {
      SymbolString out = x;
      out.insert(out.end(), x.begin(), x.end());
      return out;
    }
    case BaseFunction::kAppend: {
      SymbolString out = x;
      out.insert(out.end(), args[1].begin(), args[1].end());
      return out;
    }
    case BaseFunction::kPrepend: {
      SymbolString out = args[1];
      out.insert(out.end(), x.begin(), x.end());
      return out;
    }
    case BaseFunction::kRemoveFirst:
      return args[1];
    case BaseFunction::kRemoveSecond:
      return x;
  }
  return x;
}

SymbolString evaluate(const SyntaxTree& tree) {
  if (tree.is_leaf()) return tree.symbols();
  std::vector<SymbolString> values;
  values.reserve(tree.args().size());
  for (const auto& child : tree.args()) values.push_back(evaluate(child));
  return apply_function(tree.function(), values);
}

}  // namespace pcfgset
