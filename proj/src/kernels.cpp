#include "pcfgset/kernels.hpp"

#include <unordered_set>

#include "pcfgset/error.hpp"
#include "pcfgset/interpreter.hpp"

namespace pcfgset {

namespace {

ParsedLine parse_line(const TokenSeq& line, const Lexicon& lexicon) {
  ParsedLine out;
  try {
    out.tree = parse(std::span<const std::string>(line), lexicon);
  } catch (const Error& e) {
    out.error = e.what();
  }
  return out;
}

void check_sizes(std::size_t a, std::size_t b) {
  if (a != b) throw LineCountMismatchError(a, b);
}

enum class LineFault { kNone, kParse, kRender, kTarget, kRepeatedLiteral };

struct LineCheck {
  LineFault fault = LineFault::kNone;
  std::string detail;
  std::vector<std::string> tuples;
};

LineCheck check_line(const TokenSeq& src, const TokenSeq& tgt, const ValidationOptions& options) {
  LineCheck out;
  SyntaxTree tree;
  try {
    tree = parse(std::span<const std::string>(src), *options.lexicon);
  } catch (const Error& e) {
    out.fault = LineFault::kParse;
    out.detail = e.what();
    return out;
  }
  if (render_surface(tree) != src) {
    out.fault = LineFault::kRender;
    return out;
  }
  const SymbolString* expected = nullptr;
  SymbolString computed;
  if (options.overrides) {
    auto it = options.overrides->find(join_tokens(src));
    if (it != options.overrides->end()) expected = &it->second;
  }
  if (!expected) {
    computed = evaluate(tree);
    expected = &computed;
  }
  if (*expected != tgt) {
    out.fault = LineFault::kTarget;
    out.detail = "expected '" + join_tokens(*expected) + "'";
    return out;
  }
  std::unordered_set<std::string_view> seen;
  for_each_leaf(tree, [&](const SyntaxTree& leaf) {
    for (const auto& s : leaf.symbols()) {
      if (!seen.insert(s).second && out.fault == LineFault::kNone) {
        out.fault = LineFault::kRepeatedLiteral;
        out.detail = "literal '" + s + "' repeats";
      }
    }
    if (leaf.symbols().size() >= 2) out.tuples.push_back(join_tokens(leaf.symbols()));
  });
  return out;
}

// Serial pass shared by both validators: tallies per-line faults in line
// order and checks the cross-corpus uniqueness constraints.
ValidationReport merge(std::span<const TokenSeq> src, std::vector<LineCheck>& checks,
                       const ValidationOptions& options) {
  ValidationReport r;
  r.lines = src.size();
  auto note = [&](std::size_t line, const std::string& what) {
    if (r.messages.size() < options.max_messages) {
      r.messages.push_back("line " + std::to_string(line + 1) + ": " + what);
    }
  };
  std::unordered_set<std::string> srcs;
  std::unordered_set<std::string> tuples;
  for (std::size_t i = 0; i < checks.size(); ++i) {
    auto& c = checks[i];
    switch (c.fault) {
      case LineFault::kParse:
        ++r.parse_errors;
        note(i, "parse error: " + c.detail);
        break;
      case LineFault::kRender:
        ++r.render_mismatches;
        note(i, "src does not re-render identically");
        break;
      case LineFault::kTarget:
        ++r.target_mismatches;
        note(i, "target mismatch, " + c.detail);
        break;
      case LineFault::kRepeatedLiteral:
        ++r.repeated_literals;
        note(i, c.detail);
        break;
      case LineFault::kNone:
        break;
    }
    if (!srcs.insert(join_tokens(src[i])).second) {
      ++r.duplicate_src;
      note(i, "duplicate src");
    }
    for (auto& t : c.tuples) {
      if (!tuples.insert(t).second) {
        ++r.repeated_tuples;
        note(i, "argument '" + t + "' already used");
      }
    }
  }
  return r;
}

}  // namespace

std::vector<ParsedLine> parse_all(std::span<const TokenSeq> lines, const Lexicon& lexicon) {
  std::vector<ParsedLine> out(lines.size());
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < lines.size(); ++i) out[i] = parse_line(lines[i], lexicon);
  return out;
}

std::vector<SymbolString> evaluate_all(std::span<const SyntaxTree> trees) {
  std::vector<SymbolString> out(trees.size());
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < trees.size(); ++i) out[i] = evaluate(trees[i]);
  return out;
}

std::vector<SequenceStats> stats_all(std::span<const SyntaxTree> trees) {
  std::vector<SequenceStats> out(trees.size());
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < trees.size(); ++i) out[i] = stats(trees[i]);
  return out;
}

std::vector<char> match_flags(std::span<const TokenSeq> predictions, std::span<const TokenSeq> targets) {
  check_sizes(targets.size(), predictions.size());
  std::vector<char> out(targets.size());
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < targets.size(); ++i) out[i] = predictions[i] == targets[i];
  return out;
}

ValidationReport validate_corpus(std::span<const TokenSeq> src, std::span<const TokenSeq> tgt,
                                 const ValidationOptions& options) {
  check_sizes(src.size(), tgt.size());
  std::vector<LineCheck> checks(src.size());
#pragma omp parallel for schedule(dynamic, 256)
  for (std::size_t i = 0; i < src.size(); ++i) checks[i] = check_line(src[i], tgt[i], options);
  return merge(src, checks, options);
}

namespace serial {

std::vector<ParsedLine> parse_all(std::span<const TokenSeq> lines, const Lexicon& lexicon) {
  std::vector<ParsedLine> out;
  out.reserve(lines.size());
  for (const auto& line : lines) out.push_back(parse_line(line, lexicon));
  return out;
}

std::vector<SymbolString> evaluate_all(std::span<const SyntaxTree> trees) {
  std::vector<SymbolString> out;
  out.reserve(trees.size());
  for (const auto& t : trees) out.push_back(evaluate(t));
  return out;
}

std::vector<SequenceStats> stats_all(std::span<const SyntaxTree> trees) {
  std::vector<SequenceStats> out;
  out.reserve(trees.size());
  for (const auto& t : trees) out.push_back(stats(t));
  return out;
}

std::vector<char> match_flags(std::span<const TokenSeq> predictions, std::span<const TokenSeq> targets) {
  check_sizes(targets.size(), predictions.size());
  std::vector<char> out;
  out.reserve(targets.size());
  for (std::size_t i = 0; i < targets.size(); ++i) out.push_back(predictions[i] == targets[i]);
  return out;
}

ValidationReport validate_corpus(std::span<const TokenSeq> src, std::span<const TokenSeq> tgt,
                                 const ValidationOptions& options) {
  check_sizes(src.size(), tgt.size());
  std::vector<LineCheck> checks;
  checks.reserve(src.size());
  for (std::size_t i = 0; i < src.size(); ++i) checks.push_back(check_line(src[i], tgt[i], options));
  return merge(src, checks, options);
}

}  // namespace serial

}  // namespace pcfgset
