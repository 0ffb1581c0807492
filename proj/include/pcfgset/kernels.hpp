#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "pcfgset/lexicon.hpp"
#include "pcfgset/syntax_tree.hpp"

// Batch kernels over whole corpora. The default versions are OpenMP-parallel;
// the ones in `serial` are straightforward loops kept as the reference the
// parallel versions are tested and benchmarked against.
namespace pcfgset {

// Per-line outcome of parsing a token sequence.
struct ParsedLine {
  std::optional<SyntaxTree> tree;
  std::string error;
};

std::vector<ParsedLine> parse_all(std::span<const TokenSeq> lines, const Lexicon& lexicon = Lexicon::standard());
std::vector<SymbolString> evaluate_all(std::span<const SyntaxTree> trees);
std::vector<SequenceStats> stats_all(std::span<const SyntaxTree> trees);
// 1 where prediction i equals target i token for token.
std::vector<char> match_flags(std::span<const TokenSeq> predictions, std::span<const TokenSeq> targets);

struct ValidationOptions {
  const Lexicon* lexicon = &Lexicon::standard();
  // Joined src -> expected tgt for lines whose target deliberately departs from
  // the compositional oracle (exception samples).
  const std::unordered_map<std::string, SymbolString>* overrides = nullptr;
  std::size_t max_messages = 20;
};

struct ValidationReport {
  std::size_t lines = 0;
  std::size_t parse_errors = 0;
  std::size_t render_mismatches = 0;
  std::size_t target_mismatches = 0;
  std::size_t repeated_literals = 0;
  std::size_t repeated_tuples = 0;
  std::size_t duplicate_src = 0;
  std::vector<std::string> messages;

  bool ok() const noexcept {
    return parse_errors + render_mismatches + target_mismatches + repeated_literals + repeated_tuples +
               duplicate_src ==
           0;
  }
};

// Re-parses every src, re-renders it, re-evaluates the target and re-checks
// the corpus uniqueness constraints. Throws LineCountMismatchError.
ValidationReport validate_corpus(std::span<const TokenSeq> src, std::span<const TokenSeq> tgt,
                                 const ValidationOptions& options = {});

namespace serial {

std::vector<ParsedLine> parse_all(std::span<const TokenSeq> lines, const Lexicon& lexicon = Lexicon::standard());
std::vector<SymbolString> evaluate_all(std::span<const SyntaxTree> trees);
std::vector<SequenceStats> stats_all(std::span<const SyntaxTree> trees);
std::vector<char> match_flags(std::span<const TokenSeq> predictions, std::span<const TokenSeq> targets);
ValidationReport validate_corpus(std::span<const TokenSeq> src, std::span<const TokenSeq> tgt,
                                 const ValidationOptions& options = {});

}  // namespace serial

}  // namespace pcfgset
