#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "pcfgset/generator.hpp"

namespace pcfgset {

// `outer` immediately followed by `inner` in src, i.e. `inner` heads the
// first argument of `outer`.
struct HeldOutPair {
  BaseFunction outer;
  BaseFunction inner;

  friend bool operator==(const HeldOutPair&, const HeldOutPair&) = default;
};

std::string pair_name(const HeldOutPair& pair);
// "swap repeat" -> pair; throws Error on anything else.
HeldOutPair parse_pair(std::string_view text);

// swap repeat, append remove_second, repeat remove_second, append swap.
std::vector<HeldOutPair> default_held_out_pairs();

// Number of adjacent occurrences of the pair in src.
std::size_t count_pair(const TokenSeq& src, const HeldOutPair& pair);
bool contains_any_pair(const TokenSeq& src, std::span<const HeldOutPair> pairs);

struct StatsSummary {
  std::size_t count = 0;
  double mean_length = 0, mean_depth = 0, mean_functions = 0;
  int min_length = 0, min_depth = 0, min_functions = 0;
  int max_length = 0, max_depth = 0, max_functions = 0;
};

StatsSummary summarize(std::span<const Sample> samples);

struct TestSplit {
  std::vector<Sample> train;
  std::vector<Sample> test;
  // Positives that were neither trained on nor drawn for the test set.
  std::size_t discarded = 0;
};

// Train keeps every sample free of held-out adjacent pairs; test is a uniform
// draw of `test_size` samples containing at least one. Throws
// InsufficientPositivesError.
TestSplit systematicity_split(std::span<const Sample> corpus, std::span<const HeldOutPair> pairs,
                              std::size_t test_size, Rng& rng);

// Samples with at most `threshold` functions train, the rest test. Throws
// EmptySideError when either side would be empty.
TestSplit productivity_split(std::span<const Sample> corpus, int threshold = 8);

// Base function name -> synonym name.
class SynonymMap {
 public:
  SynonymMap() = default;
  // Every value must be `<key>_syn` for a base function key.
  explicit SynonymMap(std::map<std::string, std::string> entries);

  static SynonymMap defaults();  // swap, repeat, append, remove_second
  // "swap,append" -> {swap: swap_syn, append: append_syn}
  static SynonymMap for_functions(std::string_view comma_list);

  const std::map<std::string, std::string>& entries() const noexcept { return entries_; }
  const std::string* find(const std::string& base) const;

 private:
  std::map<std::string, std::string> entries_;
};

struct SubstitutionAudit {
  // Per base function.
  std::map<std::string, std::size_t> occurrences;
  std::map<std::string, std::size_t> rewritten;
  // Primitive construction: new samples per base function.
  std::map<std::string, std::size_t> added;
};

struct SubstitutivityResult {
  std::vector<Sample> train;
  SubstitutionAudit audit;
};

// Rewrites exactly floor(k/2) uniformly chosen occurrences of every mapped
// function to its synonym. Targets are untouched.
SubstitutivityResult substitutivity_equal(std::span<const Sample> train, const SynonymMap& map, Rng& rng);

// Appends round(fraction * |train|) new primitive samples "F_syn <args>" per
// mapped function. Arguments follow `params.arg_len_dist` and the corpus
// uniqueness constraints.
SubstitutivityResult substitutivity_primitive(std::span<const Sample> train, const SynonymMap& map,
                                              double fraction, const Alphabet& alphabet, Rng& rng,
                                              const GrammarParams& params = GrammarParams::defaults());

struct ConsistencyPair {
  std::uint64_t id = 0;
  TokenSeq src_base;
  TokenSeq src_syn;
  SymbolString tgt;
};

struct ConsistencyPairs {
  std::vector<ConsistencyPair> pairs;
  // Samples without any mapped function.
  std::size_t skipped = 0;
};

ConsistencyPairs make_consistency_pairs(std::span<const Sample> testset, const SynonymMap& map);

// A function pair that, as parent and first child, is read as `remapped`.
struct ExceptionRule {
  HeldOutPair pair;
  HeldOutPair remapped;
};

// reverse echo -> echo copy, prepend remove_first -> remove_second append,
// echo remove_first -> copy append, prepend reverse -> remove_second echo.
std::vector<ExceptionRule> default_exception_rules();

// Evaluation with every matched parent/first-child pair interpreted under its
// remapped functions. Matching runs top-down; a node consumed as the child of a
// match is not considered as the parent of another.
SymbolString exception_evaluate(const SyntaxTree& tree, std::span<const ExceptionRule> rules);

struct ExceptionEntry {
  std::uint64_t id = 0;
  TokenSeq src;
  SymbolString original_tgt;
  SymbolString exception_tgt;
  HeldOutPair pair;
};

struct ExceptionAudit {
  HeldOutPair pair;
  std::size_t outer_occurrences = 0;
  std::size_t inner_occurrences = 0;
  std::size_t target = 0;       // round(percentage * min occurrence)
  std::size_t from_train = 0;   // existing samples turned into exceptions
  std::size_t synthesised = 0;  // fresh samples added to reach the target
  std::size_t removed = 0;      // pair-bearing samples dropped from train
};

struct ExceptionResult {
  std::vector<Sample> train;
  std::vector<ExceptionEntry> exceptions;
  std::vector<ExceptionAudit> audit;
};

// Every train sample that contains a rule pair either becomes an exception or
// is dropped, so the pair never appears with its compositional meaning. Per
// rule, k = round(percentage * min(occurrences of the two functions in train))
// samples carry the exception target.
ExceptionResult exceptions_apply(std::span<const Sample> train, std::span<const ExceptionRule> rules,
                                 double percentage, const Alphabet& alphabet, Rng& rng,
                                 const GrammarParams& params = GrammarParams::defaults());

// Bottom-up evaluation order for the localism test. Step i (0-based) is
// rendered with `<rj>` placeholders (1-based) standing for the outputs of
// earlier steps.
struct UnrollStep {
  std::vector<int> path;  // child indices from the root
  TokenSeq src;
};

struct UnrollPlan {
  std::vector<UnrollStep> steps;
};

std::string placeholder(std::size_t step_index);

UnrollPlan build_unroll_plan(const SyntaxTree& tree);

// Substitutes the outputs of earlier steps into step `index`.
TokenSeq instantiate_step(const UnrollPlan& plan, std::size_t index, std::span<const TokenSeq> outputs);

// Runs every step through `model`; returns the output of the last step.
TokenSeq execute_plan(const UnrollPlan& plan, const std::function<TokenSeq(const TokenSeq&)>& model);

}  // namespace pcfgset
