#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "pcfgset/alphabet.hpp"
#include "pcfgset/grammar.hpp"
#include "pcfgset/rng.hpp"
#include "pcfgset/syntax_tree.hpp"

namespace pcfgset {

// Symbol-free tree structure in prefix order: a function node stores its base
// function index (0..9), a leaf stores kLeafBase + its length. Pools of
// candidate trees are kept in this form so that literals are only assigned to
// the trees that end up in a corpus.
struct TreeShape {
  static constexpr std::uint8_t kLeafBase = 16;
  std::vector<std::uint8_t> nodes;

  friend bool operator==(const TreeShape&, const TreeShape&) = default;
};

SequenceStats stats(const TreeShape& shape);
TreeShape shape_of(const SyntaxTree& tree);

struct Sample {
  std::uint64_t id = 0;
  TokenSeq src;
  SymbolString tgt;
  SyntaxTree tree;
  SequenceStats stats;
};

// Builds a sample from a tree, filling src/tgt/stats from the oracle.
Sample make_sample(std::uint64_t id, SyntaxTree tree);

struct Corpus {
  std::vector<Sample> samples;
  // Named partition by sample id; empty until split_corpus runs.
  std::map<std::string, std::vector<std::uint64_t>> splits;
  std::uint64_t seed = 0;
  GrammarParams params;

  std::vector<Sample> split(const std::string& name) const;
};

// Draws one shape. The root is always a function application; nodes at
// `max_recursion` levels are forced to leaves. Returns nullopt when the tree
// would need more than `literal_budget` literals.
std::optional<TreeShape> try_sample_shape(const GrammarParams& params, int max_recursion,
                                          std::size_t literal_budget, Rng& rng);

// Retries try_sample_shape until a shape fits the budget.
TreeShape sample_shape(const GrammarParams& params, int max_recursion, std::size_t literal_budget,
                       Rng& rng);

// Shard-parallel batch of shapes; shard k draws from rng.substream(k) so the
// result does not depend on the number of threads.
std::vector<TreeShape> sample_shapes(const GrammarParams& params, std::size_t count,
                                     const Rng& rng, int max_recursion = kDefaultMaxRecursion,
                                     std::size_t literal_budget = kStandardAlphabetSize);

// A full tree with literals that do not repeat within the sample.
SyntaxTree sample_tree(const GrammarParams& params, int max_recursion, const Alphabet& alphabet,
                       Rng& rng);

// Assigns literals to trees under the corpus constraints: no literal repeats
// within a sample, no multi-symbol leaf tuple repeats across the corpus, and
// no src sequence repeats.
class CorpusBuilder {
 public:
  CorpusBuilder(const Alphabet& alphabet, Rng rng, int attempts_per_leaf = 64);

  // Marks an existing sample's src and leaf tuples as taken.
  void reserve(const Sample& sample);

  // Returns false when literals could not be assigned or the src is a duplicate.
  bool add(const TreeShape& shape);
  // Keeps the function symbols of `tree` (synonyms included) and refills its leaves.
  bool add(SyntaxTree tree);

  std::size_t size() const noexcept { return samples_.size(); }
  const std::vector<Sample>& samples() const noexcept { return samples_; }
  std::vector<Sample> take() { return std::move(samples_); }
  void set_next_id(std::uint64_t id) noexcept { next_id_ = id; }

 private:
  bool fill(SyntaxTree& tree);

  const Alphabet& alphabet_;
  Rng rng_;
  int attempts_;
  std::uint64_t next_id_ = 0;
  std::unordered_set<std::string> used_tuples_;
  std::unordered_set<std::string> used_src_;
  std::vector<Sample> samples_;
  std::vector<char> in_sample_;
};

struct GenerateOptions {
  int max_recursion = kDefaultMaxRecursion;
  // Abort once rejected candidates exceed this multiple of n (plus a constant slack).
  double max_rejection_ratio = 10.0;
};

// n distinct samples drawn from `params`.
Corpus generate_corpus(const GrammarParams& params, std::size_t n, const Alphabet& alphabet,
                       const Rng& rng, const GenerateOptions& options = {});

struct SplitFractions {
  double train = 0.85;
  double valid = 0.05;
  double test = 0.10;
};

// Uniform random partition into train/valid/test. Valid and test sizes are
// floored; the remainder goes to train.
void split_corpus(Corpus& corpus, const SplitFractions& fractions, Rng& rng);

// For each function, one probe per base: "F <base>" for unary functions and
// "F <base1> , <base2>" for binary ones.
std::map<std::string, std::vector<Sample>> make_function_difficulty_corpora(
    std::span<const SyntaxTree> unary_bases,
    std::span<const std::pair<SyntaxTree, SyntaxTree>> binary_bases,
    std::span<const BaseFunction> functions);

// Primitive samples "fn <arg>" (or "fn <arg> , <arg>") keyed by the length of
// the long argument. For binary functions only argument `long_slot` takes the
// probed length; the other draws a length in [1, regular_max_len].
std::map<int, std::vector<Sample>> make_primitive_length_corpus(
    BaseFunction fn, std::span<const int> arg_lengths, std::size_t per_length,
    const Alphabet& alphabet, Rng& rng, int long_slot = 0, int regular_max_len = kDefaultMaxArgLen);

}  // namespace pcfgset
