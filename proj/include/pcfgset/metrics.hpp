#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "pcfgset/lexicon.hpp"
#include "pcfgset/testsuite.hpp"

namespace pcfgset {

// Both compare token lists, so whitespace differences in raw lines never count.
bool sequence_accuracy(const TokenSeq& prediction, const TokenSeq& target) noexcept;
bool pairwise_consistency(const TokenSeq& a, const TokenSeq& b) noexcept;

struct Stratum {
  std::string label;
  double score = 0.0;
  std::size_t count = 0;
};

struct Aggregate {
  double overall = 0.0;
  std::size_t count = 0;
  // Ordered by label; numeric labels compare numerically.
  std::vector<Stratum> strata;
};

// Means overall and per label. Throws LengthMismatchError when the inputs
// are not aligned.
Aggregate aggregate(std::span<const char> scores, std::span<const std::string> keys);

// Orders "2" before "10" and numbers before words.
bool natural_less(const std::string& a, const std::string& b);

// 1 - cos(u, v). Throws ZeroVectorError on a zero vector and
// LengthMismatchError on differing dimensions.
double cosine_distance(std::span<const double> u, std::span<const double> v);

class EmbeddingTable {
 public:
  explicit EmbeddingTable(std::size_t dim = 0) : dim_(dim) {}

  // Rows are `token v1 ... v_dim`; an optional first line `<vocab> <dim>` is
  // accepted.
  static EmbeddingTable read(std::istream& in);
  static EmbeddingTable load(const std::filesystem::path& path);

  void add(const std::string& token, std::vector<double> vector);
  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return vectors_.size(); }
  bool contains(const std::string& token) const { return vectors_.count(token) > 0; }
  // Throws MissingTokenError.
  const std::vector<double>& at(const std::string& token) const;

 private:
  std::size_t dim_;
  std::unordered_map<std::string, std::vector<double>> vectors_;
};

struct SynonymDistanceRow {
  std::string function;
  double synonym = 0.0;  // distance(F, F_syn)
  double other = 0.0;    // mean distance from F to the other functions
};

struct SynonymDistanceReport {
  std::vector<SynonymDistanceRow> rows;
  double mean_synonym = 0.0;
  double mean_other = 0.0;
};

// One row per mapped function, in map order. "Other" averages over
// `functions` minus F itself.
SynonymDistanceReport synonym_distance_report(const EmbeddingTable& table, const SynonymMap& map,
                                              std::span<const BaseFunction> functions = kAllFunctions);

}  // namespace pcfgset
