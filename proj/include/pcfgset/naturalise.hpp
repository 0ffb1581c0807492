#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <vector>

#include "pcfgset/generator.hpp"

namespace pcfgset {

// The two structural features matched against the natural reference corpus.
struct Features {
  int length = 0;
  int depth = 0;

  friend auto operator<=>(const Features&, const Features&) = default;
};

// Joint (length, depth) histogram of a natural-language reference corpus.
class DistributionSpec {
 public:
  struct Entry {
    int length = 0;
    int depth = 0;
    std::uint64_t count = 0;
  };

  DistributionSpec() = default;
  explicit DistributionSpec(std::vector<Entry> entries);

  // CSV with header "length,depth,count".
  static DistributionSpec read_csv(std::istream& in);
  static DistributionSpec load(const std::string& path);
  void write_csv(std::ostream& out) const;

  const std::vector<Entry>& entries() const noexcept { return entries_; }
  std::uint64_t total() const noexcept { return total_; }

 private:
  std::vector<Entry> entries_;
  std::uint64_t total_ = 0;
};

struct PartitionConfig {
  int length_increment = 1;
  int depth_increment = 1;

  friend bool operator==(const PartitionConfig&, const PartitionConfig&) = default;
};

// {1,2,3} x {1,2,3}, length increment varying slowest.
std::vector<PartitionConfig> default_increment_grid();

// Increments the pipeline selects when fitting the default parameters to the
// shipped reference distribution; used when no fit is supplied.
inline constexpr PartitionConfig kDefaultPartitionConfig{1, 3};

struct PartitioningVector {
  int length = 0;
  int depth = 0;

  friend auto operator<=>(const PartitioningVector&, const PartitioningVector&) = default;
};

PartitioningVector partitioning_vector(const Features& f, const PartitionConfig& config);

std::vector<Features> extract_features(std::span<const Sample> samples);
std::vector<Features> extract_features(std::span<const TreeShape> shapes);

std::map<PartitioningVector, std::vector<std::size_t>> partition(std::span<const Features> features,
                                                                 const PartitionConfig& config);

// Indices (ascending) of the members of d_r kept so that every cell's size is
// proportional to the matching cell of d_n, anchored at the largest natural cell.
std::vector<std::size_t> subsample_to_match(std::span<const Features> d_r, const DistributionSpec& d_n,
                                            const PartitionConfig& config, Rng& rng);
Corpus subsample_to_match(const Corpus& d_r, const DistributionSpec& d_n, const PartitionConfig& config,
                          Rng& rng);

struct GaussianFit {
  std::array<double, 2> mean{};
  std::array<std::array<double, 2>, 2> cov{};
};

// Sample mean and unbiased covariance; throws DegenerateCovarianceError.
GaussianFit fit_gaussian(std::span<const Features> features);
GaussianFit fit_gaussian(const DistributionSpec& spec);

// KL(p || q) between bivariate Gaussians; throws SingularCovarianceError.
double kl_gaussian(const GaussianFit& p, const GaussianFit& q);

struct IncrementChoice {
  PartitionConfig config;
  std::vector<std::size_t> selected;
  double kl = 0.0;
  // KL per candidate, +inf where the candidate could not be evaluated.
  std::vector<double> candidate_kls;
};

// Tries every candidate increment and keeps the subsample whose Gaussian fit is
// closest in KL to the natural one; ties go to the earlier candidate.
IncrementChoice select_increments(std::span<const Features> d_r, const DistributionSpec& d_n,
                                  std::span<const PartitionConfig> candidates, const Rng& rng);

// S-expansion statistics. The root of every sample is forced to be a function,
// so its unary/binary choice is tallied apart from the free choices.
struct ExpansionCounts {
  std::uint64_t root_unary = 0;
  std::uint64_t root_binary = 0;
  std::uint64_t unary = 0;
  std::uint64_t binary = 0;
  std::uint64_t leaf = 0;
  std::array<std::uint64_t, 6> unary_functions{};
  std::array<std::uint64_t, 4> binary_functions{};
  std::vector<std::uint64_t> leaf_lengths;  // index k - 1

  void add(const SyntaxTree& tree);
  void add(const TreeShape& shape);

  std::uint64_t total_unary() const noexcept { return root_unary + unary; }
  std::uint64_t total_binary() const noexcept { return root_binary + binary; }
};

// Maximum-likelihood parameters with add-one smoothing of zero counts.
GrammarParams mle_estimate(const ExpansionCounts& counts, int max_arg_len = kDefaultMaxArgLen);
GrammarParams mle_estimate(std::span<const Sample> samples, int max_arg_len = kDefaultMaxArgLen);
GrammarParams mle_estimate(std::span<const TreeShape> shapes, int max_arg_len = kDefaultMaxArgLen);

// Every instance is drawn under its own random parameters: symmetric
// Dirichlet(1) over the S expansions and over argument lengths, uniform
// function weights. Trees needing more than `literal_budget` literals are
// redrawn; a parameter draw that keeps failing is replaced by a fresh one.
std::vector<TreeShape> random_probability_shapes(std::size_t n, const Rng& rng,
                                                 int max_recursion = kDefaultMaxRecursion,
                                                 int max_arg_len = kDefaultMaxArgLen,
                                                 std::size_t literal_budget = kStandardAlphabetSize);
Corpus random_probability_sample(std::size_t n, const Alphabet& alphabet, const Rng& rng);

struct NaturaliseOptions {
  std::vector<PartitionConfig> grid = default_increment_grid();
  std::size_t random_sample_size = 200000;
  std::size_t regenerate_size = 200000;
  double epsilon = 1e-3;
  int max_iters = 5;
  int max_recursion = kDefaultMaxRecursion;
};

struct NaturaliseIteration {
  int iteration = 0;
  PartitionConfig config;
  double kl = 0.0;
  std::size_t selected = 0;
  // False for an iteration that did not improve on the previous one; its
  // parameters are discarded and the loop stops.
  bool accepted = true;
};

struct NaturaliseResult {
  GrammarParams params;
  PartitionConfig config;
  double initial_kl = 0.0;
  double final_kl = 0.0;
  std::vector<NaturaliseIteration> trace;
  // Matched subsample of the last accepted iteration.
  std::vector<TreeShape> matched;
};

NaturaliseResult naturalise_pipeline(const DistributionSpec& d_n, const NaturaliseOptions& options,
                                     const Rng& rng);

// Corpus of n distinct samples drawn from `params` and subsampled so that its
// (length, depth) histogram follows d_n.
Corpus generate_naturalised_corpus(const GrammarParams& params, const DistributionSpec& d_n,
                                   const PartitionConfig& config, std::size_t n, const Alphabet& alphabet,
                                   const Rng& rng, int max_recursion = kDefaultMaxRecursion);

}  // namespace pcfgset
