#include "pcfgset/naturalise.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "pcfgset/error.hpp"

namespace pcfgset {

namespace {

constexpr std::size_t kShardSize = 2048;

using Matrix2 = std::array<std::array<double, 2>, 2>;

double det(const Matrix2& m) { return m[0][0] * m[1][1] - m[0][1] * m[1][0]; }

void check_covariance(const GaussianFit& g) {
  const double d = det(g.cov);
  if (!(d > 0.0) || !(g.cov[0][0] > 0.0) || !(g.cov[1][1] > 0.0)) {
    throw SingularCovarianceError("covariance is not positive definite");
  }
}

GaussianFit finish_fit(double n, std::array<double, 2> sum, Matrix2 cross) {
  GaussianFit g;
  g.mean = {sum[0] / n, sum[1] / n};
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      g.cov[i][j] = (cross[i][j] - n * g.mean[i] * g.mean[j]) / (n - 1.0);
    }
  }
  const double d = det(g.cov);
  const double scale = g.cov[0][0] * g.cov[1][1];
  if (!(g.cov[0][0] > 0.0) || !(g.cov[1][1] > 0.0) || !(d > 1e-12 * scale)) {
    throw DegenerateCovarianceError("features have no spread in at least one direction");
  }
  return g;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::uint64_t parse_count(const std::string& s, std::size_t line) {
  if (s.empty() || !std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    throw Error("distribution spec line " + std::to_string(line) + ": '" + s + "' is not a non-negative integer");
  }
  return std::stoull(s);
}

void count_tree(const SyntaxTree& t, bool root, ExpansionCounts& c) {
  if (t.is_leaf()) {
    const std::size_t len = t.symbols().size();
    if (c.leaf_lengths.size() < len) c.leaf_lengths.resize(len, 0);
    c.leaf_lengths[len - 1] += 1;
    c.leaf += 1;
    return;
  }
  const BaseFunction fn = t.function().base;
  if (arity(fn) == 1) {
    (root ? c.root_unary : c.unary) += 1;
    c.unary_functions[class_index(fn)] += 1;
  } else {
    (root ? c.root_binary : c.binary) += 1;
    c.binary_functions[class_index(fn)] += 1;
  }
  for (const auto& a : t.args()) count_tree(a, false, c);
}

template <std::size_t N>
std::array<double, N> smoothed(const std::array<std::uint64_t, N>& counts) {
  std::array<double, N> out{};
  double total = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    out[i] = counts[i] == 0 ? 1.0 : static_cast<double>(counts[i]);
    total += out[i];
  }
  for (auto& x : out) x /= total;
  return out;
}

double kl_to(const std::vector<Features>& d_r, const std::vector<std::size_t>& selected, const GaussianFit& q) {
  std::vector<Features> chosen;
  chosen.reserve(selected.size());
  for (auto i : selected) chosen.push_back(d_r[i]);
  return kl_gaussian(fit_gaussian(chosen), q);
}

}  // namespace

DistributionSpec::DistributionSpec(std::vector<Entry> entries) : entries_(std::move(entries)) {
  std::set<std::pair<int, int>> keys;
  for (const auto& e : entries_) {
    if (e.length < 0 || e.depth < 0) throw Error("distribution spec features must be non-negative");
    if (e.count < 1) throw Error("distribution spec counts must be >= 1");
    if (!keys.emplace(e.length, e.depth).second) {
      throw Error("duplicate (length, depth) key (" + std::to_string(e.length) + ", " + std::to_string(e.depth) + ")");
    }
    total_ += e.count;
  }
  if (entries_.empty()) throw Error("distribution spec is empty");
}

DistributionSpec DistributionSpec::read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error("distribution spec is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "length,depth,count") throw Error("distribution spec header must be 'length,depth,count'");
  std::vector<Entry> entries;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != 3) throw Error("distribution spec line " + std::to_string(lineno) + ": expected 3 fields");
    entries.push_back({static_cast<int>(parse_count(cells[0], lineno)), static_cast<int>(parse_count(cells[1], lineno)),
                       parse_count(cells[2], lineno)});
  }
  return DistributionSpec(std::move(entries));
}

DistributionSpec DistributionSpec::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open distribution spec '" + path + "'");
  return read_csv(in);
}

void DistributionSpec::write_csv(std::ostream& out) const {
  out << "length,depth,count\n";
  for (const auto& e : entries_) out << e.length << ',' << e.depth << ',' << e.count << '\n';
}

std::vector<PartitionConfig> default_increment_grid() {
  std::vector<PartitionConfig> grid;
  for (int l = 1; l <= 3; ++l)
    for (int d = 1; d <= 3; ++d) grid.push_back({l, d});
  return grid;
}

PartitioningVector partitioning_vector(const Features& f, const PartitionConfig& c) {
  if (c.length_increment < 1 || c.depth_increment < 1) throw Error("feature increments must be >= 1");
  return {f.length / c.length_increment, f.depth / c.depth_increment};
}

std::vector<Features> extract_features(std::span<const Sample> samples) {
  std::vector<Features> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back({s.stats.length, s.stats.depth});
  return out;
}

std::vector<Features> extract_features(std::span<const TreeShape> shapes) {
  std::vector<Features> out(shapes.size());
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    const auto s = stats(shapes[i]);
    out[i] = {s.length, s.depth};
  }
  return out;
}

std::map<PartitioningVector, std::vector<std::size_t>> partition(std::span<const Features> features,
                                                                 const PartitionConfig& config) {
  std::map<PartitioningVector, std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < features.size(); ++i) out[partitioning_vector(features[i], config)].push_back(i);
  return out;
}

std::vector<std::size_t> subsample_to_match(std::span<const Features> d_r, const DistributionSpec& d_n,
                                            const PartitionConfig& config, Rng& rng) {
  std::map<PartitioningVector, std::uint64_t> natural;
  for (const auto& e : d_n.entries()) natural[partitioning_vector({e.length, e.depth}, config)] += e.count;
  // Largest natural cell; map order makes the lexicographically smallest win ties.
  auto anchor = natural.begin();
  for (auto it = natural.begin(); it != natural.end(); ++it) {
    if (it->second > anchor->second) anchor = it;
  }
  auto cells = partition(d_r, config);
  auto r_max = cells.find(anchor->first);
  if (r_max == cells.end() || r_max->second.empty()) {
    throw EmptyAnchorCellError("no generated sample falls in the largest natural cell (" +
                               std::to_string(anchor->first.length) + ", " + std::to_string(anchor->first.depth) + ")");
  }
  const std::uint64_t n_max = anchor->second;
  const std::uint64_t r_max_size = r_max->second.size();
  std::vector<std::size_t> out;
  for (auto& [vec, members] : cells) {
    auto nat = natural.find(vec);
    if (nat == natural.end()) continue;
    // round-half-up of nat * r_max / n_max, in integers
    std::uint64_t quota = (2 * nat->second * r_max_size + n_max) / (2 * n_max);
    quota = std::min<std::uint64_t>(quota, members.size());
    rng.shuffle(members.begin(), members.end());
    out.insert(out.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(quota));
  }
  std::sort(out.begin(), out.end());
  return out;
}

Corpus subsample_to_match(const Corpus& d_r, const DistributionSpec& d_n, const PartitionConfig& config, Rng& rng) {
  const auto features = extract_features(d_r.samples);
  const auto picked = subsample_to_match(features, d_n, config, rng);
  Corpus out;
  out.seed = d_r.seed;
  out.params = d_r.params;
  out.samples.reserve(picked.size());
  for (auto i : picked) out.samples.push_back(d_r.samples[i]);
  return out;
}

GaussianFit fit_gaussian(std::span<const Features> features) {
  if (features.size() < 3) throw DegenerateCovarianceError("need at least 3 samples to fit a Gaussian");
  std::array<double, 2> sum{};
  Matrix2 cross{};
  for (const auto& f : features) {
    const double x[2] = {static_cast<double>(f.length), static_cast<double>(f.depth)};
    for (int i = 0; i < 2; ++i) {
      sum[i] += x[i];
      for (int j = 0; j < 2; ++j) cross[i][j] += x[i] * x[j];
    }
  }
  return finish_fit(static_cast<double>(features.size()), sum, cross);
}

GaussianFit fit_gaussian(const DistributionSpec& spec) {
  if (spec.total() < 3) throw DegenerateCovarianceError("need at least 3 samples to fit a Gaussian");
  std::array<double, 2> sum{};
  Matrix2 cross{};
  for (const auto& e : spec.entries()) {
    const double w = static_cast<double>(e.count);
    const double x[2] = {static_cast<double>(e.length), static_cast<double>(e.depth)};
    for (int i = 0; i < 2; ++i) {
      sum[i] += w * x[i];
      for (int j = 0; j < 2; ++j) cross[i][j] += w * x[i] * x[j];
    }
  }
  return finish_fit(static_cast<double>(spec.total()), sum, cross);
}

double kl_gaussian(const GaussianFit& p, const GaussianFit& q) {
  check_covariance(p);
  check_covariance(q);
  const double det_p = det(p.cov);
  const double det_q = det(q.cov);
  const Matrix2 q_inv = {{{q.cov[1][1] / det_q, -q.cov[0][1] / det_q}, {-q.cov[1][0] / det_q, q.cov[0][0] / det_q}}};
  double trace = 0.0;
  for (int i = 0; i < 2; ++i)
    for (int k = 0; k < 2; ++k) trace += q_inv[i][k] * p.cov[k][i];
  const double d[2] = {q.mean[0] - p.mean[0], q.mean[1] - p.mean[1]};
  double quad = 0.0;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) quad += d[i] * q_inv[i][j] * d[j];
  const double kl = 0.5 * (trace + quad - 2.0 + std::log(det_q / det_p));
  return std::max(0.0, kl);
}

IncrementChoice select_increments(std::span<const Features> d_r, const DistributionSpec& d_n,
                                  std::span<const PartitionConfig> candidates, const Rng& rng) {
  if (candidates.empty()) throw Error("select_increments needs at least one candidate");
  const GaussianFit target = fit_gaussian(d_n);
  const std::vector<Features> features(d_r.begin(), d_r.end());
  std::vector<std::vector<std::size_t>> picks(candidates.size());
  std::vector<double> kls(candidates.size(), std::numeric_limits<double>::infinity());
  std::vector<std::string> errors(candidates.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    Rng local = rng.substream(i);
    try {
      picks[i] = subsample_to_match(features, d_n, candidates[i], local);
      kls[i] = kl_to(features, picks[i], target);
    } catch (const Error& e) {
      errors[i] = e.what();
    }
  }
  std::size_t best = candidates.size();
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (std::isfinite(kls[i]) && (best == candidates.size() || kls[i] < kls[best])) best = i;
  }
  if (best == candidates.size()) throw Error("no increment candidate could be evaluated: " + errors.front());
  return {candidates[best], std::move(picks[best]), kls[best], std::move(kls)};
}

void ExpansionCounts::add(const SyntaxTree& tree) { count_tree(tree, true, *this); }

void ExpansionCounts::add(const TreeShape& shape) {
  bool root = true;
  for (auto code : shape.nodes) {
    if (code >= TreeShape::kLeafBase) {
      const std::size_t len = code - TreeShape::kLeafBase;
      if (leaf_lengths.size() < len) leaf_lengths.resize(len, 0);
      leaf_lengths[len - 1] += 1;
      leaf += 1;
    } else {
      const auto fn = static_cast<BaseFunction>(code);
      if (arity(fn) == 1) {
        (root ? root_unary : unary) += 1;
        unary_functions[class_index(fn)] += 1;
      } else {
        (root ? root_binary : binary) += 1;
        binary_functions[class_index(fn)] += 1;
      }
    }
    root = false;
  }
}

GrammarParams mle_estimate(const ExpansionCounts& c, int max_arg_len) {
  // Free S nodes choose function vs leaf; every function node (the forced root
  // included) chooses unary vs binary. The two factors separate in the
  // likelihood, giving closed-form estimates for both.
  const double fn = static_cast<double>(c.unary + c.binary == 0 ? 1 : c.unary + c.binary);
  const double leaf = static_cast<double>(c.leaf == 0 ? 1 : c.leaf);
  const double u = static_cast<double>(c.total_unary() == 0 ? 1 : c.total_unary());
  const double b = static_cast<double>(c.total_binary() == 0 ? 1 : c.total_binary());
  const double q = fn / (fn + leaf);
  GrammarParams p;
  p.p_unary = q * u / (u + b);
  p.p_binary = q * b / (u + b);
  p.p_leaf = 1.0 - p.p_unary - p.p_binary;
  p.unary_weights = smoothed(c.unary_functions);
  p.binary_weights = smoothed(c.binary_functions);
  p.max_arg_len = std::max(max_arg_len, static_cast<int>(c.leaf_lengths.size()));
  p.arg_len_dist.assign(static_cast<std::size_t>(p.max_arg_len), 0.0);
  double total = 0.0;
  for (std::size_t k = 0; k < p.arg_len_dist.size(); ++k) {
    const std::uint64_t n = k < c.leaf_lengths.size() ? c.leaf_lengths[k] : 0;
    p.arg_len_dist[k] = n == 0 ? 1.0 : static_cast<double>(n);
    total += p.arg_len_dist[k];
  }
  for (auto& x : p.arg_len_dist) x /= total;
  return p;
}

GrammarParams mle_estimate(std::span<const Sample> samples, int max_arg_len) {
  if (samples.empty()) throw Error("mle_estimate needs a non-empty corpus");
  ExpansionCounts c;
  for (const auto& s : samples) c.add(s.tree);
  return mle_estimate(c, max_arg_len);
}

GrammarParams mle_estimate(std::span<const TreeShape> shapes, int max_arg_len) {
  if (shapes.empty()) throw Error("mle_estimate needs a non-empty corpus");
  ExpansionCounts c;
  for (const auto& s : shapes) c.add(s);
  return mle_estimate(c, max_arg_len);
}

std::vector<TreeShape> random_probability_shapes(std::size_t n, const Rng& rng, int max_recursion, int max_arg_len,
                                                 std::size_t literal_budget) {
  std::vector<TreeShape> out(n);
  const std::size_t shards = (n + kShardSize - 1) / kShardSize;
#pragma omp parallel for schedule(dynamic)
  for (std::size_t k = 0; k < shards; ++k) {
    Rng local = rng.substream(k);
    const std::size_t end = std::min(n, (k + 1) * kShardSize);
    for (std::size_t i = k * kShardSize; i < end; ++i) {
      std::optional<TreeShape> shape;
      while (!shape) {
        GrammarParams p = GrammarParams::uniform(1.0 / 3, 1.0 / 3, 1.0 / 3, max_arg_len);
        const auto split = local.dirichlet(3, 1.0);
        p.p_unary = split[0];
        p.p_binary = split[1];
        p.p_leaf = split[2];
        p.arg_len_dist = local.dirichlet(static_cast<std::size_t>(max_arg_len), 1.0);
        for (int attempt = 0; attempt < 64 && !shape; ++attempt) {
          shape = try_sample_shape(p, max_recursion, literal_budget, local);
        }
      }
      out[i] = std::move(*shape);
    }
  }
  return out;
}

Corpus random_probability_sample(std::size_t n, const Alphabet& alphabet, const Rng& rng) {
  if (n < 1) throw Error("sample size must be >= 1");
  const auto shapes = random_probability_shapes(n, rng);
  Corpus c;
  c.seed = rng.seed();
  c.samples.reserve(n);
  // Only per-sample literal distinctness matters here; duplicates are kept.
  for (std::size_t i = 0; i < n; ++i) {
    CorpusBuilder local(alphabet, rng.substream(n + 2 + i), 256);
    if (!local.add(shapes[i])) throw Error("cannot assign literals to a random sample");
    Sample s = local.take().front();
    s.id = i;
    c.samples.push_back(std::move(s));
  }
  return c;
}

NaturaliseResult naturalise_pipeline(const DistributionSpec& d_n, const NaturaliseOptions& options, const Rng& rng) {
  if (options.max_iters < 1) throw Error("max_iters must be >= 1");
  const GaussianFit target = fit_gaussian(d_n);
  std::size_t budget = 1;
  for (const auto& e : d_n.entries()) budget = std::max(budget, static_cast<std::size_t>(e.length));
  std::vector<TreeShape> shapes = random_probability_shapes(options.random_sample_size, rng.substream(0),
                                                            options.max_recursion, kDefaultMaxArgLen, budget);
  NaturaliseResult result;
  result.initial_kl = kl_gaussian(fit_gaussian(extract_features(shapes)), target);
  double best_kl = result.initial_kl;
  bool have_best = false;
  for (int it = 1; it <= options.max_iters; ++it) {
    const auto features = extract_features(shapes);
    IncrementChoice choice = select_increments(features, d_n, options.grid, rng.substream(1000 + static_cast<std::uint64_t>(it)));
    NaturaliseIteration row{it, choice.config, choice.kl, choice.selected.size(), true};
    if (have_best && choice.kl >= best_kl) {
      row.accepted = false;
      result.trace.push_back(row);
      break;
    }
    const double improvement = best_kl - choice.kl;
    std::vector<TreeShape> matched;
    matched.reserve(choice.selected.size());
    for (auto i : choice.selected) matched.push_back(shapes[i]);
    result.params = mle_estimate(matched);
    result.config = choice.config;
    result.final_kl = choice.kl;
    result.matched = std::move(matched);
    result.trace.push_back(row);
    best_kl = choice.kl;
    have_best = true;
    if (improvement < options.epsilon || it == options.max_iters) break;
    shapes = sample_shapes(result.params, options.regenerate_size, rng.substream(2000 + static_cast<std::uint64_t>(it)),
                           options.max_recursion);
  }
  return result;
}

Corpus generate_naturalised_corpus(const GrammarParams& params, const DistributionSpec& d_n,
                                   const PartitionConfig& config, std::size_t n, const Alphabet& alphabet,
                                   const Rng& rng, int max_recursion) {
  if (n < 1) throw Error("corpus size must be >= 1");
  params.validate();
  std::vector<TreeShape> pool;
  std::size_t batch = 3 * n;
  for (std::uint64_t round = 0; round < 8; ++round) {
    auto more = sample_shapes(params, batch, rng.substream(round), max_recursion, alphabet.size());
    pool.insert(pool.end(), std::make_move_iterator(more.begin()), std::make_move_iterator(more.end()));
    Rng pick_rng = rng.substream(100 + round);
    auto selected = subsample_to_match(extract_features(pool), d_n, config, pick_rng);
    if (selected.size() < n) {
      batch = pool.size();
      continue;
    }
    pick_rng.shuffle(selected.begin(), selected.end());
    CorpusBuilder builder(alphabet, rng.substream(200 + round));
    for (auto i : selected) {
      if (builder.size() == n) break;
      builder.add(pool[i]);
    }
    if (builder.size() < n) {
      batch = pool.size();
      continue;
    }
    Corpus c;
    c.samples = builder.take();
    c.seed = rng.seed();
    c.params = params;
    return c;
  }
  throw ExhaustedUniqueArgumentsError("could not assemble " + std::to_string(n) +
                                      " matched samples from the generated pool");
}

}  // namespace pcfgset
