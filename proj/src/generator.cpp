#include "pcfgset/generator.hpp"

#include <algorithm>
#include <cmath>

#include "pcfgset/error.hpp"
#include "pcfgset/interpreter.hpp"

namespace pcfgset {

namespace {

constexpr std::size_t kShardSize = 2048;

bool is_leaf_code(std::uint8_t code) { return code >= TreeShape::kLeafBase; }

void shape_stats(const TreeShape& s, std::size_t& pos, int level, SequenceStats& out) {
  const std::uint8_t code = s.nodes.at(pos++);
  if (is_leaf_code(code)) {
    out.length += code - TreeShape::kLeafBase;
    out.depth = std::max(out.depth, level);
    return;
  }
  const int n = arity(static_cast<BaseFunction>(code));
  out.num_functions += 1;
  out.length += n;
  for (int i = 0; i < n; ++i) shape_stats(s, pos, level + 1, out);
}

void shape_into(const SyntaxTree& t, TreeShape& out) {
  if (t.is_leaf()) {
    if (t.symbols().size() > 255u - TreeShape::kLeafBase) throw Error("leaf too long for a shape");
    out.nodes.push_back(static_cast<std::uint8_t>(TreeShape::kLeafBase + t.symbols().size()));
    return;
  }
  out.nodes.push_back(static_cast<std::uint8_t>(t.function().base));
  for (const auto& c : t.args()) shape_into(c, out);
}

SyntaxTree materialise(const TreeShape& s, std::size_t& pos) {
  const std::uint8_t code = s.nodes.at(pos++);
  if (is_leaf_code(code)) {
    // Placeholder symbols; CorpusBuilder::fill overwrites them.
    return SyntaxTree::leaf(SymbolString(code - TreeShape::kLeafBase, "A"));
  }
  const auto fn = static_cast<BaseFunction>(code);
  std::vector<SyntaxTree> args;
  for (int i = 0; i < arity(fn); ++i) args.push_back(materialise(s, pos));
  return SyntaxTree::apply(fn, std::move(args));
}

class ShapeSampler {
 public:
  ShapeSampler(const GrammarParams& p, int max_recursion, std::size_t budget, Rng& rng)
      : p_(p),
        max_recursion_(max_recursion),
        budget_(budget),
        rng_(rng),
        expansion_{p.p_unary, p.p_binary, p.p_leaf},
        unary_(p.unary_weights.begin(), p.unary_weights.end()),
        binary_(p.binary_weights.begin(), p.binary_weights.end()) {}

  std::optional<TreeShape> run() {
    TreeShape s;
    used_ = 0;
    if (!grow(0, true, s)) return std::nullopt;
    return s;
  }

 private:
  bool grow(int level, bool force_function, TreeShape& out) {
    std::size_t choice = 2;
    if (level < max_recursion_) {
      if (force_function) {
        choice = rng_.uniform() * (p_.p_unary + p_.p_binary) < p_.p_unary ? 0 : 1;
      } else {
        choice = rng_.categorical(expansion_);
      }
    }
    if (choice == 2) {
      const int len = static_cast<int>(rng_.categorical(p_.arg_len_dist)) + 1;
      used_ += static_cast<std::size_t>(len);
      if (used_ > budget_) return false;
      out.nodes.push_back(static_cast<std::uint8_t>(TreeShape::kLeafBase + len));
      return true;
    }
    if (choice == 0) {
      out.nodes.push_back(static_cast<std::uint8_t>(kUnaryFunctions[rng_.categorical(unary_)]));
      return grow(level + 1, false, out);
    }
    out.nodes.push_back(static_cast<std::uint8_t>(kBinaryFunctions[rng_.categorical(binary_)]));
    return grow(level + 1, false, out) && grow(level + 1, false, out);
  }

  const GrammarParams& p_;
  int max_recursion_;
  std::size_t budget_;
  Rng& rng_;
  std::vector<double> expansion_;
  std::vector<double> unary_;
  std::vector<double> binary_;
  std::size_t used_ = 0;
};

}  // namespace

SequenceStats stats(const TreeShape& shape) {
  SequenceStats out;
  std::size_t pos = 0;
  shape_stats(shape, pos, 0, out);
  return out;
}

TreeShape shape_of(const SyntaxTree& tree) {
  TreeShape s;
  shape_into(tree, s);
  return s;
}

Sample make_sample(std::uint64_t id, SyntaxTree tree) {
  Sample s;
  s.id = id;
  s.src = render_surface(tree);
  s.tgt = evaluate(tree);
  s.stats = stats(tree);
  s.tree = std::move(tree);
  return s;
}

std::vector<Sample> Corpus::split(const std::string& name) const {
  std::vector<Sample> out;
  auto it = splits.find(name);
  if (it == splits.end()) return out;
  std::unordered_map<std::uint64_t, std::size_t> by_id;
  by_id.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) by_id.emplace(samples[i].id, i);
  out.reserve(it->second.size());
  for (auto id : it->second) out.push_back(samples.at(by_id.at(id)));
  return out;
}

std::optional<TreeShape> try_sample_shape(const GrammarParams& params, int max_recursion,
                                          std::size_t literal_budget, Rng& rng) {
  return ShapeSampler(params, max_recursion, literal_budget, rng).run();
}

TreeShape sample_shape(const GrammarParams& params, int max_recursion, std::size_t literal_budget,
                       Rng& rng) {
  ShapeSampler sampler(params, max_recursion, literal_budget, rng);
  for (;;) {
    if (auto s = sampler.run()) return std::move(*s);
  }
}

std::vector<TreeShape> sample_shapes(const GrammarParams& params, std::size_t count, const Rng& rng,
                                     int max_recursion, std::size_t literal_budget) {
  params.validate();
  std::vector<TreeShape> out(count);
  const std::size_t shards = (count + kShardSize - 1) / kShardSize;
#pragma omp parallel for schedule(dynamic)
  for (std::size_t k = 0; k < shards; ++k) {
    Rng shard_rng = rng.substream(k);
    const std::size_t end = std::min(count, (k + 1) * kShardSize);
    for (std::size_t i = k * kShardSize; i < end; ++i) {
      out[i] = sample_shape(params, max_recursion, literal_budget, shard_rng);
    }
  }
  return out;
}

SyntaxTree sample_tree(const GrammarParams& params, int max_recursion, const Alphabet& alphabet,
                       Rng& rng) {
  params.validate();
  const TreeShape shape = sample_shape(params, max_recursion, alphabet.size(), rng);
  std::size_t pos = 0;
  SyntaxTree tree = materialise(shape, pos);
  std::vector<std::size_t> pool(alphabet.size());
  for (std::size_t i = 0; i < pool.size(); ++i) pool[i] = i;
  std::size_t next = 0;
  for_each_leaf_mut(tree, [&](SyntaxTree& leaf) {
    for (auto& sym : leaf.symbols()) {
      // Partial Fisher-Yates: pool[0..next) holds the symbols drawn so far.
      const std::size_t j = next + rng.index(pool.size() - next);
      std::swap(pool[next], pool[j]);
      sym = alphabet[pool[next++]];
    }
  });
  return tree;
}

CorpusBuilder::CorpusBuilder(const Alphabet& alphabet, Rng rng, int attempts_per_leaf)
    : alphabet_(alphabet), rng_(std::move(rng)), attempts_(attempts_per_leaf), in_sample_(alphabet.size(), 0) {}

void CorpusBuilder::reserve(const Sample& sample) {
  used_src_.insert(join_tokens(sample.src));
  for_each_leaf(sample.tree, [&](const SyntaxTree& leaf) {
    if (leaf.symbols().size() >= 2) used_tuples_.insert(join_tokens(leaf.symbols()));
  });
  next_id_ = std::max(next_id_, sample.id + 1);
}

bool CorpusBuilder::fill(SyntaxTree& tree) {
  std::vector<std::size_t> taken;
  std::vector<std::string> tuples;
  bool ok = true;
  for_each_leaf_mut(tree, [&](SyntaxTree& leaf) {
    if (!ok) return;
    const std::size_t len = leaf.symbols().size();
    if (taken.size() + len > alphabet_.size()) {
      ok = false;
      return;
    }
    for (int attempt = 0; attempt < attempts_; ++attempt) {
      std::vector<std::size_t> drawn;
      drawn.reserve(len);
      while (drawn.size() < len) {
        const std::size_t idx = rng_.index(alphabet_.size());
        if (in_sample_[idx]) continue;
        in_sample_[idx] = 1;
        drawn.push_back(idx);
      }
      SymbolString symbols;
      symbols.reserve(len);
      for (auto idx : drawn) symbols.push_back(alphabet_[idx]);
      std::string key;
      if (len >= 2) {
        key = join_tokens(symbols);
        if (used_tuples_.contains(key)) {
          for (auto idx : drawn) in_sample_[idx] = 0;
          continue;
        }
        tuples.push_back(std::move(key));
      }
      taken.insert(taken.end(), drawn.begin(), drawn.end());
      leaf.symbols() = std::move(symbols);
      return;
    }
    ok = false;
  });
  for (auto idx : taken) in_sample_[idx] = 0;
  if (!ok) return false;
  for (auto& t : tuples) used_tuples_.insert(std::move(t));
  return true;
}

bool CorpusBuilder::add(const TreeShape& shape) {
  std::size_t pos = 0;
  return add(materialise(shape, pos));
}

bool CorpusBuilder::add(SyntaxTree tree) {
  // Tuples are only committed by fill() on success; a duplicate src after a
  // successful fill leaves its tuples reserved, which is harmless.
  if (!fill(tree)) return false;
  TokenSeq src = render_surface(tree);
  std::string key = join_tokens(src);
  if (!used_src_.insert(std::move(key)).second) return false;
  samples_.push_back(make_sample(next_id_++, std::move(tree)));
  return true;
}

Corpus generate_corpus(const GrammarParams& params, std::size_t n, const Alphabet& alphabet,
                       const Rng& rng, const GenerateOptions& options) {
  if (n < 1) throw Error("corpus size must be >= 1");
  params.validate();
  CorpusBuilder builder(alphabet, rng.substream(0));
  const double cap = options.max_rejection_ratio * static_cast<double>(n) + 1000.0;
  std::size_t rejected = 0;
  for (std::uint64_t round = 1; builder.size() < n; ++round) {
    const std::size_t need = n - builder.size();
    const auto shapes = sample_shapes(params, need + need / 8 + 16, rng.substream(round),
                                      options.max_recursion, alphabet.size());
    for (const auto& s : shapes) {
      if (builder.size() == n) break;
      if (!builder.add(s) && static_cast<double>(++rejected) > cap) {
        throw ExhaustedUniqueArgumentsError("gave up after " + std::to_string(rejected) +
                                            " rejected candidates with " +
                                            std::to_string(builder.size()) + " samples accepted");
      }
    }
  }
  Corpus c;
  c.samples = builder.take();
  c.seed = rng.seed();
  c.params = params;
  return c;
}

void split_corpus(Corpus& corpus, const SplitFractions& f, Rng& rng) {
  if (std::abs(f.train + f.valid + f.test - 1.0) > 1e-9) throw Error("split fractions must sum to 1");
  const std::size_t n = corpus.samples.size();
  auto floor_share = [n](double frac) {
    return static_cast<std::size_t>(std::floor(static_cast<double>(n) * frac + 1e-9));
  };
  const std::size_t n_valid = floor_share(f.valid);
  const std::size_t n_test = floor_share(f.test);
  std::vector<std::uint64_t> ids;
  ids.reserve(n);
  for (const auto& s : corpus.samples) ids.push_back(s.id);
  rng.shuffle(ids.begin(), ids.end());
  auto take = [&](std::size_t from, std::size_t to) {
    std::vector<std::uint64_t> part(ids.begin() + static_cast<std::ptrdiff_t>(from),
                                    ids.begin() + static_cast<std::ptrdiff_t>(to));
    std::sort(part.begin(), part.end());
    return part;
  };
  corpus.splits.clear();
  corpus.splits["valid"] = take(0, n_valid);
  corpus.splits["test"] = take(n_valid, n_valid + n_test);
  corpus.splits["train"] = take(n_valid + n_test, n);
}

std::map<std::string, std::vector<Sample>> make_function_difficulty_corpora(
    std::span<const SyntaxTree> unary_bases,
    std::span<const std::pair<SyntaxTree, SyntaxTree>> binary_bases,
    std::span<const BaseFunction> functions) {
  std::map<std::string, std::vector<Sample>> out;
  for (auto fn : functions) {
    auto& corpus = out[std::string(base_name(fn))];
    std::uint64_t id = 0;
    if (arity(fn) == 1) {
      for (const auto& base : unary_bases) corpus.push_back(make_sample(id++, SyntaxTree::apply(fn, {base})));
    } else {
      for (const auto& [a, b] : binary_bases) corpus.push_back(make_sample(id++, SyntaxTree::apply(fn, {a, b})));
    }
  }
  return out;
}

std::map<int, std::vector<Sample>> make_primitive_length_corpus(BaseFunction fn,
                                                                std::span<const int> arg_lengths,
                                                                std::size_t per_length,
                                                                const Alphabet& alphabet, Rng& rng,
                                                                int long_slot, int regular_max_len) {
  if (long_slot < 0 || long_slot >= arity(fn)) throw Error("long_slot out of range for " + std::string(base_name(fn)));
  std::map<int, std::vector<Sample>> out;
  for (int len : arg_lengths) {
    if (len < 1) throw Error("argument lengths must be >= 1");
    CorpusBuilder builder(alphabet, rng.substream(static_cast<std::uint64_t>(len)));
    std::size_t failures = 0;
    while (builder.size() < per_length) {
      std::vector<SyntaxTree> args;
      for (int slot = 0; slot < arity(fn); ++slot) {
        const int l = slot == long_slot ? len : 1 + static_cast<int>(rng.index(static_cast<std::size_t>(regular_max_len)));
        args.push_back(SyntaxTree::leaf(SymbolString(static_cast<std::size_t>(l), "A")));
      }
      if (!builder.add(SyntaxTree::apply(fn, std::move(args))) && ++failures > 100 * per_length + 1000) {
        throw ExhaustedUniqueArgumentsError("cannot draw distinct primitive samples of length " + std::to_string(len));
      }
    }
    out[len] = builder.take();
  }
  return out;
}

}  // namespace pcfgset
