#include <gtest/gtest.h>
#include <omp.h>

#include <set>
#include <unordered_set>

#include "pcfgset/error.hpp"
#include "pcfgset/generator.hpp"
#include "pcfgset/interpreter.hpp"
#include "pcfgset/kernels.hpp"
#include "support.hpp"

namespace pcfgset {
namespace {

using testing::syms;

Corpus ids_only(std::size_t n) {
  Corpus c;
  c.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) c.samples[i].id = i;
  return c;
}

TEST(Alphabet, StandardLayout) {
  Alphabet a;
  ASSERT_EQ(a.size(), 520u);
  std::set<std::string> distinct(a.symbols().begin(), a.symbols().end());
  EXPECT_EQ(distinct.size(), 520u);
  EXPECT_EQ(a[0], "A");
  EXPECT_EQ(a[25], "Z");
  EXPECT_EQ(a[26], "A1");
  EXPECT_EQ(a[519], "Z19");
  for (const auto& s : a.symbols()) EXPECT_TRUE(is_literal_symbol(s)) << s;
  EXPECT_EQ(a.index_of("B2"), 2 * 26 + 1);
  EXPECT_FALSE(a.index_of("A20").has_value());
}

TEST(GrammarParams, Validation) {
  EXPECT_NO_THROW(GrammarParams::defaults().validate());
  auto p = GrammarParams::defaults();
  p.p_leaf += 0.01;
  EXPECT_THROW(p.validate(), Error);
  p = GrammarParams::defaults();
  p.unary_weights[0] = -0.1;
  p.unary_weights[1] += 0.1;
  EXPECT_THROW(p.validate(), Error);
  p = GrammarParams::defaults();
  p.arg_len_dist.push_back(0.0);
  EXPECT_THROW(p.validate(), Error);
}

TEST(SampleTree, LeafOnlyParamsGivePrimitives) {
  const auto p = GrammarParams::uniform(1e-12, 1e-12, 1.0 - 2e-12);
  Alphabet a;
  Rng rng(7);
  for (int i = 0; i < 200; ++i) {
    const auto t = sample_tree(p, kDefaultMaxRecursion, a, rng);
    EXPECT_EQ(stats(t).num_functions, 1);
    EXPECT_EQ(stats(t).depth, 1);
  }
}

TEST(SampleTree, ZeroBinaryMassNeverSamplesBinary) {
  const auto p = GrammarParams::uniform(0.45, 0.0, 0.55);
  Alphabet a;
  Rng rng(3);
  for (int i = 0; i < 2000; ++i) {
    const auto t = sample_tree(p, kDefaultMaxRecursion, a, rng);
    for_each_apply(t, [](const SyntaxTree& n) { EXPECT_EQ(n.function().arity(), 1); });
  }
}

TEST(SampleTree, RecursionCapForcesLeaves) {
  const auto p = GrammarParams::uniform(0.9, 0.0, 0.1);
  Alphabet a;
  Rng rng(5);
  for (int i = 0; i < 200; ++i) EXPECT_LE(stats(sample_tree(p, 4, a, rng)).depth, 4);
}

TEST(SampleTree, SeededRegression) {
  Alphabet a;
  Rng r1(42), r2(42);
  const auto t1 = sample_tree(GrammarParams::defaults(), kDefaultMaxRecursion, a, r1);
  const auto t2 = sample_tree(GrammarParams::defaults(), kDefaultMaxRecursion, a, r2);
  EXPECT_EQ(t1, t2);
  EXPECT_EQ(render_text(t1), "repeat Y13 N12");
}

TEST(SampleTree, NoLiteralRepeatsWithinSample) {
  Alphabet a;
  Rng rng(11);
  for (int i = 0; i < 500; ++i) {
    const auto t = sample_tree(GrammarParams::defaults(), kDefaultMaxRecursion, a, rng);
    std::unordered_set<std::string> seen;
    for_each_leaf(t, [&](const SyntaxTree& leaf) {
      for (const auto& s : leaf.symbols()) EXPECT_TRUE(seen.insert(s).second);
    });
  }
}

TEST(TreeShape, StatsAndShapeAgreeWithTree) {
  testing::RandomTrees gen(17);
  for (int i = 0; i < 1000; ++i) {
    const auto t = gen.tree(6);
    const auto s = shape_of(t);
    EXPECT_EQ(stats(s), stats(t));
  }
}

TEST(SampleShapes, IndependentOfThreadCount) {
  const auto p = GrammarParams::defaults();
  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  const auto one = sample_shapes(p, 5000, Rng(9));
  omp_set_num_threads(4);
  const auto four = sample_shapes(p, 5000, Rng(9));
  omp_set_num_threads(saved);
  EXPECT_EQ(one, four);
}

TEST(GenerateCorpus, SmallCorpusIsDistinct) {
  Alphabet a;
  const auto c = generate_corpus(GrammarParams::uniform(0.3, 0.2, 0.5), 3, a, Rng(1));
  ASSERT_EQ(c.samples.size(), 3u);
  std::set<TokenSeq> srcs;
  for (const auto& s : c.samples) srcs.insert(s.src);
  EXPECT_EQ(srcs.size(), 3u);
}

TEST(GenerateCorpus, Deterministic) {
  Alphabet a;
  const auto c1 = generate_corpus(GrammarParams::defaults(), 500, a, Rng(42));
  const auto c2 = generate_corpus(GrammarParams::defaults(), 500, a, Rng(42));
  const auto c3 = generate_corpus(GrammarParams::defaults(), 500, a, Rng(43));
  ASSERT_EQ(c1.samples.size(), c2.samples.size());
  bool differs = false;
  for (std::size_t i = 0; i < c1.samples.size(); ++i) {
    EXPECT_EQ(c1.samples[i].src, c2.samples[i].src);
    EXPECT_EQ(c1.samples[i].id, c2.samples[i].id);
    differs = differs || c1.samples[i].src != c3.samples[i].src;
  }
  EXPECT_TRUE(differs);
}

TEST(GenerateCorpus, TenThousandSamplesPassConstraintAudit) {
  Alphabet a;
  const auto c = generate_corpus(GrammarParams::defaults(), 10000, a, Rng(2024));
  ASSERT_EQ(c.samples.size(), 10000u);

  // Brute-force scan, independent of the validator.
  std::set<SymbolString> tuples;
  std::set<TokenSeq> srcs;
  std::size_t repeated = 0;
  for (const auto& s : c.samples) {
    EXPECT_TRUE(srcs.insert(s.src).second);
    const auto tree = parse(std::span<const std::string>(s.src));
    EXPECT_EQ(tree, s.tree);
    EXPECT_EQ(evaluate(tree), s.tgt);
    for_each_leaf(tree, [&](const SyntaxTree& leaf) {
      if (leaf.symbols().size() >= 2 && !tuples.insert(leaf.symbols()).second) ++repeated;
    });
  }
  EXPECT_EQ(repeated, 0u);

  std::vector<TokenSeq> src, tgt;
  for (const auto& s : c.samples) {
    src.push_back(s.src);
    tgt.push_back(s.tgt);
  }
  const auto report = validate_corpus(src, tgt);
  EXPECT_TRUE(report.ok());
}

TEST(GenerateCorpus, LeafLengthsFollowParams) {
  Alphabet a;
  const auto p = GrammarParams::defaults();
  const auto c = generate_corpus(p, 30000, a, Rng(99));
  std::vector<double> counts(p.arg_len_dist.size(), 0.0);
  double total = 0;
  for (const auto& s : c.samples) {
    for_each_leaf(s.tree, [&](const SyntaxTree& leaf) {
      counts.at(leaf.symbols().size() - 1) += 1;
      total += 1;
    });
  }
  ASSERT_GE(total, 100000);
  for (std::size_t k = 0; k < counts.size(); ++k) EXPECT_NEAR(counts[k] / total, p.arg_len_dist[k], 0.02);
}

TEST(GenerateCorpus, TinyAlphabetExhausts) {
  Alphabet a(3);
  GenerateOptions opt;
  opt.max_rejection_ratio = 2;
  EXPECT_THROW(generate_corpus(GrammarParams::defaults(), 2000, a, Rng(1), opt), ExhaustedUniqueArgumentsError);
}

TEST(SplitCorpus, FloorSizes) {
  auto sizes = [](std::size_t n) {
    auto c = ids_only(n);
    Rng rng(1);
    split_corpus(c, {}, rng);
    return std::array{c.splits["train"].size(), c.splits["valid"].size(), c.splits["test"].size()};
  };
  EXPECT_EQ(sizes(100), (std::array<std::size_t, 3>{85, 5, 10}));
  EXPECT_EQ(sizes(1), (std::array<std::size_t, 3>{1, 0, 0}));
  EXPECT_EQ(sizes(99990), (std::array<std::size_t, 3>{84992, 4999, 9999}));
}

TEST(SplitCorpus, DisjointAndCovering) {
  auto c = ids_only(1234);
  Rng rng(5);
  split_corpus(c, {}, rng);
  std::set<std::uint64_t> all;
  std::size_t total = 0;
  for (const auto& [name, ids] : c.splits) {
    total += ids.size();
    all.insert(ids.begin(), ids.end());
    EXPECT_TRUE(std::is_sorted(ids.begin(), ids.end())) << name;
  }
  EXPECT_EQ(total, 1234u);
  EXPECT_EQ(all.size(), 1234u);
  Rng bad(1);
  EXPECT_THROW(split_corpus(c, {0.8, 0.1, 0.2}, bad), Error);
}

TEST(FunctionDifficulty, ProbesShareBases) {
  const std::vector<SyntaxTree> unary{parse("append swap F G H , repeat I J"), parse("A B")};
  const std::vector<std::pair<SyntaxTree, SyntaxTree>> binary{{parse("copy A"), parse("B C")}};
  const std::vector<BaseFunction> fns{BaseFunction::kEcho, BaseFunction::kReverse, BaseFunction::kAppend};
  const auto out = make_function_difficulty_corpora(unary, binary, fns);
  ASSERT_EQ(out.size(), 3u);
  EXPECT_EQ(join_tokens(out.at("echo")[0].src), "echo append swap F G H , repeat I J");
  EXPECT_EQ(join_tokens(out.at("reverse")[0].src), "reverse append swap F G H , repeat I J");
  EXPECT_EQ(out.at("echo").size(), unary.size());
  EXPECT_EQ(out.at("reverse").size(), unary.size());
  EXPECT_EQ(join_tokens(out.at("append")[0].src), "append copy A , B C");
  EXPECT_EQ(out.at("append")[0].tgt, syms("A B C"));
  EXPECT_EQ(out.at("echo")[0].tgt, syms("H G F I J I J J"));
}

TEST(PrimitiveLength, CopyAndReverseAndRemoveFirst) {
  Alphabet a;
  Rng rng(8);
  const std::vector<int> lens{1, 7};
  const auto copy = make_primitive_length_corpus(BaseFunction::kCopy, lens, 50, a, rng);
  for (const auto& s : copy.at(7)) {
    ASSERT_EQ(s.src.size(), 8u);
    EXPECT_EQ(s.tgt, SymbolString(s.src.begin() + 1, s.src.end()));
  }
  const auto rev = make_primitive_length_corpus(BaseFunction::kReverse, lens, 20, a, rng);
  for (const auto& s : rev.at(1)) EXPECT_EQ(s.tgt, SymbolString{s.src[1]});

  const std::vector<int> nine{9};
  const auto rf = make_primitive_length_corpus(BaseFunction::kRemoveFirst, nine, 100, a, rng);
  ASSERT_EQ(rf.at(9).size(), 100u);
  for (const auto& s : rf.at(9)) {
    const auto& args = s.tree.args();
    EXPECT_EQ(args[0].symbols().size(), 9u);
    EXPECT_LE(args[1].symbols().size(), 5u);
    EXPECT_EQ(s.tgt, args[1].symbols());
  }
  EXPECT_THROW(make_primitive_length_corpus(BaseFunction::kCopy, lens, 1, a, rng, 1), Error);
}

}  // namespace
}  // namespace pcfgset
