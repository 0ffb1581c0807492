#include <gtest/gtest.h>

#include <set>

#include "pcfgset/error.hpp"
#include "pcfgset/interpreter.hpp"
#include "pcfgset/testsuite.hpp"
#include "support.hpp"

namespace pcfgset {
namespace {

using testing::syms;

std::vector<Sample> samples_of(std::initializer_list<const char*> srcs) {
  std::vector<Sample> out;
  std::uint64_t id = 0;
  for (const char* s : srcs) out.push_back(make_sample(id++, parse(s)));
  return out;
}

const std::vector<Sample>& base_corpus() {
  static const std::vector<Sample> corpus = [] {
    Alphabet a;
    return generate_corpus(GrammarParams::defaults(), 20000, a, Rng(7)).samples;
  }();
  return corpus;
}

// Rewrites matched pairs into their remapped functions, then evaluates the
// rewritten tree with the ordinary interpreter.
SyntaxTree remap(const SyntaxTree& t, std::span<const ExceptionRule> rules) {
  if (t.is_leaf()) return t;
  std::vector<SyntaxTree> args;
  const auto& first = t.args().front();
  for (const auto& r : rules) {
    if (t.function().name != base_name(r.pair.outer) || first.is_leaf() ||
        first.function().name != base_name(r.pair.inner)) {
      continue;
    }
    std::vector<SyntaxTree> inner;
    for (const auto& c : first.args()) inner.push_back(remap(c, rules));
    args.push_back(SyntaxTree::apply(r.remapped.inner, std::move(inner)));
    for (std::size_t i = 1; i < t.args().size(); ++i) args.push_back(remap(t.args()[i], rules));
    return SyntaxTree::apply(r.remapped.outer, std::move(args));
  }
  for (const auto& c : t.args()) args.push_back(remap(c, rules));
  return SyntaxTree::apply(t.function(), std::move(args));
}

TEST(HeldOutPair, ParseAndCount) {
  const auto p = parse_pair("repeat remove_second");
  EXPECT_EQ(p, (HeldOutPair{BaseFunction::kRepeat, BaseFunction::kRemoveSecond}));
  EXPECT_EQ(pair_name(p), "repeat remove_second");
  EXPECT_THROW(parse_pair("repeat"), Error);
  EXPECT_THROW(parse_pair("repeat frobnicate"), Error);
  EXPECT_EQ(count_pair(syms("reverse repeat remove_second A B , C D"), p), 1u);
  EXPECT_EQ(count_pair(syms("repeat reverse remove_second A B , C D"), p), 0u);
  EXPECT_EQ(count_pair(syms("repeat_syn remove_second A , B"), p), 0u);
  EXPECT_EQ(default_held_out_pairs().size(), 4u);
}

TEST(SystematicitySplit, ContainmentExamples) {
  const auto corpus = samples_of({"reverse repeat remove_second A B , C D", "repeat reverse remove_second A B , C D",
                                  "swap repeat E F", "copy G"});
  const auto pairs = default_held_out_pairs();
  Rng rng(1);
  const auto split = systematicity_split(corpus, pairs, 1, rng);
  ASSERT_EQ(split.train.size(), 2u);
  EXPECT_EQ(join_tokens(split.train[0].src), "repeat reverse remove_second A B , C D");
  EXPECT_EQ(split.test.size(), 1u);
  EXPECT_EQ(split.discarded, 1u);
  EXPECT_THROW(systematicity_split(corpus, pairs, 3, rng), InsufficientPositivesError);

  const auto none = systematicity_split(corpus, std::span<const HeldOutPair>{}, 0, rng);
  EXPECT_EQ(none.train.size(), corpus.size());
  EXPECT_TRUE(none.test.empty());
}

TEST(SystematicitySplit, ScanInvariantsOnGeneratedCorpus) {
  const auto pairs = default_held_out_pairs();
  Rng rng(2);
  const auto split = systematicity_split(base_corpus(), pairs, 300, rng);
  ASSERT_EQ(split.test.size(), 300u);
  // Bigram scan, independent of count_pair.
  auto has_pair = [&](const TokenSeq& src) {
    for (std::size_t i = 0; i + 1 < src.size(); ++i)
      for (const auto& p : pairs)
        if (src[i] == base_name(p.outer) && src[i + 1] == base_name(p.inner)) return true;
    return false;
  };
  for (const auto& s : split.train) EXPECT_FALSE(has_pair(s.src));
  for (const auto& s : split.test) EXPECT_TRUE(has_pair(s.src));
  EXPECT_EQ(split.train.size() + split.test.size() + split.discarded, base_corpus().size());
}

TEST(ProductivitySplit, BoundaryAndEmptySide) {
  // 8 and 9 nested copies.
  std::string eight, nine;
  for (int i = 0; i < 8; ++i) eight += "copy ";
  nine = eight + "copy ";
  const auto corpus = samples_of({(eight + "A").c_str(), (nine + "B").c_str()});
  const auto split = productivity_split(corpus);
  ASSERT_EQ(split.train.size(), 1u);
  ASSERT_EQ(split.test.size(), 1u);
  EXPECT_EQ(split.train[0].stats.num_functions, 8);
  EXPECT_EQ(split.test[0].stats.num_functions, 9);
  EXPECT_THROW(productivity_split(samples_of({"copy A", "swap B C"})), EmptySideError);
}

TEST(ProductivitySplit, GeneratedCorpusSeparates) {
  const auto split = productivity_split(base_corpus());
  const auto train = summarize(split.train), test = summarize(split.test);
  EXPECT_LE(train.max_functions, 8);
  EXPECT_GE(test.min_functions, 9);
  EXPECT_EQ(train.count + test.count, base_corpus().size());
}

TEST(SynonymMap, Validation) {
  const auto m = SynonymMap::for_functions("swap, append");
  ASSERT_EQ(m.entries().size(), 2u);
  EXPECT_EQ(*m.find("swap"), "swap_syn");
  EXPECT_EQ(m.find("copy"), nullptr);
  EXPECT_EQ(SynonymMap::defaults().entries().size(), 4u);
  EXPECT_THROW(SynonymMap(std::map<std::string, std::string>{{"swap", "swap2"}}), Error);
  EXPECT_THROW(SynonymMap(std::map<std::string, std::string>{{"frob", "frob_syn"}}), Error);
}

TEST(SubstitutivityEqual, RewritesExactlyHalf) {
  const auto map = SynonymMap::defaults();
  Rng rng(3);
  const auto& train = base_corpus();
  const auto r = substitutivity_equal(train, map, rng);
  ASSERT_EQ(r.train.size(), train.size());
  for (const auto& [base, syn] : map.entries()) {
    std::size_t before = 0, base_after = 0, syn_after = 0;
    for (const auto& s : train) before += std::count(s.src.begin(), s.src.end(), base);
    for (const auto& s : r.train) {
      base_after += std::count(s.src.begin(), s.src.end(), base);
      syn_after += std::count(s.src.begin(), s.src.end(), syn);
    }
    EXPECT_EQ(r.audit.occurrences.at(base), before);
    EXPECT_EQ(syn_after, before / 2) << base;
    EXPECT_EQ(base_after + syn_after, before);
  }
  for (std::size_t i = 0; i < train.size(); ++i) {
    EXPECT_EQ(r.train[i].tgt, train[i].tgt);
    EXPECT_EQ(evaluate(r.train[i].tree), train[i].tgt);
  }
}

TEST(SubstitutivityEqual, OddCountFloors) {
  const auto train = samples_of({"swap A B", "swap C D", "swap swap E F"});
  Rng rng(4);
  const auto r = substitutivity_equal(train, SynonymMap::for_functions("swap"), rng);
  EXPECT_EQ(r.audit.occurrences.at("swap"), 4u);
  EXPECT_EQ(r.audit.rewritten.at("swap"), 2u);
}

TEST(SubstitutivityPrimitive, AddsPrimitiveSamples) {
  Alphabet a;
  Rng rng(5);
  const auto map = SynonymMap::defaults();
  const auto& train = base_corpus();
  const auto r = substitutivity_primitive(train, map, 0.001, a, rng);
  ASSERT_EQ(r.train.size(), train.size() + 4 * 20);
  std::set<TokenSeq> srcs;
  for (const auto& s : train) srcs.insert(s.src);
  std::map<std::string, std::size_t> per;
  for (std::size_t i = train.size(); i < r.train.size(); ++i) {
    const auto& s = r.train[i];
    EXPECT_EQ(s.stats.num_functions, 1);
    EXPECT_TRUE(srcs.insert(s.src).second);
    ++per[s.src[0]];
    EXPECT_EQ(evaluate(s.tree), s.tgt);
  }
  for (const auto& [base, syn] : map.entries()) EXPECT_EQ(per[syn], 20u);
  EXPECT_THROW(substitutivity_primitive(train, map, 0.0, a, rng), Error);
}

TEST(SubstitutivityPrimitive, PaperScaleCount) {
  // round(0.001 * 85000) samples per synonym.
  std::vector<Sample> train(85000);
  for (std::size_t i = 0; i < train.size(); ++i) train[i].id = i;
  Alphabet a;
  Rng rng(6);
  const auto r = substitutivity_primitive(train, SynonymMap::for_functions("append"), 0.001, a, rng);
  EXPECT_EQ(r.audit.added.at("append"), 85u);
  EXPECT_EQ(r.train.size(), 85085u);
  EXPECT_EQ(r.train.back().id, 85084u);
}

TEST(ConsistencyPairs, Examples) {
  const auto test = samples_of({"swap A B C", "append swap A B , C", "copy D"});
  const auto pairs = make_consistency_pairs(test, SynonymMap::defaults());
  ASSERT_EQ(pairs.pairs.size(), 2u);
  EXPECT_EQ(pairs.skipped, 1u);
  EXPECT_EQ(join_tokens(pairs.pairs[0].src_syn), "swap_syn A B C");
  EXPECT_EQ(join_tokens(pairs.pairs[1].src_syn), "append_syn swap_syn A B , C");
  EXPECT_EQ(pairs.pairs[1].id, 1u);
}

TEST(ConsistencyPairs, SynonymsShareSemantics) {
  const auto pairs = make_consistency_pairs(base_corpus(), SynonymMap::defaults());
  ASSERT_GT(pairs.pairs.size(), 1000u);
  for (const auto& p : pairs.pairs) {
    EXPECT_EQ(evaluate(parse(std::span<const std::string>(p.src_syn))), p.tgt);
    EXPECT_EQ(evaluate(parse(std::span<const std::string>(p.src_base))), p.tgt);
  }
}

TEST(ExceptionEvaluate, TableRows) {
  const auto rules = default_exception_rules();
  auto check = [&](const char* src, const char* original, const char* exception) {
    const auto t = parse(src);
    EXPECT_EQ(join_tokens(evaluate(t)), original) << src;
    EXPECT_EQ(join_tokens(exception_evaluate(t, rules)), exception) << src;
  };
  check("reverse echo A B C", "C C B A", "A B C C");
  check("prepend remove_first A , B , C", "C B", "A B");
  check("echo remove_first A , B C", "B C C", "A B C");
  check("prepend reverse A B , C", "C B A", "A B B");
}

TEST(ExceptionEvaluate, ConsumedChildIsNotAParent) {
  const auto rules = default_exception_rules();
  // reverse echo matches at the root; echo remove_first below it is consumed.
  const auto t = parse("reverse echo remove_first A , B");
  EXPECT_EQ(join_tokens(exception_evaluate(t, rules)), "B B");
  // Matches further down are still found.
  EXPECT_EQ(join_tokens(exception_evaluate(parse("copy reverse echo A B"), rules)), "A B B");
}

TEST(ExceptionEvaluate, AgreesWithRewriteOracle) {
  const auto rules = default_exception_rules();
  testing::RandomTrees gen(31);
  for (int i = 0; i < 5000; ++i) {
    const auto t = gen.tree(6);
    EXPECT_EQ(exception_evaluate(t, rules), evaluate(remap(t, rules)));
    EXPECT_EQ(exception_evaluate(t, {}), evaluate(t));
  }
}

TEST(ExceptionsApply, GeneratedCorpus) {
  Alphabet a;
  Rng rng(8);
  const auto rules = default_exception_rules();
  const auto& train = base_corpus();
  const auto r = exceptions_apply(train, rules, 0.005, a, rng);
  ASSERT_EQ(r.audit.size(), rules.size());
  std::size_t expected_entries = 0;
  for (std::size_t k = 0; k < rules.size(); ++k) {
    const auto& audit = r.audit[k];
    std::size_t outer = 0, inner = 0;
    for (const auto& s : train) {
      outer += std::count(s.src.begin(), s.src.end(), base_name(rules[k].pair.outer));
      inner += std::count(s.src.begin(), s.src.end(), base_name(rules[k].pair.inner));
    }
    EXPECT_EQ(audit.outer_occurrences, outer);
    EXPECT_EQ(audit.target, static_cast<std::size_t>(std::llround(0.005 * std::min(outer, inner))));
    EXPECT_EQ(audit.from_train + audit.synthesised, audit.target);
    expected_entries += audit.target;
  }
  ASSERT_EQ(r.exceptions.size(), expected_entries);

  std::map<std::uint64_t, const Sample*> by_id;
  for (const auto& s : r.train) by_id[s.id] = &s;
  EXPECT_EQ(by_id.size(), r.train.size());
  std::set<std::uint64_t> exception_ids;
  for (const auto& e : r.exceptions) {
    const auto t = parse(std::span<const std::string>(e.src));
    EXPECT_EQ(e.original_tgt, evaluate(t));
    EXPECT_EQ(e.exception_tgt, evaluate(remap(t, rules)));
    EXPECT_NE(e.original_tgt, e.exception_tgt);
    ASSERT_TRUE(by_id.count(e.id));
    EXPECT_EQ(by_id[e.id]->tgt, e.exception_tgt);
    exception_ids.insert(e.id);
  }
  // No rule pair is left with its compositional meaning.
  for (const auto& s : r.train) {
    bool has = false;
    for (const auto& rule : rules) has = has || count_pair(s.src, rule.pair) > 0;
    EXPECT_EQ(has, exception_ids.count(s.id) == 1);
  }
}

TEST(ExceptionsApply, TargetArithmeticAndZeroPercentage) {
  const auto one = make_sample(0, parse("reverse echo A B"));
  std::vector<Sample> train(33000, one);
  for (std::size_t i = 0; i < train.size(); ++i) train[i].id = i;
  Alphabet a;
  Rng rng(9);
  const std::vector<ExceptionRule> rule{default_exception_rules()[0]};
  const auto r = exceptions_apply(train, rule, 0.001, a, rng);
  EXPECT_EQ(r.audit[0].target, 33u);
  EXPECT_EQ(r.audit[0].from_train, 33u);
  EXPECT_EQ(r.audit[0].removed, 33000u - 33u);
  EXPECT_EQ(r.exceptions.size(), 33u);

  Rng rng0(9);
  const auto& base = base_corpus();
  const auto zero = exceptions_apply(base, default_exception_rules(), 0.0, a, rng0);
  EXPECT_TRUE(zero.exceptions.empty());
  for (const auto& s : zero.train) {
    for (const auto& rule : default_exception_rules()) EXPECT_EQ(count_pair(s.src, rule.pair), 0u);
  }
}

TEST(ExceptionsApply, SynthesisesOnShortfall) {
  const auto train = samples_of({"copy A", "swap B C", "append D , E"});
  Alphabet a;
  Rng rng(10);
  // Synthetic rule whose pair never occurs in train.
  const std::vector<ExceptionRule> rules{{{BaseFunction::kCopy, BaseFunction::kSwap},
                                          {BaseFunction::kReverse, BaseFunction::kCopy}}};
  const auto r = exceptions_apply(train, rules, 0.5, a, rng);
  EXPECT_EQ(r.audit[0].target, 1u);
  EXPECT_EQ(r.audit[0].synthesised, 1u);
  ASSERT_EQ(r.train.size(), 4u);
  EXPECT_EQ(r.train.back().src[0], "copy");
  EXPECT_EQ(r.train.back().src[1], "swap");
  EXPECT_EQ(r.train.back().id, 3u);
  EXPECT_NE(r.exceptions[0].original_tgt, r.exceptions[0].exception_tgt);
}

TEST(UnrollPlan, LocalismExample) {
  const auto plan = build_unroll_plan(parse("echo append C , prepend B , A"));
  ASSERT_EQ(plan.steps.size(), 3u);
  EXPECT_EQ(join_tokens(plan.steps[0].src), "prepend B , A");
  EXPECT_EQ(join_tokens(plan.steps[1].src), "append C , <r1>");
  EXPECT_EQ(join_tokens(plan.steps[2].src), "echo <r2>");
  EXPECT_EQ(plan.steps[0].path, (std::vector<int>{0, 1}));
  EXPECT_TRUE(plan.steps[2].path.empty());
  EXPECT_EQ(build_unroll_plan(parse("copy A B")).steps.size(), 1u);
  EXPECT_THROW(build_unroll_plan(parse("A B")), Error);

  const std::vector<TokenSeq> outputs{syms("A B")};
  EXPECT_EQ(join_tokens(instantiate_step(plan, 1, outputs)), "append C , A B");
}

TEST(UnrollPlan, RoundsGoLeftToRight) {
  const auto plan = build_unroll_plan(parse("append copy A , swap reverse B C"));
  ASSERT_EQ(plan.steps.size(), 4u);
  EXPECT_EQ(join_tokens(plan.steps[0].src), "copy A");
  EXPECT_EQ(join_tokens(plan.steps[1].src), "reverse B C");
  EXPECT_EQ(join_tokens(plan.steps[2].src), "swap <r2>");
  EXPECT_EQ(join_tokens(plan.steps[3].src), "append <r1> , <r3>");
}

TEST(UnrollPlan, OracleExecutionReproducesEvaluate) {
  testing::RandomTrees gen(41);
  auto oracle = [](const TokenSeq& src) { return evaluate(parse(std::span<const std::string>(src))); };
  for (int i = 0; i < 10000; ++i) {
    const auto t = gen.composed(7);
    const auto plan = build_unroll_plan(t);
    EXPECT_EQ(plan.steps.size(), static_cast<std::size_t>(stats(t).num_functions));
    EXPECT_EQ(execute_plan(plan, oracle), evaluate(t));
  }
}

}  // namespace
}  // namespace pcfgset
