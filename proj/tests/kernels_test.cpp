#include <gtest/gtest.h>
#include <omp.h>

#include "pcfgset/generator.hpp"
#include "pcfgset/kernels.hpp"
#include "support.hpp"

namespace pcfgset {
namespace {

struct Fixture {
  std::vector<TokenSeq> src, tgt;
  std::vector<SyntaxTree> trees;
};

// A clean corpus with a sprinkling of every fault the validator knows about.
const Fixture& fixture() {
  static const Fixture f = [] {
    Fixture f;
    const auto c = generate_corpus(GrammarParams::defaults(), 20000, Alphabet(), Rng(33));
    for (const auto& s : c.samples) {
      f.src.push_back(s.src);
      f.tgt.push_back(s.tgt);
      f.trees.push_back(s.tree);
    }
    for (std::size_t i = 0; i < f.src.size(); i += 997) f.src[i].push_back("bogus");
    for (std::size_t i = 5; i < f.tgt.size(); i += 1009) f.tgt[i].push_back("A");
    for (std::size_t i = 11; i + 1 < f.src.size(); i += 1511) f.src[i + 1] = f.src[i];
    f.src.push_back(testing::syms("append A B , A"));
    f.tgt.push_back(testing::syms("A B A"));
    return f;
  }();
  return f;
}

class Threads : public ::testing::TestWithParam<int> {
 protected:
  void SetUp() override {
    saved_ = omp_get_max_threads();
    omp_set_num_threads(GetParam());
  }
  void TearDown() override { omp_set_num_threads(saved_); }

 private:
  int saved_ = 1;
};

TEST_P(Threads, ParseAllMatchesSerial) {
  const auto a = parse_all(fixture().src);
  const auto b = serial::parse_all(fixture().src);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].tree, b[i].tree);
    EXPECT_EQ(a[i].error, b[i].error);
  }
}

TEST_P(Threads, EvaluateAndStatsMatchSerial) {
  EXPECT_EQ(evaluate_all(fixture().trees), serial::evaluate_all(fixture().trees));
  EXPECT_EQ(stats_all(fixture().trees), serial::stats_all(fixture().trees));
}

TEST_P(Threads, MatchFlagsMatchSerial) {
  const auto& f = fixture();
  const std::vector<TokenSeq> tgt(f.tgt.begin(), f.tgt.begin() + f.trees.size());
  const auto out = evaluate_all(f.trees);
  std::vector<TokenSeq> preds(out.begin(), out.end());
  EXPECT_EQ(match_flags(preds, tgt), serial::match_flags(preds, tgt));
}

TEST_P(Threads, ValidationMatchesSerial) {
  const auto a = validate_corpus(fixture().src, fixture().tgt);
  const auto b = serial::validate_corpus(fixture().src, fixture().tgt);
  EXPECT_FALSE(a.ok());
  EXPECT_GT(a.parse_errors, 0u);
  EXPECT_GT(a.target_mismatches, 0u);
  EXPECT_GT(a.duplicate_src, 0u);
  EXPECT_EQ(a.repeated_literals, 1u);
  EXPECT_EQ(a.parse_errors, b.parse_errors);
  EXPECT_EQ(a.render_mismatches, b.render_mismatches);
  EXPECT_EQ(a.target_mismatches, b.target_mismatches);
  EXPECT_EQ(a.repeated_literals, b.repeated_literals);
  EXPECT_EQ(a.repeated_tuples, b.repeated_tuples);
  EXPECT_EQ(a.duplicate_src, b.duplicate_src);
  EXPECT_EQ(a.messages, b.messages);
}

INSTANTIATE_TEST_SUITE_P(Kernels, Threads, ::testing::Values(1, 2, 4));

}  // namespace
}  // namespace pcfgset
