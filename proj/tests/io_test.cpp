#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "pcfgset/error.hpp"
#include "pcfgset/io.hpp"
#include "support.hpp"

namespace pcfgset {
namespace {

namespace fs = std::filesystem;
using testing::syms;

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("pcfgset_io_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

TEST(Sha256, KnownDigests) {
  const auto dir = scratch("sha");
  std::ofstream(dir / "empty").close();
  std::ofstream(dir / "abc") << "abc";
  EXPECT_EQ(sha256_hex(dir / "empty"), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(sha256_hex(dir / "abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  fs::remove_all(dir);
}

TEST(Split, RoundTrip) {
  const auto dir = scratch("split");
  const auto corpus = generate_corpus(GrammarParams::defaults(), 300, Alphabet(), Rng(2));
  write_split(dir, "all", corpus.samples);
  const auto back = read_split(dir, "all");
  ASSERT_EQ(back.size(), corpus.samples.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back[i].id, i);
    EXPECT_EQ(back[i].src, corpus.samples[i].src);
    EXPECT_EQ(back[i].tgt, corpus.samples[i].tgt);
    EXPECT_EQ(back[i].stats.length, corpus.samples[i].stats.length);
    EXPECT_EQ(back[i].stats.depth, corpus.samples[i].stats.depth);
  }
  fs::remove_all(dir);
}

TEST(Split, StoredTargetIsKeptAndBadLinesReported) {
  const auto dir = scratch("split_bad");
  std::ofstream(dir / "x.src") << "copy A\n";
  std::ofstream(dir / "x.tgt") << "B\n";
  EXPECT_EQ(read_split(dir, "x")[0].tgt, syms("B"));
  std::ofstream(dir / "y.src") << "copy A\nfrobnicate A\n";
  std::ofstream(dir / "y.tgt") << "A\nA\n";
  try {
    read_split(dir, "y");
    FAIL() << "expected a parse failure";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
  std::ofstream(dir / "z.src") << "copy A\n";
  std::ofstream(dir / "z.tgt") << "A\nA\n";
  EXPECT_THROW(read_split(dir, "z"), LineCountMismatchError);
  fs::remove_all(dir);
}

TEST(Manifest, RoundTripAndTamperDetection) {
  const auto dir = scratch("manifest");
  std::ofstream(dir / "a.src") << "copy A\n";
  std::ofstream(dir / "a.tgt") << "A\n";
  write_manifest(dir, {{"seed", 7}});
  EXPECT_NO_THROW(verify_manifest(dir));
  const auto m = read_manifest(dir);
  EXPECT_EQ(m["seed"], 7);
  EXPECT_EQ(m["files"].size(), 2u);
  EXPECT_EQ(m["files"]["a.src"]["lines"], 1);

  // Unlisted files are ignored; changed or missing listed ones are not.
  std::ofstream(dir / "notes.txt") << "scratch\n";
  EXPECT_NO_THROW(verify_manifest(dir));
  std::ofstream(dir / "a.tgt", std::ios::app) << "B\n";
  EXPECT_THROW(verify_manifest(dir), ManifestMismatchError);
  std::ofstream(dir / "a.tgt") << "A\n";
  EXPECT_NO_THROW(verify_manifest(dir));
  fs::remove(dir / "a.src");
  EXPECT_THROW(verify_manifest(dir), ManifestMismatchError);
  fs::remove_all(dir);
}

TEST(Manifest, IdenticalContentGivesIdenticalManifest) {
  const auto a = scratch("det_a"), b = scratch("det_b");
  for (const auto& dir : {a, b}) {
    std::ofstream(dir / "train.src") << "swap A B\n";
    std::ofstream(dir / "train.tgt") << "B A\n";
    write_manifest(dir, {{"seed", 1}});
  }
  EXPECT_EQ(sha256_hex(a / "manifest.json"), sha256_hex(b / "manifest.json"));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(ParamsJson, RoundTripAndValidation) {
  const auto p = GrammarParams::defaults();
  const auto back = params_from_json(to_json(p));
  EXPECT_EQ(back.p_unary, p.p_unary);
  EXPECT_EQ(back.unary_weights, p.unary_weights);
  EXPECT_EQ(back.arg_len_dist, p.arg_len_dist);
  EXPECT_EQ(back.max_arg_len, p.max_arg_len);

  auto broken = to_json(p);
  broken["p_leaf"] = 0.9;
  EXPECT_THROW(params_from_json(broken), Error);
  broken.erase("p_leaf");
  EXPECT_THROW(params_from_json(broken), Error);
}

TEST(ExceptionsJson, RoundTrip) {
  const std::vector<ExceptionEntry> ex{
      {3, syms("reverse echo A B"), syms("A B B"), syms("B B A"), parse_pair("reverse echo")}};
  const auto back = exceptions_from_json(to_json(std::span<const ExceptionEntry>(ex)));
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0].id, 3u);
  EXPECT_EQ(back[0].src, ex[0].src);
  EXPECT_EQ(back[0].exception_tgt, ex[0].exception_tgt);
  EXPECT_EQ(pair_name(back[0].pair), "reverse echo");
  const nlohmann::json wrapped{{"exceptions", to_json(std::span<const ExceptionEntry>(ex))}};
  EXPECT_EQ(exceptions_from_json(wrapped).size(), 1u);
  EXPECT_EQ(exception_overrides(back).at("reverse echo A B"), syms("B B A"));
}

}  // namespace
}  // namespace pcfgset
