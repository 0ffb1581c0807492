#include "pcfgset/io.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>

#include "pcfgset/harness.hpp"

namespace pcfgset {

namespace {

constexpr const char* kManifest = "manifest.json";

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

std::size_t count_lines(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::size_t n = 0;
  std::string line;
  while (std::getline(in, line)) ++n;
  return n;
}

}  // namespace

void write_lines(const std::filesystem::path& path, std::span<const TokenSeq> lines) {
  auto out = open_out(path);
  for (const auto& l : lines) out << join_tokens(l) << '\n';
  if (!out) throw Error("write failed for " + path.string());
}

void write_split(const std::filesystem::path& dir, const std::string& name, std::span<const Sample> samples) {
  std::vector<TokenSeq> src, tgt;
  src.reserve(samples.size());
  tgt.reserve(samples.size());
  for (const auto& s : samples) {
    src.push_back(s.src);
    tgt.push_back(s.tgt);
  }
  write_lines(dir / (name + ".src"), src);
  write_lines(dir / (name + ".tgt"), tgt);
}

std::vector<Sample> read_split(const std::filesystem::path& dir, const std::string& name) {
  const auto src = read_lines(dir / (name + ".src"));
  const auto tgt = read_lines(dir / (name + ".tgt"));
  if (src.size() != tgt.size()) throw LineCountMismatchError(src.size(), tgt.size());
  std::vector<Sample> out(src.size());
  std::string failure;
#pragma omp parallel for schedule(dynamic, 256)
  for (std::size_t i = 0; i < src.size(); ++i) {
    auto& s = out[i];
    s.id = i;
    s.src = src[i];
    s.tgt = tgt[i];
    try {
      s.tree = parse(std::span<const std::string>(s.src), Lexicon::standard());
      s.stats = stats(s.tree);
    } catch (const Error& e) {
#pragma omp critical
      if (failure.empty()) failure = name + ".src line " + std::to_string(i + 1) + ": " + e.what();
    }
  }
  if (!failure.empty()) throw Error(failure);
  return out;
}

std::string sha256_hex(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw Error("sha256 unavailable");
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest, &len);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return hex.str();
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

void write_manifest(const std::filesystem::path& dir, nlohmann::json meta) {
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().filename() != kManifest) files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  nlohmann::json listed = nlohmann::json::object();
  for (const auto& f : files) {
    listed[f.filename().string()] = {{"sha256", sha256_hex(f)}, {"lines", count_lines(f)}};
  }
  meta["files"] = std::move(listed);
  write_json(dir / kManifest, meta);
}

nlohmann::json read_manifest(const std::filesystem::path& dir) { return read_json(dir / kManifest); }

void verify_manifest(const std::filesystem::path& dir) {
  const auto m = read_manifest(dir);
  if (!m.contains("files")) throw ManifestMismatchError(dir.string() + "/manifest.json lists no files");
  for (const auto& [name, info] : m["files"].items()) {
    const auto path = dir / name;
    if (!std::filesystem::exists(path)) throw ManifestMismatchError(name + " listed in manifest is missing");
    if (sha256_hex(path) != info.at("sha256").get<std::string>()) {
      throw ManifestMismatchError(name + " does not match its manifest hash");
    }
  }
}

nlohmann::json to_json(const GrammarParams& p) {
  return {{"p_unary", p.p_unary},
          {"p_binary", p.p_binary},
          {"p_leaf", p.p_leaf},
          {"unary_weights", p.unary_weights},
          {"binary_weights", p.binary_weights},
          {"arg_len_dist", p.arg_len_dist},
          {"max_arg_len", p.max_arg_len}};
}

GrammarParams params_from_json(const nlohmann::json& j) {
  GrammarParams p;
  try {
    p.p_unary = j.at("p_unary").get<double>();
    p.p_binary = j.at("p_binary").get<double>();
    p.p_leaf = j.at("p_leaf").get<double>();
    p.unary_weights = j.at("unary_weights").get<std::array<double, 6>>();
    p.binary_weights = j.at("binary_weights").get<std::array<double, 4>>();
    p.arg_len_dist = j.at("arg_len_dist").get<std::vector<double>>();
    p.max_arg_len = j.value("max_arg_len", static_cast<int>(p.arg_len_dist.size()));
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("bad grammar parameters: ") + e.what());
  }
  p.validate();
  return p;
}

nlohmann::json to_json(const StatsSummary& s) {
  auto row = [](double mean, int min, int max) { return nlohmann::json{{"mean", mean}, {"min", min}, {"max", max}}; };
  return {{"count", s.count},
          {"length", row(s.mean_length, s.min_length, s.max_length)},
          {"depth", row(s.mean_depth, s.min_depth, s.max_depth)},
          {"num_functions", row(s.mean_functions, s.min_functions, s.max_functions)}};
}

nlohmann::json to_json(std::span<const ExceptionEntry> exceptions) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& e : exceptions) {
    arr.push_back({{"id", e.id},
                   {"src", join_tokens(e.src)},
                   {"original_tgt", join_tokens(e.original_tgt)},
                   {"exception_tgt", join_tokens(e.exception_tgt)},
                   {"pair", pair_name(e.pair)}});
  }
  return arr;
}

std::vector<ExceptionEntry> exceptions_from_json(const nlohmann::json& j) {
  const auto& arr = j.is_object() ? j.at("exceptions") : j;
  std::vector<ExceptionEntry> out;
  try {
    for (const auto& e : arr) {
      out.push_back({e.at("id").get<std::uint64_t>(), split_tokens(e.at("src").get<std::string>()),
                     split_tokens(e.at("original_tgt").get<std::string>()),
                     split_tokens(e.at("exception_tgt").get<std::string>()),
                     parse_pair(e.at("pair").get<std::string>())});
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("bad exception sidecar: ") + e.what());
  }
  return out;
}

std::unordered_map<std::string, SymbolString> exception_overrides(std::span<const ExceptionEntry> exceptions) {
  std::unordered_map<std::string, SymbolString> out;
  for (const auto& e : exceptions) out[join_tokens(e.src)] = e.exception_tgt;
  return out;
}

}  // namespace pcfgset
