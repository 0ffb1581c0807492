#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"

#include "pcfgset/error.hpp"
#include "pcfgset/generator.hpp"
#include "pcfgset/naturalise.hpp"
#include "pcfgset/testsuite.hpp"

namespace pcfgset {

class ManifestMismatchError : public Error {
 public:
  using Error::Error;
};

// One space-joined token line per entry, `\n` terminated.
void write_lines(const std::filesystem::path& path, std::span<const TokenSeq> lines);

// `<dir>/<name>.src` and `<dir>/<name>.tgt`.
void write_split(const std::filesystem::path& dir, const std::string& name, std::span<const Sample> samples);

// Samples keep the stored target, which may be an exception target; ids are
// line indices. Throws on unparseable src lines and LineCountMismatchError.
std::vector<Sample> read_split(const std::filesystem::path& dir, const std::string& name);

std::string sha256_hex(const std::filesystem::path& path);

// Hashes every regular file in `dir` except the manifest itself and stores
// them with `meta` in manifest.json.
void write_manifest(const std::filesystem::path& dir, nlohmann::json meta);
nlohmann::json read_manifest(const std::filesystem::path& dir);
// Throws ManifestMismatchError if a listed file is missing or changed.
void verify_manifest(const std::filesystem::path& dir);

void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);

nlohmann::json to_json(const GrammarParams& params);
GrammarParams params_from_json(const nlohmann::json& j);

nlohmann::json to_json(const StatsSummary& s);
nlohmann::json to_json(std::span<const ExceptionEntry> exceptions);
std::vector<ExceptionEntry> exceptions_from_json(const nlohmann::json& j);
// joined src -> exception target, for exception-aware validation.
std::unordered_map<std::string, SymbolString> exception_overrides(std::span<const ExceptionEntry> exceptions);

}  // namespace pcfgset
