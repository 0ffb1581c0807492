#include "pcfgset/lexicon.hpp"

#include <cctype>

#include "pcfgset/error.hpp"

namespace pcfgset {

namespace {

constexpr std::array<std::string_view, 10> kNames = {
    "copy", "reverse", "shift", "echo", "swap", "repeat",
    "append", "prepend", "remove_first", "remove_second"};

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

}  // namespace

std::string_view base_name(BaseFunction fn) noexcept { return kNames[static_cast<std::size_t>(fn)]; }

std::optional<BaseFunction> base_from_name(std::string_view name) noexcept {
  for (std::size_t i = 0; i < kNames.size(); ++i) {
    if (kNames[i] == name) return static_cast<BaseFunction>(i);
  }
  return std::nullopt;
}

Lexicon Lexicon::base_only() {
  Lexicon lex;
  for (auto fn : kAllFunctions) lex.entries_.emplace(std::string(base_name(fn)), FunctionSymbol::of(fn));
  return lex;
}

const Lexicon& Lexicon::standard() {
  static const Lexicon kStandard = [] {
    Lexicon lex = base_only();
    for (auto fn : kAllFunctions) lex.add_synonym(fn, std::string(base_name(fn)) + std::string(kSynonymSuffix));
    return lex;
  }();
  return kStandard;
}

void Lexicon::add_synonym(BaseFunction base, std::string name) {
  if (name.size() <= kSynonymSuffix.size() || !name.ends_with(kSynonymSuffix)) {
    throw Error("synonym name '" + name + "' must end in _syn");
  }
  if (auto it = entries_.find(name); it != entries_.end()) {
    if (it->second.base != base) throw Error("synonym '" + name + "' already bound to another function");
    return;
  }
  entries_.emplace(name, FunctionSymbol{name, base});
}

const FunctionSymbol* Lexicon::find(std::string_view name) const {
  auto it = entries_.find(name);
  return it == entries_.end() ? nullptr : &it->second;
}

std::vector<FunctionSymbol> Lexicon::symbols() const {
  std::vector<FunctionSymbol> out;
  out.reserve(entries_.size());
  for (const auto& [_, sym] : entries_) out.push_back(sym);
  return out;
}

bool is_literal_symbol(std::string_view text) noexcept {
  if (text.empty() || text.size() > 3) return false;
  if (text[0] < 'A' || text[0] > 'Z') return false;
  if (text.size() == 1) return true;
  if (text[1] < '1' || text[1] > '9') return false;
  if (text.size() == 2) return true;
  // Two-digit suffixes run 10..19.
  return text[1] == '1' && text[2] >= '0' && text[2] <= '9';
}

TokenSeq split_tokens(std::string_view text) {
  TokenSeq out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    std::size_t j = i;
    while (j < text.size() && !is_space(text[j])) ++j;
    if (j > i) out.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

std::string join_tokens(std::span<const std::string> tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out.push_back(' ');
    out += t;
  }
  return out;
}

Token classify(std::string_view piece, const Lexicon& lexicon) {
  if (piece == kSeparator) return {TokenKind::kSeparator, std::string(piece)};
  if (lexicon.find(piece) != nullptr) return {TokenKind::kFunction, std::string(piece)};
  if (is_literal_symbol(piece)) return {TokenKind::kLiteral, std::string(piece)};
  throw UnknownTokenError(std::string(piece));
}

std::vector<Token> tokenize(std::span<const std::string> pieces, const Lexicon& lexicon) {
  std::vector<Token> out;
  out.reserve(pieces.size());
  for (const auto& p : pieces) out.push_back(classify(p, lexicon));
  return out;
}

std::vector<Token> tokenize(std::string_view text, const Lexicon& lexicon) {
  const TokenSeq pieces = split_tokens(text);
  if (pieces.empty()) throw Error("cannot tokenize an empty sequence");
  return tokenize(pieces, lexicon);
}

TokenSeq surface(std::span<const Token> tokens) {
  TokenSeq out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(t.text);
  return out;
}

}  // namespace pcfgset
