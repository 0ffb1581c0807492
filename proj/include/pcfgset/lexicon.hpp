#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pcfgset {

// The ten string-edit operations of the task.
enum class BaseFunction : std::uint8_t {
  kCopy,
  kReverse,
  kShift,
  kEcho,
  kSwap,
  kRepeat,
  kAppend,
  kPrepend,
  kRemoveFirst,
  kRemoveSecond,
};

inline constexpr std::array<BaseFunction, 10> kAllFunctions = {
    BaseFunction::kCopy,   BaseFunction::kReverse, BaseFunction::kShift,
    BaseFunction::kEcho,   BaseFunction::kSwap,    BaseFunction::kRepeat,
    BaseFunction::kAppend, BaseFunction::kPrepend, BaseFunction::kRemoveFirst,
    BaseFunction::kRemoveSecond};

inline constexpr std::array<BaseFunction, 6> kUnaryFunctions = {
    BaseFunction::kCopy, BaseFunction::kReverse, BaseFunction::kShift,
    BaseFunction::kEcho, BaseFunction::kSwap,    BaseFunction::kRepeat};

inline constexpr std::array<BaseFunction, 4> kBinaryFunctions = {
    BaseFunction::kAppend, BaseFunction::kPrepend, BaseFunction::kRemoveFirst,
    BaseFunction::kRemoveSecond};

constexpr int arity(BaseFunction fn) noexcept {
  return static_cast<std::uint8_t>(fn) >= static_cast<std::uint8_t>(BaseFunction::kAppend) ? 2 : 1;
}

// Position of fn inside kUnaryFunctions or kBinaryFunctions.
constexpr std::size_t class_index(BaseFunction fn) noexcept {
  const auto i = static_cast<std::size_t>(fn);
  return arity(fn) == 1 ? i : i - kUnaryFunctions.size();
}

std::string_view base_name(BaseFunction fn) noexcept;
std::optional<BaseFunction> base_from_name(std::string_view name) noexcept;

// A function token: either a base function or a registered synonym sharing
// the base function's arity and semantics.
struct FunctionSymbol {
  std::string name;
  BaseFunction base = BaseFunction::kCopy;

  int arity() const noexcept { return pcfgset::arity(base); }
  bool is_synonym() const { return name != base_name(base); }

  static FunctionSymbol of(BaseFunction fn) { return {std::string(base_name(fn)), fn}; }

  friend bool operator==(const FunctionSymbol&, const FunctionSymbol&) = default;
};

inline constexpr std::string_view kSeparator = ",";
inline constexpr std::string_view kSynonymSuffix = "_syn";

// Registry of function names recognised by the tokenizer.
class Lexicon {
 public:
  // Only the ten base functions.
  static Lexicon base_only();
  // Base functions plus "<name>_syn" for each of them.
  static const Lexicon& standard();

  // Registers `name` as a synonym of `base`. Names must end in "_syn" and must
  // not collide with an existing entry bound to a different base function.
  void add_synonym(BaseFunction base, std::string name);

  const FunctionSymbol* find(std::string_view name) const;
  std::vector<FunctionSymbol> symbols() const;

 private:
  std::map<std::string, FunctionSymbol, std::less<>> entries_;
};

// One uppercase letter optionally followed by an integer suffix 1..19.
bool is_literal_symbol(std::string_view text) noexcept;

enum class TokenKind : std::uint8_t { kFunction, kLiteral, kSeparator };

struct Token {
  TokenKind kind = TokenKind::kLiteral;
  std::string text;

  friend bool operator==(const Token&, const Token&) = default;
};

using TokenSeq = std::vector<std::string>;

// Splits on runs of ASCII whitespace.
TokenSeq split_tokens(std::string_view text);
std::string join_tokens(std::span<const std::string> tokens);

Token classify(std::string_view piece, const Lexicon& lexicon = Lexicon::standard());

// Throws UnknownTokenError for pieces that are neither a registered function,
// the separator, nor a literal symbol.
std::vector<Token> tokenize(std::string_view text, const Lexicon& lexicon = Lexicon::standard());
std::vector<Token> tokenize(std::span<const std::string> pieces,
                            const Lexicon& lexicon = Lexicon::standard());

TokenSeq surface(std::span<const Token> tokens);

}  // namespace pcfgset
