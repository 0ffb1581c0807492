#include "pcfgset/syntax_tree.hpp"

#include <algorithm>

#include "pcfgset/error.hpp"

namespace pcfgset {

SyntaxTree SyntaxTree::leaf(SymbolString symbols) {
  if (symbols.empty()) throw EmptyArgumentError("leaf must hold at least one symbol");
  SyntaxTree t;
  t.symbols_ = std::move(symbols);
  return t;
}

SyntaxTree SyntaxTree::apply(FunctionSymbol fn, std::vector<SyntaxTree> args) {
  if (static_cast<int>(args.size()) != fn.arity()) {
    throw ArityMismatchError(fn.name + " expects " + std::to_string(fn.arity()) + " argument(s), got " +
                             std::to_string(args.size()));
  }
  SyntaxTree t;
  t.fn_ = std::move(fn);
  t.args_ = std::move(args);
  return t;
}

void SyntaxTree::set_function(FunctionSymbol fn) {
  if (is_leaf() || fn.arity() != fn_->arity()) throw ArityMismatchError("cannot rebind " + fn.name);
  fn_ = std::move(fn);
}

namespace {

class Parser {
 public:
  Parser(std::span<const Token> tokens, const Lexicon& lexicon) : tokens_(tokens), lexicon_(lexicon) {}

  SyntaxTree parse_all() {
    SyntaxTree t = parse_s();
    if (pos_ != tokens_.size()) throw UnexpectedTokenError(pos_, tokens_[pos_].text);
    return t;
  }

 private:
  SyntaxTree parse_s() {
    if (pos_ >= tokens_.size()) throw UnexpectedEndError();
    const Token& tok = tokens_[pos_];
    switch (tok.kind) {
      case TokenKind::kSeparator:
        throw UnexpectedTokenError(pos_, tok.text);
      case TokenKind::kLiteral: {
        SymbolString run;
        while (pos_ < tokens_.size() && tokens_[pos_].kind == TokenKind::kLiteral) {
          run.push_back(tokens_[pos_++].text);
        }
        return SyntaxTree::leaf(std::move(run));
      }
      case TokenKind::kFunction:
        break;
    }
    const FunctionSymbol* sym = lexicon_.find(tok.text);
    if (sym == nullptr) throw UnknownTokenError(tok.text);
    FunctionSymbol fn = *sym;
    ++pos_;
    std::vector<SyntaxTree> args;
    args.push_back(parse_s());
    if (fn.arity() == 2) {
      if (pos_ >= tokens_.size()) throw UnexpectedEndError();
      if (tokens_[pos_].kind != TokenKind::kSeparator) throw UnexpectedTokenError(pos_, tokens_[pos_].text);
      ++pos_;
      args.push_back(parse_s());
    }
    return SyntaxTree::apply(std::move(fn), std::move(args));
  }

  std::span<const Token> tokens_;
  const Lexicon& lexicon_;
  std::size_t pos_ = 0;
};

void render_into(const SyntaxTree& t, std::vector<Token>& out) {
  if (t.is_leaf()) {
    for (const auto& s : t.symbols()) out.push_back({TokenKind::kLiteral, s});
    return;
  }
  out.push_back({TokenKind::kFunction, t.function().name});
  render_into(t.args()[0], out);
  if (t.args().size() == 2) {
    out.push_back({TokenKind::kSeparator, std::string(kSeparator)});
    render_into(t.args()[1], out);
  }
}

void stats_into(const SyntaxTree& t, int level, SequenceStats& s) {
  if (t.is_leaf()) {
    s.length += static_cast<int>(t.symbols().size());
    s.depth = std::max(s.depth, level);
    return;
  }
  s.num_functions += 1;
  s.length += static_cast<int>(t.args().size());  // function token plus separator for binaries
  for (const auto& c : t.args()) stats_into(c, level + 1, s);
}

}  // namespace

SyntaxTree parse(std::span<const Token> tokens, const Lexicon& lexicon) {
  if (tokens.empty()) throw UnexpectedEndError();
  return Parser(tokens, lexicon).parse_all();
}

SyntaxTree parse(std::span<const std::string> pieces, const Lexicon& lexicon) {
  const auto tokens = tokenize(pieces, lexicon);
  return parse(tokens, lexicon);
}

SyntaxTree parse(std::string_view text, const Lexicon& lexicon) {
  const auto tokens = tokenize(text, lexicon);
  return parse(tokens, lexicon);
}

std::vector<Token> render(const SyntaxTree& tree) {
  std::vector<Token> out;
  render_into(tree, out);
  return out;
}

TokenSeq render_surface(const SyntaxTree& tree) {
  const auto tokens = render(tree);
  return surface(tokens);
}

std::string render_text(const SyntaxTree& tree) {
  const auto s = render_surface(tree);
  return join_tokens(s);
}

SequenceStats stats(const SyntaxTree& tree) {
  SequenceStats s;
  stats_into(tree, 0, s);
  return s;
}

}  // namespace pcfgset
