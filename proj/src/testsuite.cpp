#include "pcfgset/testsuite.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

#include "pcfgset/error.hpp"
#include "pcfgset/interpreter.hpp"

namespace pcfgset {

namespace {

bool is_named(const SyntaxTree& node, BaseFunction fn) {
  return !node.is_leaf() && node.function().name == base_name(fn);
}

std::size_t round_count(double x) { return static_cast<std::size_t>(std::llround(x)); }

std::uint64_t next_id(std::span<const Sample> samples) {
  std::uint64_t id = 0;
  for (const auto& s : samples) id = std::max(id, s.id + 1);
  return id;
}

SyntaxTree random_leaf(const GrammarParams& params, Rng& rng) {
  const auto len = rng.categorical(params.arg_len_dist) + 1;
  return SyntaxTree::leaf(SymbolString(len, "A"));
}

// Gives every literal slot a distinct placeholder so that structural
// comparisons of targets do not depend on which symbols are drawn later.
void distinct_literals(SyntaxTree& tree) {
  const Alphabet alphabet;
  std::size_t next = 0;
  for_each_leaf_mut(tree, [&](SyntaxTree& leaf) {
    for (auto& s : leaf.symbols()) s = alphabet[next++ % alphabet.size()];
  });
}

SymbolString eval_with_rules(const SyntaxTree& t, std::span<const ExceptionRule> rules) {
  if (t.is_leaf()) return t.symbols();
  const auto& first = t.args().front();
  for (const auto& rule : rules) {
    if (!is_named(t, rule.pair.outer) || !is_named(first, rule.pair.inner)) continue;
    std::vector<SymbolString> inner_args;
    for (const auto& c : first.args()) inner_args.push_back(eval_with_rules(c, rules));
    std::vector<SymbolString> outer_args{apply_function(rule.remapped.inner, inner_args)};
    for (std::size_t i = 1; i < t.args().size(); ++i) outer_args.push_back(eval_with_rules(t.args()[i], rules));
    return apply_function(rule.remapped.outer, outer_args);
  }
  std::vector<SymbolString> args;
  for (const auto& c : t.args()) args.push_back(eval_with_rules(c, rules));
  return apply_function(t.function(), args);
}

void check_rules(std::span<const ExceptionRule> rules) {
  for (const auto& r : rules) {
    if (arity(r.pair.outer) != arity(r.remapped.outer) || arity(r.pair.inner) != arity(r.remapped.inner)) {
      throw Error("exception rule " + pair_name(r.pair) + " -> " + pair_name(r.remapped) + " changes arity");
    }
  }
}

int height(const SyntaxTree& t) {
  if (t.is_leaf()) return 0;
  int h = 0;
  for (const auto& c : t.args()) h = std::max(h, height(c));
  return h + 1;
}

struct ApplyNode {
  const SyntaxTree* node;
  std::vector<int> path;
  int height;
  std::size_t order;
};

void collect_applies(const SyntaxTree& t, std::vector<int>& path, std::vector<ApplyNode>& out) {
  if (t.is_leaf()) return;
  out.push_back({&t, path, height(t), out.size()});
  for (std::size_t i = 0; i < t.args().size(); ++i) {
    path.push_back(static_cast<int>(i));
    collect_applies(t.args()[i], path, out);
    path.pop_back();
  }
}

}  // namespace

std::string pair_name(const HeldOutPair& pair) {
  return std::string(base_name(pair.outer)) + " " + std::string(base_name(pair.inner));
}

HeldOutPair parse_pair(std::string_view text) {
  const auto parts = split_tokens(text);
  if (parts.size() != 2) throw Error("function pair '" + std::string(text) + "' must name two functions");
  const auto outer = base_from_name(parts[0]);
  const auto inner = base_from_name(parts[1]);
  if (!outer || !inner) throw Error("function pair '" + std::string(text) + "' names an unknown base function");
  return {*outer, *inner};
}

std::vector<HeldOutPair> default_held_out_pairs() {
  return {{BaseFunction::kSwap, BaseFunction::kRepeat},
          {BaseFunction::kAppend, BaseFunction::kRemoveSecond},
          {BaseFunction::kRepeat, BaseFunction::kRemoveSecond},
          {BaseFunction::kAppend, BaseFunction::kSwap}};
}

std::size_t count_pair(const TokenSeq& src, const HeldOutPair& pair) {
  const auto outer = base_name(pair.outer);
  const auto inner = base_name(pair.inner);
  std::size_t n = 0;
  for (std::size_t i = 0; i + 1 < src.size(); ++i) n += src[i] == outer && src[i + 1] == inner;
  return n;
}

bool contains_any_pair(const TokenSeq& src, std::span<const HeldOutPair> pairs) {
  return std::any_of(pairs.begin(), pairs.end(), [&](const HeldOutPair& p) { return count_pair(src, p) > 0; });
}

StatsSummary summarize(std::span<const Sample> samples) {
  StatsSummary s;
  s.count = samples.size();
  if (samples.empty()) return s;
  s.min_length = s.min_depth = s.min_functions = std::numeric_limits<int>::max();
  double len = 0, dep = 0, fns = 0;
  for (const auto& x : samples) {
    const auto& st = x.stats;
    len += st.length;
    dep += st.depth;
    fns += st.num_functions;
    s.min_length = std::min(s.min_length, st.length);
    s.min_depth = std::min(s.min_depth, st.depth);
    s.min_functions = std::min(s.min_functions, st.num_functions);
    s.max_length = std::max(s.max_length, st.length);
    s.max_depth = std::max(s.max_depth, st.depth);
    s.max_functions = std::max(s.max_functions, st.num_functions);
  }
  const double n = static_cast<double>(samples.size());
  s.mean_length = len / n;
  s.mean_depth = dep / n;
  s.mean_functions = fns / n;
  return s;
}

TestSplit systematicity_split(std::span<const Sample> corpus, std::span<const HeldOutPair> pairs,
                              std::size_t test_size, Rng& rng) {
  TestSplit out;
  std::vector<std::size_t> positives;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (contains_any_pair(corpus[i].src, pairs)) {
      positives.push_back(i);
    } else {
      out.train.push_back(corpus[i]);
    }
  }
  if (pairs.empty()) return out;
  if (positives.size() < test_size) {
    throw InsufficientPositivesError("need " + std::to_string(test_size) + " samples containing a held-out pair, found " +
                                     std::to_string(positives.size()));
  }
  rng.shuffle(positives.begin(), positives.end());
  positives.resize(test_size);
  std::sort(positives.begin(), positives.end());
  for (auto i : positives) out.test.push_back(corpus[i]);
  out.discarded = corpus.size() - out.train.size() - out.test.size();
  return out;
}

TestSplit productivity_split(std::span<const Sample> corpus, int threshold) {
  TestSplit out;
  for (const auto& s : corpus) (s.stats.num_functions <= threshold ? out.train : out.test).push_back(s);
  if (out.train.empty() || out.test.empty()) {
    throw EmptySideError("no samples with " + std::string(out.train.empty() ? "at most " : "more than ") +
                         std::to_string(threshold) + " functions");
  }
  return out;
}

SynonymMap::SynonymMap(std::map<std::string, std::string> entries) : entries_(std::move(entries)) {
  for (const auto& [base, syn] : entries_) {
    if (!base_from_name(base)) throw Error("'" + base + "' is not a base function");
    if (syn != base + std::string(kSynonymSuffix)) {
      throw Error("synonym for '" + base + "' must be named '" + base + std::string(kSynonymSuffix) + "'");
    }
  }
}

SynonymMap SynonymMap::defaults() { return for_functions("swap,repeat,append,remove_second"); }

SynonymMap SynonymMap::for_functions(std::string_view comma_list) {
  std::map<std::string, std::string> entries;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) entries[current] = current + std::string(kSynonymSuffix);
    current.clear();
  };
  for (char c : comma_list) {
    if (c == ',') {
      flush();
    } else if (c != ' ') {
      current += c;
    }
  }
  flush();
  return SynonymMap(std::move(entries));
}

const std::string* SynonymMap::find(const std::string& base) const {
  auto it = entries_.find(base);
  return it == entries_.end() ? nullptr : &it->second;
}

SubstitutivityResult substitutivity_equal(std::span<const Sample> train, const SynonymMap& map, Rng& rng) {
  SubstitutivityResult out;
  out.train.assign(train.begin(), train.end());
  for (const auto& [base, syn] : map.entries()) {
    std::vector<std::pair<std::size_t, std::size_t>> sites;
    for (std::size_t i = 0; i < out.train.size(); ++i) {
      const auto& src = out.train[i].src;
      for (std::size_t j = 0; j < src.size(); ++j)
        if (src[j] == base) sites.emplace_back(i, j);
    }
    const std::size_t k = sites.size() / 2;
    rng.shuffle(sites.begin(), sites.end());
    for (std::size_t s = 0; s < k; ++s) out.train[sites[s].first].src[sites[s].second] = syn;
    out.audit.occurrences[base] = sites.size();
    out.audit.rewritten[base] = k;
  }
  for (auto& s : out.train) s.tree = parse(std::span<const std::string>(s.src));
  return out;
}

SubstitutivityResult substitutivity_primitive(std::span<const Sample> train, const SynonymMap& map,
                                              double fraction, const Alphabet& alphabet, Rng& rng,
                                              const GrammarParams& params) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw Error("primitive synonym fraction must be in (0, 1)");
  params.validate();
  SubstitutivityResult out;
  out.train.assign(train.begin(), train.end());
  const std::size_t per_function = round_count(fraction * static_cast<double>(train.size()));
  CorpusBuilder builder(alphabet, rng.substream(0));
  for (const auto& s : train) builder.reserve(s);
  builder.set_next_id(next_id(train));
  for (const auto& [base, syn] : map.entries()) {
    const FunctionSymbol fn{syn, *base_from_name(base)};
    const std::size_t start = builder.size();
    std::size_t failures = 0;
    while (builder.size() - start < per_function) {
      std::vector<SyntaxTree> args;
      for (int a = 0; a < fn.arity(); ++a) args.push_back(random_leaf(params, rng));
      if (!builder.add(SyntaxTree::apply(fn, std::move(args))) && ++failures > 1000 * (per_function + 1)) {
        throw ExhaustedUniqueArgumentsError("cannot draw distinct primitive samples for " + syn);
      }
    }
    out.audit.added[base] = per_function;
  }
  for (auto& s : builder.take()) out.train.push_back(std::move(s));
  return out;
}

ConsistencyPairs make_consistency_pairs(std::span<const Sample> testset, const SynonymMap& map) {
  ConsistencyPairs out;
  for (const auto& s : testset) {
    TokenSeq syn = s.src;
    bool changed = false;
    for (auto& tok : syn) {
      if (const auto* replacement = map.find(tok)) {
        tok = *replacement;
        changed = true;
      }
    }
    if (!changed) {
      ++out.skipped;
      continue;
    }
    out.pairs.push_back({s.id, s.src, std::move(syn), s.tgt});
  }
  return out;
}

std::vector<ExceptionRule> default_exception_rules() {
  using F = BaseFunction;
  return {{{F::kReverse, F::kEcho}, {F::kEcho, F::kCopy}},
          {{F::kPrepend, F::kRemoveFirst}, {F::kRemoveSecond, F::kAppend}},
          {{F::kEcho, F::kRemoveFirst}, {F::kCopy, F::kAppend}},
          {{F::kPrepend, F::kReverse}, {F::kRemoveSecond, F::kEcho}}};
}

SymbolString exception_evaluate(const SyntaxTree& tree, std::span<const ExceptionRule> rules) {
  check_rules(rules);
  return eval_with_rules(tree, rules);
}

ExceptionResult exceptions_apply(std::span<const Sample> train, std::span<const ExceptionRule> rules,
                                 double percentage, const Alphabet& alphabet, Rng& rng,
                                 const GrammarParams& params) {
  if (!(percentage >= 0.0 && percentage < 1.0)) throw Error("exception percentage must be in [0, 1)");
  check_rules(rules);
  params.validate();
  ExceptionResult out;

  std::unordered_map<std::string, std::size_t> occurrences;
  for (const auto& s : train)
    for (const auto& tok : s.src) ++occurrences[tok];

  // Pair occurrences per sample and rule.
  std::vector<std::vector<std::size_t>> hits(train.size(), std::vector<std::size_t>(rules.size(), 0));
  std::vector<std::size_t> total(train.size(), 0);
  for (std::size_t i = 0; i < train.size(); ++i) {
    for (std::size_t r = 0; r < rules.size(); ++r) {
      hits[i][r] = count_pair(train[i].src, rules[r].pair);
      total[i] += hits[i][r];
    }
  }

  // Which rule each kept exception sample belongs to; -1 for untouched samples.
  std::vector<int> chosen(train.size(), -1);
  CorpusBuilder builder(alphabet, rng.substream(0));
  for (const auto& s : train) builder.reserve(s);
  builder.set_next_id(next_id(train));
  std::vector<std::pair<std::size_t, Sample>> synthesised;

  for (std::size_t r = 0; r < rules.size(); ++r) {
    const auto& rule = rules[r];
    ExceptionAudit audit{rule.pair};
    audit.outer_occurrences = occurrences[std::string(base_name(rule.pair.outer))];
    audit.inner_occurrences = occurrences[std::string(base_name(rule.pair.inner))];
    audit.target = round_count(percentage * static_cast<double>(std::min(audit.outer_occurrences, audit.inner_occurrences)));

    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < train.size(); ++i) {
      if (total[i] == 1 && hits[i][r] == 1 && eval_with_rules(train[i].tree, rules) != train[i].tgt) {
        candidates.push_back(i);
      }
    }
    Rng pick = rng.substream(1 + r);
    pick.shuffle(candidates.begin(), candidates.end());
    audit.from_train = std::min(audit.target, candidates.size());
    for (std::size_t c = 0; c < audit.from_train; ++c) chosen[candidates[c]] = static_cast<int>(r);

    std::size_t failures = 0;
    while (audit.from_train + audit.synthesised < audit.target) {
      std::vector<SyntaxTree> inner_args, outer_args;
      for (int a = 0; a < arity(rule.pair.inner); ++a) inner_args.push_back(random_leaf(params, pick));
      outer_args.push_back(SyntaxTree::apply(rule.pair.inner, std::move(inner_args)));
      for (int a = 1; a < arity(rule.pair.outer); ++a) outer_args.push_back(random_leaf(params, pick));
      SyntaxTree tree = SyntaxTree::apply(rule.pair.outer, std::move(outer_args));
      SyntaxTree probe = tree;
      distinct_literals(probe);
      const bool differs = eval_with_rules(probe, rules) != evaluate(probe);
      if (!differs || !builder.add(std::move(tree))) {
        if (++failures > 1000 * (audit.target + 1)) {
          throw ExhaustedUniqueArgumentsError("cannot synthesise exception samples for " + pair_name(rule.pair));
        }
        continue;
      }
      ++audit.synthesised;
    }
    for (auto& s : builder.take()) synthesised.emplace_back(r, std::move(s));
    out.audit.push_back(audit);
  }

  auto record = [&](Sample s, std::size_t r) {
    ExceptionEntry e;
    e.id = s.id;
    e.src = s.src;
    e.original_tgt = s.tgt;
    e.exception_tgt = eval_with_rules(s.tree, rules);
    e.pair = rules[r].pair;
    s.tgt = e.exception_tgt;
    out.exceptions.push_back(std::move(e));
    out.train.push_back(std::move(s));
  };
  for (std::size_t i = 0; i < train.size(); ++i) {
    if (total[i] == 0) {
      out.train.push_back(train[i]);
    } else if (chosen[i] >= 0) {
      record(train[i], static_cast<std::size_t>(chosen[i]));
    } else {
      for (std::size_t r = 0; r < rules.size(); ++r)
        if (hits[i][r] > 0) ++out.audit[r].removed;
    }
  }
  for (auto& [r, s] : synthesised) record(std::move(s), r);
  return out;
}

std::string placeholder(std::size_t step_index) { return "<r" + std::to_string(step_index + 1) + ">"; }

UnrollPlan build_unroll_plan(const SyntaxTree& tree) {
  if (tree.is_leaf()) throw Error("unrolling needs at least one function application");
  std::vector<ApplyNode> nodes;
  std::vector<int> path;
  collect_applies(tree, path, nodes);
  std::stable_sort(nodes.begin(), nodes.end(), [](const ApplyNode& a, const ApplyNode& b) {
    return a.height != b.height ? a.height < b.height : a.order < b.order;
  });
  std::unordered_map<const SyntaxTree*, std::size_t> step_of;
  UnrollPlan plan;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const SyntaxTree& node = *nodes[i].node;
    step_of[&node] = i;
    UnrollStep step;
    step.path = nodes[i].path;
    step.src.push_back(node.function().name);
    for (std::size_t a = 0; a < node.args().size(); ++a) {
      if (a > 0) step.src.emplace_back(kSeparator);
      const auto& child = node.args()[a];
      if (child.is_leaf()) {
        step.src.insert(step.src.end(), child.symbols().begin(), child.symbols().end());
      } else {
        step.src.push_back(placeholder(step_of.at(&child)));
      }
    }
    plan.steps.push_back(std::move(step));
  }
  return plan;
}

TokenSeq instantiate_step(const UnrollPlan& plan, std::size_t index, std::span<const TokenSeq> outputs) {
  TokenSeq out;
  for (const auto& tok : plan.steps.at(index).src) {
    if (tok.size() > 3 && tok.starts_with("<r") && tok.back() == '>') {
      const std::size_t ref = std::stoul(tok.substr(2, tok.size() - 3)) - 1;
      if (ref >= index || ref >= outputs.size()) throw Error("unroll step refers to a later step");
      out.insert(out.end(), outputs[ref].begin(), outputs[ref].end());
    } else {
      out.push_back(tok);
    }
  }
  return out;
}

TokenSeq execute_plan(const UnrollPlan& plan, const std::function<TokenSeq(const TokenSeq&)>& model) {
  std::vector<TokenSeq> outputs;
  outputs.reserve(plan.steps.size());
  for (std::size_t i = 0; i < plan.steps.size(); ++i) outputs.push_back(model(instantiate_step(plan, i, outputs)));
  return outputs.back();
}

}  // namespace pcfgset
