// Command-line front end: corpus generation, naturalisation, test
// construction, evaluation, validation and an oracle line server.

#include <omp.h>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <limits>
#include <regex>
#include <set>

#include "CLI11.hpp"
#include "pcfgset/harness.hpp"
#include "pcfgset/interpreter.hpp"
#include "pcfgset/io.hpp"
#include "pcfgset/kernels.hpp"
#include "pcfgset/metrics.hpp"
#include "pcfgset/naturalise.hpp"
#include "pcfgset/testsuite.hpp"

namespace fs = std::filesystem;
using namespace pcfgset;

namespace {

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& seed) {
  if (seed) return *seed;
  if (const char* env = std::getenv("PCFGSET_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw Error(std::string("PCFGSET_SEED='") + env + "' is not an integer");
    }
  }
  throw Error("a seed is required: pass --seed or set PCFGSET_SEED");
}

std::vector<std::string> split_list(const std::string& text, char sep = ',') {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(text);
  while (std::getline(in, cur, sep)) {
    const auto a = cur.find_first_not_of(' ');
    const auto b = cur.find_last_not_of(' ');
    if (a != std::string::npos) out.push_back(cur.substr(a, b - a + 1));
  }
  return out;
}

std::vector<HeldOutPair> parse_pairs(const std::string& text) {
  std::vector<HeldOutPair> out;
  for (const auto& p : split_list(text)) out.push_back(parse_pair(p));
  return out;
}

std::vector<int> parse_range(const std::string& text) {
  std::vector<int> out;
  for (const auto& part : split_list(text)) {
    const auto dash = part.find('-');
    if (dash == std::string::npos) {
      out.push_back(std::stoi(part));
    } else {
      for (int v = std::stoi(part.substr(0, dash)); v <= std::stoi(part.substr(dash + 1)); ++v) out.push_back(v);
    }
  }
  return out;
}

void print_stats(const std::string& name, const StatsSummary& s) {
  std::printf("  %-10s n=%-7zu length %6.2f [%d, %d]  depth %5.2f [%d, %d]  functions %5.2f [%d, %d]\n",
              name.c_str(), s.count, s.mean_length, s.min_length, s.max_length, s.mean_depth, s.min_depth,
              s.max_depth, s.mean_functions, s.min_functions, s.max_functions);
}

std::vector<TokenSeq> srcs_of(std::span<const Sample> samples) {
  std::vector<TokenSeq> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(s.src);
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

std::string format_double(double x) {
  std::ostringstream s;
  s.precision(10);
  s << x;
  return s.str();
}

PartitionConfig parse_increments(const std::string& text) {
  const auto parts = split_list(text);
  if (parts.size() != 2) throw Error("--increments expects '<length>,<depth>'");
  return {std::stoi(parts[0]), std::stoi(parts[1])};
}

nlohmann::json config_json(const PartitionConfig& c) {
  return {{"length_increment", c.length_increment}, {"depth_increment", c.depth_increment}};
}

// --- generate ------------------------------------------------------------

struct GenerateArgs {
  std::optional<std::uint64_t> seed;
  std::size_t size = 100000;
  std::string out;
  std::string params;
  std::string spec = PCFGSET_DATA_DIR "/reference_distribution.csv";
  std::string increments;
  bool plain = false;
  std::size_t alphabet_size = kStandardAlphabetSize;
};

// `params_doc` becomes params.json; it always holds "params" and, for a
// naturalised corpus, the partition "config" to reuse with `generate --params`.
void write_corpus(const fs::path& out, Corpus& corpus, std::uint64_t seed, const nlohmann::json& params_doc,
                  nlohmann::json meta) {
  Rng split_rng = Rng(seed).substream(2);
  split_corpus(corpus, {}, split_rng);
  fs::create_directories(out);
  write_split(out, "corpus", corpus.samples);
  for (const auto& [name, ids] : corpus.splits) write_split(out, name, corpus.split(name));
  write_json(out / "params.json", params_doc);
  meta["seed"] = seed;
  meta["size"] = corpus.samples.size();
  for (const auto& [name, ids] : corpus.splits) meta["splits"][name] = ids.size();
  write_manifest(out, std::move(meta));
  std::printf("wrote %zu samples to %s\n", corpus.samples.size(), out.string().c_str());
  print_stats("corpus", summarize(corpus.samples));
}

int cmd_generate(const GenerateArgs& a) {
  const auto seed = resolve_seed(a.seed);
  GrammarParams params = GrammarParams::defaults();
  PartitionConfig config = kDefaultPartitionConfig;
  if (!a.params.empty()) {
    const auto j = read_json(a.params);
    params = params_from_json(j.contains("params") ? j["params"] : j);
    if (j.contains("config")) {
      config = {j["config"].at("length_increment").get<int>(), j["config"].at("depth_increment").get<int>()};
    }
  }
  if (!a.increments.empty()) config = parse_increments(a.increments);
  const Alphabet alphabet(a.alphabet_size);
  nlohmann::json meta{{"kind", "corpus"}, {"params", to_json(params)}, {"alphabet_size", a.alphabet_size}};
  Corpus corpus;
  if (a.plain) {
    corpus = generate_corpus(params, a.size, alphabet, Rng(seed).substream(1));
    meta["naturalised"] = false;
  } else {
    const auto spec = DistributionSpec::load(a.spec);
    corpus = generate_naturalised_corpus(params, spec, config, a.size, alphabet, Rng(seed).substream(1));
    meta["naturalised"] = true;
    meta["spec_sha256"] = sha256_hex(a.spec);
    meta["config"] = config_json(config);
  }
  corpus.params = params;
  nlohmann::json doc{{"params", to_json(params)}};
  if (!a.plain) doc["config"] = config_json(config);
  write_corpus(a.out, corpus, seed, doc, std::move(meta));
  return 0;
}

// --- naturalise ----------------------------------------------------------

struct NaturaliseArgs {
  std::optional<std::uint64_t> seed;
  std::string spec = PCFGSET_DATA_DIR "/reference_distribution.csv";
  std::string out;
  std::size_t size = 100000;
  std::size_t sample_size = 200000;
  int max_iters = 5;
  double epsilon = 1e-3;
};

int cmd_naturalise(const NaturaliseArgs& a) {
  const auto seed = resolve_seed(a.seed);
  const auto spec = DistributionSpec::load(a.spec);
  NaturaliseOptions opt;
  opt.random_sample_size = a.sample_size;
  opt.regenerate_size = a.sample_size;
  opt.max_iters = a.max_iters;
  opt.epsilon = a.epsilon;
  NaturaliseResult res;
  bool refit = true;
  try {
    fit_gaussian(spec);
  } catch (const DegenerateCovarianceError&) {
    // Nothing to fit against; the corpus is still subsampled onto the
    // reference's cells at the finest increments.
    refit = false;
    std::fprintf(stderr, "note: reference has no spread in length or depth; parameters are not refitted\n");
    res.params = GrammarParams::defaults();
    res.config = PartitionConfig{1, 1};
    res.initial_kl = res.final_kl = std::numeric_limits<double>::quiet_NaN();
  }
  if (refit) res = naturalise_pipeline(spec, opt, Rng(seed));
  const fs::path out(a.out);
  fs::create_directories(out);

  std::ostringstream trace;
  trace << "iteration,length_increment,depth_increment,kl,selected,accepted\n";
  for (const auto& row : res.trace) {
    trace << row.iteration << ',' << row.config.length_increment << ',' << row.config.depth_increment << ','
          << format_double(row.kl) << ',' << row.selected << ',' << (row.accepted ? 1 : 0) << '\n';
  }
  write_text(out / "kl_trace.csv", trace.str());
  const nlohmann::json doc{{"params", to_json(res.params)},
                           {"config", config_json(res.config)},
                           {"initial_kl", refit ? nlohmann::json(res.initial_kl) : nlohmann::json(nullptr)},
                           {"final_kl", refit ? nlohmann::json(res.final_kl) : nlohmann::json(nullptr)}};
  write_json(out / "params.json", doc);
  std::printf("initial KL %.6f, final KL %.6f, increments (%d,%d)\n", res.initial_kl, res.final_kl,
              res.config.length_increment, res.config.depth_increment);
  for (const auto& row : res.trace) {
    std::printf("  iteration %d (%d,%d) KL %.6f selected %zu%s\n", row.iteration, row.config.length_increment,
                row.config.depth_increment, row.kl, row.selected, row.accepted ? "" : " rejected");
  }

  nlohmann::json meta{{"kind", "naturalised"},
                      {"params", to_json(res.params)},
                      {"config", config_json(res.config)},
                      {"spec_sha256", sha256_hex(a.spec)},
                      {"naturalised", true}};
  if (a.size == 0) {
    meta["seed"] = seed;
    write_manifest(out, std::move(meta));
    return 0;
  }
  const Alphabet alphabet;
  Corpus corpus = generate_naturalised_corpus(res.params, spec, res.config, a.size, alphabet, Rng(seed).substream(1));
  corpus.params = res.params;
  write_corpus(out, corpus, seed, doc, std::move(meta));
  return 0;
}

// --- testbuild -----------------------------------------------------------

struct TestbuildArgs {
  std::string test;
  std::string base;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string pairs = "swap repeat,append remove_second,repeat remove_second,append swap";
  std::size_t test_size = 10000;
  int threshold = 8;
  std::string synonyms = "swap,repeat,append,remove_second";
  double fraction = 0.001;
  std::vector<std::string> exception_pct{"0.0001", "0.0005", "0.001", "0.005"};
};

void write_consistency(const fs::path& out, std::span<const Sample> test, const SynonymMap& map) {
  const auto pairs = make_consistency_pairs(test, map);
  std::vector<TokenSeq> base, syn, tgt;
  for (const auto& p : pairs.pairs) {
    base.push_back(p.src_base);
    syn.push_back(p.src_syn);
    tgt.push_back(p.tgt);
  }
  write_lines(out / "consistency_base.src", base);
  write_lines(out / "consistency_base.tgt", tgt);
  write_lines(out / "consistency_syn.src", syn);
  write_lines(out / "consistency_syn.tgt", tgt);
  std::printf("  consistency pairs %zu (skipped %zu without a mapped function)\n", pairs.pairs.size(), pairs.skipped);
}

nlohmann::json synonyms_json(const SynonymMap& map) { return map.entries(); }

int cmd_testbuild(const TestbuildArgs& a) {
  const auto seed = resolve_seed(a.seed);
  const fs::path base(a.base), out(a.out);
  verify_manifest(base);
  fs::create_directories(out);
  nlohmann::json meta{{"kind", "testbuild"}, {"test", a.test}, {"seed", seed},
                      {"base_manifest_sha256", sha256_hex(base / "manifest.json")}};
  nlohmann::json audit;
  Rng rng(seed);
  const Alphabet alphabet;
  const auto base_meta = read_manifest(base);
  const GrammarParams params =
      base_meta.contains("params") ? params_from_json(base_meta["params"]) : GrammarParams::defaults();

  if (a.test == "systematicity") {
    const auto corpus = read_split(base, "corpus");
    const auto pairs = parse_pairs(a.pairs);
    const auto split = systematicity_split(corpus, pairs, a.test_size, rng);
    write_split(out, "train", split.train);
    write_split(out, "test", split.test);
    nlohmann::json pj = nlohmann::json::array();
    for (const auto& p : pairs) pj.push_back(pair_name(p));
    write_json(out / "pairs.json", pj);
    audit = {{"train", to_json(summarize(split.train))}, {"test", to_json(summarize(split.test))},
             {"discarded", split.discarded}};
    std::printf("systematicity: train %zu, test %zu, discarded positives %zu\n", split.train.size(),
                split.test.size(), split.discarded);
    print_stats("train", summarize(split.train));
    print_stats("test", summarize(split.test));
  } else if (a.test == "productivity") {
    const auto corpus = read_split(base, "corpus");
    const auto split = productivity_split(corpus, a.threshold);
    write_split(out, "train", split.train);
    write_split(out, "test", split.test);
    audit = {{"threshold", a.threshold},
             {"train", to_json(summarize(split.train))},
             {"test", to_json(summarize(split.test))}};
    std::printf("productivity (threshold %d): train %zu, test %zu\n", a.threshold, split.train.size(),
                split.test.size());
    print_stats("train", summarize(split.train));
    print_stats("test", summarize(split.test));
  } else if (a.test == "substitutivity-ed" || a.test == "substitutivity-prim") {
    const auto train = read_split(base, "train");
    const auto test = read_split(base, "test");
    const auto map = SynonymMap::for_functions(a.synonyms);
    const bool ed = a.test == "substitutivity-ed";
    const auto r = ed ? substitutivity_equal(train, map, rng)
                      : substitutivity_primitive(train, map, a.fraction, alphabet, rng, params);
    write_split(out, "train", r.train);
    write_split(out, "test", test);
    write_consistency(out, test, map);
    write_json(out / "synonyms.json", synonyms_json(map));
    audit = {{"occurrences", r.audit.occurrences}, {"rewritten", r.audit.rewritten}, {"added", r.audit.added},
             {"train", to_json(summarize(r.train))}};
    std::printf("%s: train %zu\n", a.test.c_str(), r.train.size());
    for (const auto& [fn, syn] : map.entries()) {
      if (ed) {
        std::printf("  %-14s %zu of %zu occurrences rewritten\n", fn.c_str(), r.audit.rewritten.at(fn),
                    r.audit.occurrences.at(fn));
      } else {
        std::printf("  %-14s %zu primitive samples added\n", syn.c_str(), r.audit.added.at(fn));
      }
    }
  } else if (a.test == "overgen") {
    const auto train = read_split(base, "train");
    const auto test = read_split(base, "test");
    write_split(out, "test", test);
    const auto rules = default_exception_rules();
    for (const auto& pct_text : a.exception_pct) {
      const double pct = std::stod(pct_text);
      Rng sub = rng.substream(std::hash<std::string>{}(pct_text));
      const auto r = exceptions_apply(train, rules, pct, alphabet, sub, params);
      write_split(out, "train_" + pct_text, r.train);
      write_json(out / ("exceptions_" + pct_text + ".json"), {{"percentage", pct}, {"exceptions", to_json(r.exceptions)}});
      auto& rows = audit[pct_text] = nlohmann::json::array();
      std::printf("overgen %s: train %zu, exceptions %zu\n", pct_text.c_str(), r.train.size(), r.exceptions.size());
      for (const auto& x : r.audit) {
        rows.push_back({{"pair", pair_name(x.pair)}, {"outer_occurrences", x.outer_occurrences},
                        {"inner_occurrences", x.inner_occurrences}, {"target", x.target},
                        {"from_train", x.from_train}, {"synthesised", x.synthesised}, {"removed", x.removed}});
        std::printf("  %-24s k=%zu (from train %zu, synthesised %zu), removed %zu\n", pair_name(x.pair).c_str(),
                    x.target, x.from_train, x.synthesised, x.removed);
      }
    }
  } else {
    throw Error("unknown test '" + a.test +
                "' (systematicity, productivity, substitutivity-ed, substitutivity-prim, overgen)");
  }
  write_json(out / "audit.json", audit);
  write_manifest(out, std::move(meta));
  return 0;
}

// --- eval ----------------------------------------------------------------

struct EvalArgs {
  std::string mode;
  std::string adapter = "oracle";
  std::string data;
  std::string split = "test";
  std::string out;
  std::string checkpoints;
  std::string exceptions;
  std::string predictions;
  double timeout = 30.0;
  std::size_t pool = 1;
};

void write_strata_csv(const fs::path& out, const EvaluationReport& r) {
  for (const auto& [kind, rows] : r.strata) {
    std::ostringstream csv;
    csv << kind << ",accuracy,count\n";
    for (const auto& s : rows) csv << s.label << ',' << format_double(s.score) << ',' << s.count << '\n';
    write_text(out / ("strata_" + kind + ".csv"), csv.str());
  }
}

void emit(const EvalArgs& a, const nlohmann::json& report) {
  if (a.out.empty()) {
    std::cout << report.dump(2) << '\n';
  } else {
    write_json(fs::path(a.out) / "report.json", report);
  }
}

int cmd_eval(const EvalArgs& a) {
  const fs::path data(a.data);
  verify_manifest(data);
  if (!a.out.empty()) fs::create_directories(a.out);
  const auto manifest_hash = sha256_hex(data / "manifest.json");

  if (a.mode == "accuracy") {
    const auto samples = read_split(data, a.split);
    auto adapter = make_adapter(a.adapter, srcs_of(samples), a.timeout, a.pool);
    std::vector<HeldOutPair> pairs;
    if (fs::exists(data / "pairs.json")) {
      for (const auto& p : read_json(data / "pairs.json")) pairs.push_back(parse_pair(p.get<std::string>()));
    }
    const std::vector<StratumKey> keys{StratumKey::kLength, StratumKey::kDepth, StratumKey::kNumFunctions,
                                       StratumKey::kFunction, StratumKey::kPair};
    auto r = run_accuracy(*adapter, samples, keys, pairs);
    r.metadata["dataset"] = manifest_hash;
    r.metadata["split"] = a.split;
    std::printf("accuracy %.6f on %zu samples (%zu adapter errors)\n", r.overall, r.count, r.errors);
    if (!a.out.empty()) write_strata_csv(a.out, r);
    emit(a, r.to_json());
  } else if (a.mode == "consistency") {
    const auto base = read_split(data, "consistency_base");
    const auto syn = read_lines(data / "consistency_syn.src");
    if (syn.size() != base.size()) throw LineCountMismatchError(base.size(), syn.size());
    std::vector<ConsistencyPair> pairs;
    std::vector<TokenSeq> all;
    for (std::size_t i = 0; i < base.size(); ++i) {
      pairs.push_back({base[i].id, base[i].src, syn[i], base[i].tgt});
      all.push_back(base[i].src);
    }
    all.insert(all.end(), syn.begin(), syn.end());
    auto adapter = make_adapter(a.adapter, all, a.timeout, a.pool);
    auto r = run_consistency(*adapter, pairs);
    r.metadata["dataset"] = manifest_hash;
    std::printf("consistency %.6f (consistent correct %.6f, consistent incorrect %.6f)\n", r.overall,
                r.extra["consistent_correct"], r.extra["consistent_incorrect"]);
    emit(a, r.to_json());
  } else if (a.mode == "localism") {
    const auto samples = read_split(data, a.split);
    auto adapter = make_adapter(a.adapter, srcs_of(samples), a.timeout, a.pool);
    auto r = run_localism(*adapter, samples);
    r.report.metadata["dataset"] = manifest_hash;
    std::printf("localism consistency %.6f, mean steps %.3f, unroll failures %zu\n", r.report.overall,
                r.report.extra["mean_steps"], r.report.errors);
    emit(a, to_json(r));
  } else if (a.mode == "overgen-profile") {
    if (a.checkpoints.empty() || a.exceptions.empty()) throw Error("overgen-profile needs --checkpoints and --exceptions");
    const auto exceptions = exceptions_from_json(read_json(a.exceptions));
    const auto checkpoints = load_checkpoints(a.checkpoints);
    const auto p = run_overgeneralisation(checkpoints, exceptions);
    std::ostringstream csv;
    csv << "checkpoint,overgeneralisation,memorisation,other\n";
    for (const auto& pt : p.points) {
      csv << pt.checkpoint << ',' << format_double(pt.overgeneralisation) << ',' << format_double(pt.memorisation)
          << ',' << format_double(pt.other) << '\n';
    }
    if (!a.out.empty()) write_text(fs::path(a.out) / "profile.csv", csv.str());
    std::printf("overgeneralisation peak %.6f at checkpoint %s\n", p.peak,
                p.points.empty() ? "-" : p.points[p.peak_index].checkpoint.c_str());
    emit(a, to_json(p));
  } else if (a.mode == "length-gen") {
    static const std::regex name(R"(length_([a-z_]+)_(\d+)\.src)");
    LengthCorpora corpora;
    std::vector<TokenSeq> all;
    for (const auto& entry : fs::directory_iterator(data)) {
      std::smatch m;
      const auto file = entry.path().filename().string();
      if (!std::regex_match(file, m, name)) continue;
      auto samples = read_split(data, entry.path().stem().string());
      for (const auto& s : samples) all.push_back(s.src);
      corpora[m[1]][std::stoi(m[2])] = std::move(samples);
    }
    if (corpora.empty()) throw Error(a.data + " holds no length_<function>_<n> files");
    auto adapter = make_adapter(a.adapter, all, a.timeout, a.pool);
    const auto grid = run_length_generalisation(*adapter, corpora);
    std::ostringstream csv;
    csv << "function,length,accuracy,count\n";
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& c : grid) {
      csv << c.function << ',' << c.length << ',' << format_double(c.accuracy) << ',' << c.count << '\n';
      rows.push_back({{"function", c.function}, {"length", c.length}, {"accuracy", c.accuracy}, {"count", c.count}});
    }
    if (!a.out.empty()) write_text(fs::path(a.out) / "length_grid.csv", csv.str());
    std::cout << csv.str();
    emit(a, {{"schema", "pcfgset.report"}, {"version", EvaluationReport::kSchemaVersion}, {"metric", "length-gen"},
             {"grid", rows}, {"metadata", {{"adapter", adapter->id()}, {"dataset", manifest_hash}}}});
  } else if (a.mode == "eos") {
    if (a.predictions.empty()) throw Error("eos needs --predictions");
    const auto preds = read_lines(a.predictions);
    const auto tgts = read_lines(data / (a.split + ".tgt"));
    const auto r = run_eos_analysis(preds, tgts);
    std::printf("incorrect %zu of %zu; strict prefix %zu, substring %zu\n", r.incorrect, r.total, r.strict_prefix,
                r.substring);
    emit(a, to_json(r));
  } else {
    throw Error("unknown eval mode '" + a.mode + "'");
  }
  return 0;
}

// --- validate ------------------------------------------------------------

int cmd_validate(const std::string& dir, const std::vector<std::string>& exception_files) {
  const fs::path data(dir);
  bool ok = true;
  if (fs::exists(data / "manifest.json")) {
    try {
      verify_manifest(data);
      std::printf("manifest: ok\n");
    } catch (const ManifestMismatchError& e) {
      std::printf("manifest: FAIL %s\n", e.what());
      ok = false;
    }
  }
  std::unordered_map<std::string, SymbolString> overrides;
  for (const auto& f : exception_files) {
    auto entries = exceptions_from_json(read_json(f));
    for (auto& [k, v] : exception_overrides(entries)) overrides[k] = v;
  }
  ValidationOptions options;
  if (!overrides.empty()) options.overrides = &overrides;

  std::vector<std::string> stems;
  for (const auto& entry : fs::directory_iterator(data)) {
    if (entry.path().extension() == ".src" && fs::exists(fs::path(entry.path()).replace_extension(".tgt"))) {
      stems.push_back(entry.path().stem().string());
    }
  }
  std::sort(stems.begin(), stems.end());
  if (stems.empty()) throw Error(dir + " holds no .src/.tgt pairs");
  std::map<std::string, std::set<std::string>> split_srcs;
  for (const auto& stem : stems) {
    const auto src = read_lines(data / (stem + ".src"));
    const auto tgt = read_lines(data / (stem + ".tgt"));
    if (src.size() != tgt.size()) {
      std::printf("%s: FAIL %zu src lines but %zu tgt lines\n", stem.c_str(), src.size(), tgt.size());
      ok = false;
      continue;
    }
    const auto r = validate_corpus(src, tgt, options);
    std::printf("%s: %s (%zu lines", stem.c_str(), r.ok() ? "ok" : "FAIL", r.lines);
    if (!r.ok()) {
      std::printf("; parse %zu, render %zu, target %zu, repeated literals %zu, repeated arguments %zu, duplicates %zu",
                  r.parse_errors, r.render_mismatches, r.target_mismatches, r.repeated_literals, r.repeated_tuples,
                  r.duplicate_src);
    }
    std::printf(")\n");
    for (const auto& m : r.messages) std::printf("  %s\n", m.c_str());
    ok = ok && r.ok();
    if (stem == "train" || stem == "valid" || stem == "test") {
      auto& set = split_srcs[stem];
      for (const auto& s : src) set.insert(join_tokens(s));
    }
  }
  for (auto a = split_srcs.begin(); a != split_srcs.end(); ++a) {
    for (auto b = std::next(a); b != split_srcs.end(); ++b) {
      std::size_t shared = 0;
      for (const auto& s : a->second) shared += b->second.count(s);
      if (shared) {
        std::printf("splits %s and %s: FAIL %zu shared inputs\n", a->first.c_str(), b->first.c_str(), shared);
        ok = false;
      }
    }
  }
  std::printf("%s\n", ok ? "PASS" : "FAIL");
  return ok ? 0 : 1;
}

// --- oracle line server ----------------------------------------------------

int cmd_oracle() {
  std::ios::sync_with_stdio(false);
  std::string line;
  while (std::getline(std::cin, line)) {
    try {
      const auto tree = parse(split_tokens(line), Lexicon::standard());
      std::cout << join_tokens(evaluate(tree)) << '\n';
    } catch (const Error& e) {
      std::cerr << "oracle: " << e.what() << '\n';
      std::cout << '\n';
    }
    std::cout.flush();
  }
  return 0;
}

// --- probes ----------------------------------------------------------------

struct ProbeArgs {
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string base;
  std::string lengths = "1-10";
  std::size_t per_length = 200;
  std::size_t per_function = 1000;
};

int cmd_probes(const ProbeArgs& a) {
  const auto seed = resolve_seed(a.seed);
  const fs::path out(a.out);
  fs::create_directories(out);
  const Alphabet alphabet;
  Rng rng(seed);
  const auto lengths = parse_range(a.lengths);
  for (auto fn : kAllFunctions) {
    const auto corpora = make_primitive_length_corpus(fn, lengths, a.per_length, alphabet, rng);
    for (const auto& [len, samples] : corpora) {
      write_split(out, "length_" + std::string(base_name(fn)) + "_" + std::to_string(len), samples);
    }
  }
  std::printf("length probes: %zu functions x %zu lengths x %zu samples\n", kAllFunctions.size(), lengths.size(),
              a.per_length);
  if (!a.base.empty()) {
    verify_manifest(a.base);
    const auto test = read_split(a.base, "test");
    std::vector<SyntaxTree> unary;
    std::vector<std::pair<SyntaxTree, SyntaxTree>> binary;
    for (std::size_t i = 0; i < test.size() && unary.size() < a.per_function; ++i) unary.push_back(test[i].tree);
    // A binary probe joins two bases, so they must not share a literal.
    auto literals = [](const Sample& s) {
      std::set<std::string> out;
      for (const auto& t : s.src) {
        if (t != "," && !Lexicon::standard().find(t)) out.insert(t);
      }
      return out;
    };
    std::vector<std::pair<std::size_t, std::set<std::string>>> pending;
    for (std::size_t i = 0; i < test.size() && binary.size() < a.per_function; ++i) {
      auto lits = literals(test[i]);
      auto partner = std::find_if(pending.begin(), pending.end(), [&](const auto& p) {
        return std::none_of(lits.begin(), lits.end(), [&](const auto& l) { return p.second.count(l) > 0; });
      });
      if (partner == pending.end()) {
        pending.emplace_back(i, std::move(lits));
      } else {
        binary.emplace_back(test[partner->first].tree, test[i].tree);
        pending.erase(partner);
      }
    }
    const auto corpora = make_function_difficulty_corpora(unary, binary, kAllFunctions);
    for (const auto& [fn, samples] : corpora) write_split(out, "difficulty_" + fn, samples);
    std::printf("function-difficulty probes: %zu unary bases, %zu binary bases\n", unary.size(), binary.size());
  }
  write_manifest(out, {{"kind", "probes"}, {"seed", seed}, {"lengths", lengths}, {"per_length", a.per_length}});
  return 0;
}

// --- embedding ---------------------------------------------------------------

int cmd_embedding(const std::string& table_path, const std::string& synonyms, const std::string& out) {
  const auto table = EmbeddingTable::load(table_path);
  const auto map = SynonymMap::for_functions(synonyms);
  const auto r = synonym_distance_report(table, map);
  nlohmann::json rows = nlohmann::json::array();
  std::printf("%-16s %10s %10s\n", "function", "synonym", "other");
  for (const auto& row : r.rows) {
    std::printf("%-16s %10.4f %10.4f\n", row.function.c_str(), row.synonym, row.other);
    rows.push_back({{"function", row.function}, {"synonym", row.synonym}, {"other", row.other}});
  }
  std::printf("%-16s %10.4f %10.4f\n", "mean", r.mean_synonym, r.mean_other);
  if (!out.empty()) {
    write_json(out, {{"schema", "pcfgset.report"}, {"version", EvaluationReport::kSchemaVersion},
                     {"metric", "synonym-distance"}, {"rows", rows}, {"mean_synonym", r.mean_synonym},
                     {"mean_other", r.mean_other}});
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PCFG string-edit task: corpus generation, compositionality tests and evaluation"};
  app.require_subcommand(1);
  int jobs = 0;
  app.add_option("--jobs", jobs, "Worker threads (default: all cores)");

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Generate a base corpus with train/valid/test splits");
  g->add_option("--seed", gen.seed, "Random seed (falls back to PCFGSET_SEED)");
  g->add_option("--size", gen.size, "Number of distinct samples")->capture_default_str();
  g->add_option("--out", gen.out, "Output directory")->required();
  g->add_option("--params", gen.params, "params.json from generate or naturalise");
  g->add_option("--spec", gen.spec, "Reference (length, depth) distribution CSV")->capture_default_str();
  g->add_option("--increments", gen.increments, "Partition increments '<length>,<depth>'");
  g->add_flag("--plain", gen.plain, "Sample the grammar directly, without matching the reference distribution");
  g->add_option("--alphabet-size", gen.alphabet_size, "Number of string symbols")->capture_default_str();

  NaturaliseArgs nat;
  auto* n = app.add_subcommand("naturalise", "Fit grammar parameters to a reference distribution");
  n->add_option("--seed", nat.seed, "Random seed (falls back to PCFGSET_SEED)");
  n->add_option("--spec", nat.spec, "Reference distribution CSV")->capture_default_str();
  n->add_option("--out", nat.out, "Output directory")->required();
  n->add_option("--size", nat.size, "Size of the naturalised corpus to write (0 skips it)")->capture_default_str();
  n->add_option("--sample-size", nat.sample_size, "Generated samples per iteration")->capture_default_str();
  n->add_option("--max-iters", nat.max_iters, "Maximum refit iterations")->capture_default_str();
  n->add_option("--epsilon", nat.epsilon, "Minimum KL improvement to continue")->capture_default_str();

  TestbuildArgs tb;
  auto* t = app.add_subcommand("testbuild", "Build one compositionality test from a base corpus");
  t->add_option("--test", tb.test, "systematicity | productivity | substitutivity-ed | substitutivity-prim | overgen")
      ->required();
  t->add_option("--base", tb.base, "Base corpus directory")->required();
  t->add_option("--out", tb.out, "Output directory")->required();
  t->add_option("--seed", tb.seed, "Random seed (falls back to PCFGSET_SEED)");
  t->add_option("--pairs", tb.pairs, "Held-out function pairs, comma separated")->capture_default_str();
  t->add_option("--test-size", tb.test_size, "Systematicity test set size")->capture_default_str();
  t->add_option("--threshold", tb.threshold, "Productivity function-count threshold")->capture_default_str();
  t->add_option("--synonyms", tb.synonyms, "Functions that get a synonym")->capture_default_str();
  t->add_option("--fraction", tb.fraction, "Primitive synonym samples per train sample")->capture_default_str();
  t->add_option("--exception-pct", tb.exception_pct, "Exception percentages as fractions")->capture_default_str();

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Evaluate a model adapter");
  e->add_option("--mode", ev.mode, "accuracy | consistency | localism | overgen-profile | length-gen | eos")
      ->required();
  e->add_option("--adapter", ev.adapter, "oracle | faulty:<rate>[:<seed>] | file:<path> | cmd:<command>")
      ->capture_default_str();
  e->add_option("--data", ev.data, "Test directory with manifest.json")->required();
  e->add_option("--split", ev.split, "Split name inside the data directory")->capture_default_str();
  e->add_option("--out", ev.out, "Report directory (default: print JSON)");
  e->add_option("--checkpoints", ev.checkpoints, "Directory of <ordinal>_<label>.pred files");
  e->add_option("--exceptions", ev.exceptions, "Exception sidecar JSON");
  e->add_option("--predictions", ev.predictions, "Prediction file for eos analysis");
  e->add_option("--timeout", ev.timeout, "Seconds to wait for a subprocess answer")->capture_default_str();
  e->add_option("--pool", ev.pool, "Subprocess children")->capture_default_str();

  std::string vdir;
  std::vector<std::string> vexc;
  auto* v = app.add_subcommand("validate", "Audit corpus files against the oracle and uniqueness rules");
  v->add_option("--data", vdir, "Corpus directory")->required();
  v->add_option("--exceptions", vexc, "Exception sidecar(s) whose targets override the oracle");

  app.add_subcommand("oracle", "Line server: one input per stdin line, its meaning per stdout line");

  ProbeArgs pr;
  auto* p = app.add_subcommand("probes", "Argument-length and function-difficulty probe corpora");
  p->add_option("--seed", pr.seed, "Random seed (falls back to PCFGSET_SEED)");
  p->add_option("--out", pr.out, "Output directory")->required();
  p->add_option("--base", pr.base, "Base corpus whose test split seeds the function-difficulty probes");
  p->add_option("--lengths", pr.lengths, "Argument lengths, e.g. 1-10 or 2,4,8")->capture_default_str();
  p->add_option("--per-length", pr.per_length, "Samples per function and length")->capture_default_str();
  p->add_option("--per-function", pr.per_function, "Difficulty probes per function")->capture_default_str();

  std::string table, emb_out, emb_syn = "swap,repeat,append,remove_second";
  auto* m = app.add_subcommand("embedding", "Cosine distances between functions and their synonyms");
  m->add_option("--table", table, "Embedding text file")->required();
  m->add_option("--synonyms", emb_syn, "Functions with synonyms")->capture_default_str();
  m->add_option("--out", emb_out, "Report JSON path");

  CLI11_PARSE(app, argc, argv);
  if (jobs > 0) omp_set_num_threads(jobs);

  try {
    if (g->parsed()) return cmd_generate(gen);
    if (n->parsed()) return cmd_naturalise(nat);
    if (t->parsed()) return cmd_testbuild(tb);
    if (e->parsed()) return cmd_eval(ev);
    if (v->parsed()) return cmd_validate(vdir, vexc);
    if (app.got_subcommand("oracle")) return cmd_oracle();
    if (p->parsed()) return cmd_probes(pr);
    if (m->parsed()) return cmd_embedding(table, emb_syn, emb_out);
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << '\n';
    return 1;
  }
  return 0;
}
