#include "pcfgset/harness.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstring>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <regex>
#include <unordered_map>

#include "pcfgset/error.hpp"
#include "pcfgset/interpreter.hpp"

namespace pcfgset {

namespace {

// Converts per-sample errors into a scored failure; only a dead adapter stops
// the run.
Prediction safe_predict(ModelAdapter& adapter, const TokenSeq& src) {
  try {
    return adapter.predict(src);
  } catch (const AdapterUnavailableError&) {
    throw;
  } catch (const std::exception& e) {
    return {{}, e.what()};
  }
}

SyntaxTree parse_any(const TokenSeq& src) { return parse(std::span<const std::string>(src), Lexicon::standard()); }

class OracleAdapter final : public ModelAdapter {
 public:
  std::string id() const override { return "oracle"; }
  Prediction predict(const TokenSeq& src) override { return {evaluate(parse_any(src)), {}}; }
  bool thread_safe() const noexcept override { return true; }
};

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::uint64_t seed, const TokenSeq& src) {
  std::uint64_t h = 0xcbf29ce484222325ULL ^ mix(seed);
  auto feed = [&](unsigned char c) {
    h ^= c;
    h *= 0x100000001b3ULL;
  };
  for (const auto& tok : src) {
    for (unsigned char c : tok) feed(c);
    feed(' ');
  }
  return mix(h);
}

class FaultyOracleAdapter final : public ModelAdapter {
 public:
  FaultyOracleAdapter(double rate, std::uint64_t seed, Alphabet alphabet)
      : rate_(rate), seed_(seed), alphabet_(std::move(alphabet)) {
    if (!(rate >= 0.0 && rate <= 1.0)) throw Error("corruption rate must be in [0, 1]");
    if (alphabet_.size() < 2) throw Error("corruption needs at least two alphabet symbols");
  }

  std::string id() const override { return "faulty:" + std::to_string(rate_) + ":" + std::to_string(seed_); }
  bool thread_safe() const noexcept override { return true; }

  Prediction predict(const TokenSeq& src) override {
    Prediction p{evaluate(parse_any(src)), {}};
    const std::uint64_t h = fnv1a(seed_, src);
    const double u = static_cast<double>(h >> 11) * 0x1.0p-53;
    if (u >= rate_ || p.tokens.empty()) return p;
    auto& slot = p.tokens[mix(h + 1) % p.tokens.size()];
    std::size_t pick = mix(h + 2) % alphabet_.size();
    if (alphabet_[pick] == slot) pick = (pick + 1) % alphabet_.size();
    slot = alphabet_[pick];
    return p;
  }

 private:
  double rate_;
  std::uint64_t seed_;
  Alphabet alphabet_;
};

SymbolString capped_eval(const SyntaxTree& t, std::size_t cap) {
  if (t.is_leaf()) return t.symbols();
  std::vector<SymbolString> args;
  for (const auto& c : t.args()) args.push_back(capped_eval(c, cap));
  const BaseFunction fn = t.function().base;
  bool over = false;
  for (std::size_t i = 0; i < args.size(); ++i) {
    const bool ignored = (fn == BaseFunction::kRemoveFirst && i == 0) || (fn == BaseFunction::kRemoveSecond && i == 1);
    over = over || (!ignored && args[i].size() > cap);
  }
  SymbolString out = apply_function(fn, args);
  if (over) out.resize(std::min(out.size(), cap));
  return out;
}

class FunctionAdapter final : public ModelAdapter {
 public:
  FunctionAdapter(std::string id, std::function<Prediction(const TokenSeq&)> fn, bool safe)
      : id_(std::move(id)), fn_(std::move(fn)), safe_(safe) {}
  std::string id() const override { return id_; }
  Prediction predict(const TokenSeq& src) override { return fn_(src); }
  bool thread_safe() const noexcept override { return safe_; }

 private:
  std::string id_;
  std::function<Prediction(const TokenSeq&)> fn_;
  bool safe_;
};

class FileAdapter final : public ModelAdapter {
 public:
  FileAdapter(std::vector<TokenSeq> predictions, std::span<const TokenSeq> srcs) : predictions_(std::move(predictions)) {
    if (predictions_.size() != srcs.size()) throw LineCountMismatchError(srcs.size(), predictions_.size());
    for (std::size_t i = 0; i < srcs.size(); ++i) index_.emplace(join_tokens(srcs[i]), i);
  }
  std::string id() const override { return "file"; }
  bool thread_safe() const noexcept override { return true; }
  Prediction predict(const TokenSeq& src) override {
    auto it = index_.find(join_tokens(src));
    if (it == index_.end()) return {{}, "src is not part of the predicted test set"};
    return {predictions_[it->second], {}};
  }

 private:
  std::vector<TokenSeq> predictions_;
  std::unordered_map<std::string, std::size_t> index_;
};

// --- subprocess ----------------------------------------------------------

void ignore_sigpipe() {
  static std::once_flag once;
  std::call_once(once, [] {
    struct sigaction sa {};
    sa.sa_handler = SIG_IGN;
    sigaction(SIGPIPE, &sa, nullptr);
  });
}

class Child {
 public:
  explicit Child(const std::string& command) {
    int to_child[2], from_child[2];
    if (pipe2(to_child, O_CLOEXEC) != 0) throw ChildExitedError(std::string("pipe: ") + std::strerror(errno));
    if (pipe2(from_child, O_CLOEXEC) != 0) {
      close(to_child[0]);
      close(to_child[1]);
      throw ChildExitedError(std::string("pipe: ") + std::strerror(errno));
    }
    pid_ = fork();
    if (pid_ < 0) throw ChildExitedError(std::string("fork: ") + std::strerror(errno));
    if (pid_ == 0) {
      dup2(to_child[0], STDIN_FILENO);
      dup2(from_child[1], STDOUT_FILENO);
      execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
      _exit(127);
    }
    close(to_child[0]);
    close(from_child[1]);
    in_ = to_child[1];
    out_ = from_child[0];
  }

  Child(const Child&) = delete;
  Child& operator=(const Child&) = delete;

  ~Child() { stop(); }

  void send(const std::string& line) {
    // Output arriving before a request means the previous answer had extra lines.
    if (!buffer_.empty() || readable(0)) {
      if (fill() && !buffer_.empty()) throw ProtocolViolationError("child wrote more than one line per input");
    }
    std::string data = line + "\n";
    std::size_t done = 0;
    while (done < data.size()) {
      const ssize_t n = write(in_, data.data() + done, data.size() - done);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) throw ChildExitedError("child closed its input" + status_suffix());
      done += static_cast<std::size_t>(n);
    }
  }

  std::string receive(double timeout_s) {
    const auto deadline = std::chrono::steady_clock::now() + std::chrono::duration<double>(timeout_s);
    for (;;) {
      const auto nl = buffer_.find('\n');
      if (nl != std::string::npos) {
        std::string line = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        if (!buffer_.empty()) throw ProtocolViolationError("child wrote more than one line per input");
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return line;
      }
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
      if (left.count() <= 0 || !readable(static_cast<int>(left.count()))) {
        throw TimeoutError("no answer from child within " + std::to_string(timeout_s) + " s");
      }
      if (!fill()) throw ChildExitedError("child closed its output" + status_suffix());
    }
  }

 private:
  bool readable(int timeout_ms) {
    pollfd p{out_, POLLIN, 0};
    for (;;) {
      const int r = poll(&p, 1, timeout_ms);
      if (r < 0 && errno == EINTR) continue;
      return r > 0;
    }
  }

  // Reads what is available; false on end of stream.
  bool fill() {
    char chunk[4096];
    for (;;) {
      const ssize_t n = read(out_, chunk, sizeof chunk);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) return false;
      buffer_.append(chunk, static_cast<std::size_t>(n));
      return true;
    }
  }

  std::string status_suffix() {
    int status = 0;
    if (pid_ > 0 && waitpid(pid_, &status, WNOHANG) == pid_) {
      pid_ = -1;
      if (WIFEXITED(status)) return " (exit status " + std::to_string(WEXITSTATUS(status)) + ")";
      if (WIFSIGNALED(status)) return " (signal " + std::to_string(WTERMSIG(status)) + ")";
    }
    return {};
  }

  void stop() {
    if (in_ >= 0) close(in_);
    if (out_ >= 0) close(out_);
    in_ = out_ = -1;
    if (pid_ <= 0) return;
    // Closing stdin lets a well-behaved child exit on its own.
    for (int i = 0; i < 20; ++i) {
      if (waitpid(pid_, nullptr, WNOHANG) == pid_) return;
      usleep(5000);
    }
    kill(pid_, SIGKILL);
    waitpid(pid_, nullptr, 0);
  }

  pid_t pid_ = -1;
  int in_ = -1;
  int out_ = -1;
  std::string buffer_;
};

class SubprocessAdapter final : public ModelAdapter {
 public:
  explicit SubprocessAdapter(SubprocessOptions options) : options_(std::move(options)) {
    if (options_.command.empty()) throw Error("subprocess adapter needs a command");
    if (options_.pool == 0) throw Error("subprocess pool must hold at least one child");
    ignore_sigpipe();
    children_.resize(options_.pool);
  }

  std::string id() const override { return "cmd:" + options_.command; }

  Prediction predict(const TokenSeq& src) override {
    const std::size_t k = next_++ % children_.size();
    try {
      send(k, src);
    } catch (const AdapterUnavailableError&) {
      throw;
    } catch (const Error& e) {
      return {{}, e.what()};
    }
    return receive(k);
  }

  // Sample i goes to child i mod pool; each round sends to every child before
  // reading, so children work concurrently.
  std::vector<Prediction> predict_all(std::span<const TokenSeq> srcs) override {
    std::vector<Prediction> out(srcs.size());
    const std::size_t pool = children_.size();
    for (std::size_t start = 0; start < srcs.size(); start += pool) {
      const std::size_t end = std::min(srcs.size(), start + pool);
      std::vector<char> sent(end - start, 0);
      for (std::size_t i = start; i < end; ++i) {
        try {
          send(i % pool, srcs[i]);
          sent[i - start] = 1;
        } catch (const AdapterUnavailableError&) {
          throw;
        } catch (const Error& e) {
          out[i] = {{}, e.what()};
        }
      }
      for (std::size_t i = start; i < end; ++i)
        if (sent[i - start]) out[i] = receive(i % pool);
    }
    return out;
  }

 private:
  void send(std::size_t k, const TokenSeq& src) {
    auto& child = ensure(k);
    try {
      child.send(join_tokens(src));
    } catch (const Error&) {
      children_[k].reset();
      throw;
    }
  }

  Prediction receive(std::size_t k) {
    try {
      return {split_tokens(children_[k]->receive(options_.timeout_s)), {}};
    } catch (const Error& e) {
      children_[k].reset();
      return {{}, e.what()};
    }
  }

  Child& ensure(std::size_t k) {
    if (!children_[k]) {
      if (started_[k]) {
        if (restarts_ >= options_.max_restarts) {
          throw AdapterUnavailableError("child '" + options_.command + "' exceeded " +
                                        std::to_string(options_.max_restarts) + " restarts");
        }
        ++restarts_;
      }
      children_[k] = std::make_unique<Child>(options_.command);
      started_[k] = true;
    }
    return *children_[k];
  }

  SubprocessOptions options_;
  std::vector<std::unique_ptr<Child>> children_;
  std::map<std::size_t, bool> started_;
  std::size_t restarts_ = 0;
  std::size_t next_ = 0;
};

// --- runners -------------------------------------------------------------

std::string stratum_label(StratumKey key, const Sample& s, std::span<const HeldOutPair> pairs) {
  switch (key) {
    case StratumKey::kLength:
      return std::to_string(s.stats.length);
    case StratumKey::kDepth:
      return std::to_string(s.stats.depth);
    case StratumKey::kNumFunctions:
      return std::to_string(s.stats.num_functions);
    case StratumKey::kFunction:
      return s.tree.is_leaf() ? "none" : s.tree.function().name;
    case StratumKey::kPair:
      for (const auto& p : pairs)
        if (count_pair(s.src, p) > 0) return pair_name(p);
      return "none";
  }
  return {};
}

double ratio(std::size_t a, std::size_t b) {
  return b ? static_cast<double>(a) / static_cast<double>(b) : std::numeric_limits<double>::quiet_NaN();
}

bool is_literal_run(const TokenSeq& tokens) {
  return !tokens.empty() && std::all_of(tokens.begin(), tokens.end(), is_literal_symbol);
}

std::vector<Prediction> predict_srcs(ModelAdapter& adapter, std::span<const Sample> samples) {
  std::vector<TokenSeq> srcs;
  srcs.reserve(samples.size());
  for (const auto& s : samples) srcs.push_back(s.src);
  return adapter.predict_all(srcs);
}

nlohmann::json number_or_null(double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); }

template <class T>
nlohmann::json optional_json(const std::optional<T>& x) {
  return x ? nlohmann::json(*x) : nlohmann::json(nullptr);
}

}  // namespace

std::vector<Prediction> ModelAdapter::predict_all(std::span<const TokenSeq> srcs) {
  std::vector<Prediction> out(srcs.size());
  if (!thread_safe()) {
    for (std::size_t i = 0; i < srcs.size(); ++i) out[i] = safe_predict(*this, srcs[i]);
    return out;
  }
  std::exception_ptr fatal;
#pragma omp parallel for schedule(dynamic, 64)
  for (std::size_t i = 0; i < srcs.size(); ++i) {
    try {
      out[i] = safe_predict(*this, srcs[i]);
    } catch (...) {
#pragma omp critical
      if (!fatal) fatal = std::current_exception();
    }
  }
  if (fatal) std::rethrow_exception(fatal);
  return out;
}

std::unique_ptr<ModelAdapter> oracle_adapter() { return std::make_unique<OracleAdapter>(); }

std::unique_ptr<ModelAdapter> faulty_oracle_adapter(double rate, std::uint64_t seed, const Alphabet& alphabet) {
  return std::make_unique<FaultyOracleAdapter>(rate, seed, alphabet);
}

std::unique_ptr<ModelAdapter> length_capped_oracle_adapter(std::size_t cap) {
  return function_adapter("capped:" + std::to_string(cap), [cap](const TokenSeq& src) {
    return Prediction{capped_eval(parse_any(src), cap), {}};
  });
}

std::unique_ptr<ModelAdapter> function_adapter(std::string id, std::function<Prediction(const TokenSeq&)> fn,
                                               bool thread_safe) {
  return std::make_unique<FunctionAdapter>(std::move(id), std::move(fn), thread_safe);
}

std::unique_ptr<ModelAdapter> subprocess_adapter(SubprocessOptions options) {
  return std::make_unique<SubprocessAdapter>(std::move(options));
}

std::unique_ptr<ModelAdapter> file_adapter(std::vector<TokenSeq> predictions, std::span<const TokenSeq> srcs) {
  return std::make_unique<FileAdapter>(std::move(predictions), srcs);
}

std::vector<TokenSeq> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<TokenSeq> out;
  std::string line;
  while (std::getline(in, line)) out.push_back(split_tokens(line));
  return out;
}

std::unique_ptr<ModelAdapter> make_adapter(const std::string& spec, std::span<const TokenSeq> srcs, double timeout_s,
                                           std::size_t pool) {
  if (spec == "oracle") return oracle_adapter();
  const auto colon = spec.find(':');
  const std::string kind = spec.substr(0, colon);
  const std::string rest = colon == std::string::npos ? "" : spec.substr(colon + 1);
  if (kind == "faulty" && !rest.empty()) {
    const auto sep = rest.find(':');
    const double rate = std::stod(rest.substr(0, sep));
    const std::uint64_t seed = sep == std::string::npos ? 0 : std::stoull(rest.substr(sep + 1));
    return faulty_oracle_adapter(rate, seed);
  }
  if (kind == "file" && !rest.empty()) return file_adapter(read_lines(rest), srcs);
  if (kind == "cmd" && !rest.empty()) return subprocess_adapter({rest, timeout_s, pool});
  throw Error("unknown adapter '" + spec + "' (expected oracle, faulty:<rate>, file:<path> or cmd:<command>)");
}

std::string stratum_name(StratumKey key) {
  switch (key) {
    case StratumKey::kLength:
      return "length";
    case StratumKey::kDepth:
      return "depth";
    case StratumKey::kNumFunctions:
      return "num_functions";
    case StratumKey::kFunction:
      return "function";
    case StratumKey::kPair:
      return "pair";
  }
  return {};
}

nlohmann::json EvaluationReport::to_json() const {
  nlohmann::json j;
  j["schema"] = "pcfgset.report";
  j["version"] = kSchemaVersion;
  j["metric"] = metric;
  j["overall"] = number_or_null(overall);
  j["count"] = count;
  j["errors"] = errors;
  nlohmann::json strata_json = nlohmann::json::object();
  for (const auto& [kind, rows] : strata) {
    auto& arr = strata_json[kind] = nlohmann::json::array();
    for (const auto& r : rows) arr.push_back({{"label", r.label}, {"score", r.score}, {"count", r.count}});
  }
  j["strata"] = std::move(strata_json);
  nlohmann::json extra_json = nlohmann::json::object();
  for (const auto& [k, v] : extra) extra_json[k] = number_or_null(v);
  j["extra"] = std::move(extra_json);
  j["metadata"] = metadata;
  return j;
}

EvaluationReport run_accuracy(ModelAdapter& adapter, std::span<const Sample> testset, std::span<const StratumKey> keys,
                              std::span<const HeldOutPair> pairs) {
  if (testset.empty()) throw Error("accuracy needs a non-empty test set");
  const auto preds = predict_srcs(adapter, testset);
  std::vector<char> scores(testset.size());
  EvaluationReport r;
  r.metric = "accuracy";
  for (std::size_t i = 0; i < testset.size(); ++i) {
    scores[i] = preds[i].ok() && sequence_accuracy(preds[i].tokens, testset[i].tgt);
    r.errors += !preds[i].ok();
  }
  const std::vector<std::string> none(testset.size());
  const auto overall = aggregate(scores, none);
  r.overall = overall.overall;
  r.count = overall.count;
  for (auto key : keys) {
    std::vector<std::string> labels;
    labels.reserve(testset.size());
    for (const auto& s : testset) labels.push_back(stratum_label(key, s, pairs));
    r.strata[stratum_name(key)] = aggregate(scores, labels).strata;
  }
  r.metadata["adapter"] = adapter.id();
  return r;
}

EvaluationReport run_consistency(ModelAdapter& adapter, std::span<const ConsistencyPair> pairs) {
  if (pairs.empty()) throw Error("consistency needs at least one pair");
  std::vector<TokenSeq> base, syn;
  for (const auto& p : pairs) {
    base.push_back(p.src_base);
    syn.push_back(p.src_syn);
  }
  const auto a = adapter.predict_all(base);
  const auto b = adapter.predict_all(syn);
  std::size_t consistent = 0, correct = 0, incorrect_consistent = 0, incorrect_pairs = 0, errors = 0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    errors += !a[i].ok() + !b[i].ok();
    const bool same = a[i].ok() && b[i].ok() && pairwise_consistency(a[i].tokens, b[i].tokens);
    const bool a_right = a[i].ok() && sequence_accuracy(a[i].tokens, pairs[i].tgt);
    const bool b_right = b[i].ok() && sequence_accuracy(b[i].tokens, pairs[i].tgt);
    consistent += same;
    correct += same && a_right;
    incorrect_consistent += same && !a_right;
    incorrect_pairs += !(a_right && b_right);
  }
  EvaluationReport r;
  r.metric = "consistency";
  r.count = pairs.size();
  r.errors = errors;
  r.overall = ratio(consistent, pairs.size());
  r.extra["consistent_correct"] = ratio(correct, pairs.size());
  r.extra["consistent_incorrect"] = ratio(incorrect_consistent, pairs.size());
  r.extra["incorrect_pairs"] = ratio(incorrect_pairs, pairs.size());
  r.extra["consistency_across_incorrect"] = ratio(incorrect_consistent, incorrect_pairs);
  r.metadata["adapter"] = adapter.id();
  return r;
}

LocalismReport run_localism(ModelAdapter& adapter, std::span<const Sample> samples) {
  LocalismReport out;
  const auto direct = predict_srcs(adapter, samples);
  std::vector<UnrollPlan> plans(samples.size());
  std::vector<std::vector<TokenSeq>> outputs(samples.size());
  out.samples.resize(samples.size());
  std::size_t rounds = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    out.samples[i].id = samples[i].id;
    try {
      plans[i] = build_unroll_plan(samples[i].tree);
    } catch (const Error& e) {
      out.samples[i].failure = e.what();
    }
    out.samples[i].steps = plans[i].steps.size();
    rounds = std::max(rounds, plans[i].steps.size());
  }
  for (std::size_t step = 0; step < rounds; ++step) {
    std::vector<std::size_t> who;
    std::vector<TokenSeq> inputs;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      if (step >= plans[i].steps.size() || !out.samples[i].failure.empty()) continue;
      who.push_back(i);
      inputs.push_back(instantiate_step(plans[i], step, outputs[i]));
    }
    const auto preds = adapter.predict_all(inputs);
    for (std::size_t k = 0; k < who.size(); ++k) {
      auto& rec = out.samples[who[k]];
      if (!preds[k].ok()) {
        rec.failure = "step " + std::to_string(step + 1) + ": " + preds[k].error;
      } else if (step + 1 < plans[who[k]].steps.size() && !is_literal_run(preds[k].tokens)) {
        rec.failure = "step " + std::to_string(step + 1) + " produced a non-literal output";
      } else {
        outputs[who[k]].push_back(preds[k].tokens);
      }
    }
  }
  std::vector<char> scores(samples.size());
  std::size_t failures = 0, steps = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    auto& rec = out.samples[i];
    rec.consistent = rec.failure.empty() && direct[i].ok() && outputs[i].back() == direct[i].tokens;
    scores[i] = rec.consistent;
    failures += !rec.failure.empty();
    steps += rec.steps;
  }
  const std::vector<std::string> none(samples.size());
  auto& r = out.report;
  r.metric = "localism";
  r.count = samples.size();
  r.overall = samples.empty() ? 0.0 : aggregate(scores, none).overall;
  r.errors = failures;
  r.extra["mean_steps"] = ratio(steps, samples.size());
  r.extra["unroll_failures"] = static_cast<double>(failures);
  r.metadata["adapter"] = adapter.id();
  return out;
}

OvergeneralisationProfile run_overgeneralisation(std::span<const Checkpoint> checkpoints,
                                                 std::span<const ExceptionEntry> exceptions) {
  if (exceptions.empty()) throw Error("overgeneralisation needs at least one exception");
  OvergeneralisationProfile out;
  for (const auto& cp : checkpoints) {
    if (cp.predictions.size() != exceptions.size()) {
      throw LineCountMismatchError(exceptions.size(), cp.predictions.size());
    }
    std::size_t over = 0, memo = 0;
    for (std::size_t i = 0; i < exceptions.size(); ++i) {
      if (cp.predictions[i] == exceptions[i].original_tgt) {
        ++over;
      } else if (cp.predictions[i] == exceptions[i].exception_tgt) {
        ++memo;
      }
    }
    const double n = static_cast<double>(exceptions.size());
    ProfilePoint p{cp.label, over / n, memo / n, 0.0};
    p.other = static_cast<double>(exceptions.size() - over - memo) / n;
    if (out.points.empty() || p.overgeneralisation > out.peak) {
      out.peak = p.overgeneralisation;
      out.peak_index = out.points.size();
    }
    out.points.push_back(std::move(p));
  }
  return out;
}

std::vector<Checkpoint> load_checkpoints(const std::filesystem::path& dir) {
  static const std::regex name(R"((\d+)_(.*)\.pred)");
  std::vector<std::pair<long long, Checkpoint>> found;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    std::smatch m;
    const std::string file = entry.path().filename().string();
    if (!entry.is_regular_file() || !std::regex_match(file, m, name)) continue;
    found.push_back({std::stoll(m[1]), {m[2], read_lines(entry.path())}});
  }
  std::sort(found.begin(), found.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first < b.first : a.second.label < b.second.label;
  });
  std::vector<Checkpoint> out;
  for (auto& f : found) out.push_back(std::move(f.second));
  return out;
}

std::vector<LengthCell> run_length_generalisation(ModelAdapter& adapter, const LengthCorpora& corpora) {
  std::vector<LengthCell> out;
  for (const auto& [fn, by_length] : corpora) {
    for (const auto& [length, samples] : by_length) {
      if (samples.empty()) continue;
      const auto preds = predict_srcs(adapter, samples);
      std::size_t hits = 0;
      for (std::size_t i = 0; i < samples.size(); ++i) hits += preds[i].ok() && preds[i].tokens == samples[i].tgt;
      out.push_back({fn, length, ratio(hits, samples.size()), samples.size()});
    }
  }
  return out;
}

EosReport run_eos_analysis(std::span<const TokenSeq> predictions, std::span<const TokenSeq> targets) {
  if (predictions.size() != targets.size()) throw LineCountMismatchError(targets.size(), predictions.size());
  EosReport r;
  r.total = targets.size();
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const auto& p = predictions[i];
    const auto& t = targets[i];
    if (p == t) continue;
    ++r.incorrect;
    if (p.size() < t.size() && std::equal(p.begin(), p.end(), t.begin())) ++r.strict_prefix;
    if (p.size() <= t.size() && std::search(t.begin(), t.end(), p.begin(), p.end()) != t.end()) ++r.substring;
  }
  if (r.incorrect) {
    r.prefix_fraction = ratio(r.strict_prefix, r.incorrect);
    r.substring_fraction = ratio(r.substring, r.incorrect);
  }
  return r;
}

nlohmann::json to_json(const LocalismReport& report) {
  auto j = report.report.to_json();
  auto& rows = j["samples"] = nlohmann::json::array();
  for (const auto& s : report.samples) {
    nlohmann::json row{{"id", s.id}, {"steps", s.steps}, {"consistent", s.consistent}};
    if (!s.failure.empty()) row["failure"] = s.failure;
    rows.push_back(std::move(row));
  }
  return j;
}

nlohmann::json to_json(const OvergeneralisationProfile& profile) {
  nlohmann::json j{{"schema", "pcfgset.report"}, {"version", EvaluationReport::kSchemaVersion},
                   {"metric", "overgeneralisation"}, {"peak", profile.peak}};
  j["peak_checkpoint"] = profile.points.empty() ? nlohmann::json(nullptr)
                                                 : nlohmann::json(profile.points[profile.peak_index].checkpoint);
  auto& pts = j["profile"] = nlohmann::json::array();
  for (const auto& p : profile.points) {
    pts.push_back({{"checkpoint", p.checkpoint},
                   {"overgeneralisation", p.overgeneralisation},
                   {"memorisation", p.memorisation},
                   {"other", p.other}});
  }
  return j;
}

nlohmann::json to_json(const EosReport& report) {
  return {{"schema", "pcfgset.report"},
          {"version", EvaluationReport::kSchemaVersion},
          {"metric", "eos"},
          {"total", report.total},
          {"incorrect", report.incorrect},
          {"strict_prefix", report.strict_prefix},
          {"substring", report.substring},
          {"prefix_fraction", optional_json(report.prefix_fraction)},
          {"substring_fraction", optional_json(report.substring_fraction)}};
}

}  // namespace pcfgset
