#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "pcfgset/alphabet.hpp"
#include "pcfgset/error.hpp"
#include "pcfgset/metrics.hpp"
#include "pcfgset/testsuite.hpp"

namespace pcfgset {

// An empty `error` means the adapter answered; otherwise `tokens` is empty and
// the sample is scored as incorrect.
struct Prediction {
  TokenSeq tokens;
  std::string error;

  bool ok() const noexcept { return error.empty(); }
};

class ModelAdapter {
 public:
  virtual ~ModelAdapter() = default;

  virtual std::string id() const = 0;
  virtual Prediction predict(const TokenSeq& src) = 0;
  // Serial by default, parallel when `thread_safe()`.
  virtual std::vector<Prediction> predict_all(std::span<const TokenSeq> srcs);
  virtual bool thread_safe() const noexcept { return false; }
};

// Raised when an adapter cannot answer any further request. Runners abort on
// it instead of scoring the sample.
class AdapterUnavailableError : public Error {
 public:
  using Error::Error;
};

// evaluate(parse(src)) with every registered synonym understood.
std::unique_ptr<ModelAdapter> oracle_adapter();

// Oracle whose output, for a `rate` fraction of inputs chosen by a hash of
// (seed, src), has one symbol replaced by another alphabet symbol.
std::unique_ptr<ModelAdapter> faulty_oracle_adapter(double rate, std::uint64_t seed,
                                                    const Alphabet& alphabet = Alphabet());

// Oracle that fails on any function application whose output-carrying
// argument is longer than `cap` symbols: that application's output is cut to
// `cap` symbols. remove_first ignores its first argument and remove_second its
// second, so those never trigger the cap.
std::unique_ptr<ModelAdapter> length_capped_oracle_adapter(std::size_t cap);

std::unique_ptr<ModelAdapter> function_adapter(std::string id, std::function<Prediction(const TokenSeq&)> fn,
                                               bool thread_safe = true);

struct SubprocessOptions {
  std::string command;  // run through /bin/sh -c
  double timeout_s = 30.0;
  std::size_t pool = 1;
  // Child restarts allowed over the adapter's lifetime.
  std::size_t max_restarts = 3;
};

// One line in, one line out per sample. Surplus output is caught when it
// arrives with the answer or before the next request. Errors surface per sample as
// TimeoutError, ChildExitedError or ProtocolViolationError; once the restart
// budget is spent every call raises AdapterUnavailableError.
std::unique_ptr<ModelAdapter> subprocess_adapter(SubprocessOptions options);

// Answers by line alignment with `srcs`. Throws LineCountMismatchError.
std::unique_ptr<ModelAdapter> file_adapter(std::vector<TokenSeq> predictions, std::span<const TokenSeq> srcs);
std::vector<TokenSeq> read_lines(const std::filesystem::path& path);

// "oracle", "faulty:<rate>[:<seed>]", "file:<path>" or "cmd:<command>".
// `srcs` is needed by file adapters.
std::unique_ptr<ModelAdapter> make_adapter(const std::string& spec, std::span<const TokenSeq> srcs = {},
                                           double timeout_s = 30.0, std::size_t pool = 1);

struct EvaluationReport {
  static constexpr int kSchemaVersion = 1;

  std::string metric;
  double overall = 0.0;
  std::size_t count = 0;
  std::size_t errors = 0;
  // Stratum kind ("length", "depth", ...) -> per-label scores.
  std::map<std::string, std::vector<Stratum>> strata;
  // Metric-specific numbers; NaN is written as null.
  std::map<std::string, double> extra;
  std::map<std::string, std::string> metadata;

  nlohmann::json to_json() const;
};

enum class StratumKey { kLength, kDepth, kNumFunctions, kFunction, kPair };

std::string stratum_name(StratumKey key);

// Sequence accuracy overall and per stratum. `kFunction` strata use the root
// function token; `kPair` uses the first of `pairs` found in src, or "none".
EvaluationReport run_accuracy(ModelAdapter& adapter, std::span<const Sample> testset,
                              std::span<const StratumKey> keys = {}, std::span<const HeldOutPair> pairs = {});

// Consistency plus the correctness breakdown in `extra`: consistent_correct,
// consistent_incorrect, incorrect_pairs, consistency_across_incorrect.
EvaluationReport run_consistency(ModelAdapter& adapter, std::span<const ConsistencyPair> pairs);

struct LocalismSample {
  std::uint64_t id = 0;
  std::size_t steps = 0;
  bool consistent = false;
  std::string failure;  // set on UnrollFailure
};

struct LocalismReport {
  EvaluationReport report;  // overall = consistency
  std::vector<LocalismSample> samples;
};

// Unrolls every sample through the adapter and compares with the direct
// output. Steps are sent in batches, one plan step per sample per batch.
LocalismReport run_localism(ModelAdapter& adapter, std::span<const Sample> samples);

struct ProfilePoint {
  std::string checkpoint;
  double overgeneralisation = 0.0;
  double memorisation = 0.0;
  double other = 0.0;
};

struct OvergeneralisationProfile {
  std::vector<ProfilePoint> points;
  double peak = 0.0;
  std::size_t peak_index = 0;  // first checkpoint reaching the peak
};

struct Checkpoint {
  std::string label;
  std::vector<TokenSeq> predictions;
};

// Throws LineCountMismatchError when a checkpoint is not aligned with the
// exceptions.
OvergeneralisationProfile run_overgeneralisation(std::span<const Checkpoint> checkpoints,
                                                 std::span<const ExceptionEntry> exceptions);

// Files named `<ordinal>_<label>.pred`, sorted by ordinal.
std::vector<Checkpoint> load_checkpoints(const std::filesystem::path& dir);

struct LengthCell {
  std::string function;
  int length = 0;
  double accuracy = 0.0;
  std::size_t count = 0;
};

using LengthCorpora = std::map<std::string, std::map<int, std::vector<Sample>>>;

std::vector<LengthCell> run_length_generalisation(ModelAdapter& adapter, const LengthCorpora& corpora);

struct EosReport {
  std::size_t total = 0;
  std::size_t incorrect = 0;
  std::size_t strict_prefix = 0;
  std::size_t substring = 0;
  // Empty when every prediction is correct.
  std::optional<double> prefix_fraction;
  std::optional<double> substring_fraction;
};

// Among incorrect predictions, how many are a strict prefix of (primary) or
// contained in (secondary) their target. Throws LineCountMismatchError.
EosReport run_eos_analysis(std::span<const TokenSeq> predictions, std::span<const TokenSeq> targets);

nlohmann::json to_json(const LocalismReport& report);
nlohmann::json to_json(const OvergeneralisationProfile& profile);
nlohmann::json to_json(const EosReport& report);

}  // namespace pcfgset
