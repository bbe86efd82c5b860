#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "leakscan/extraction.hpp"
#include "leakscan/summaries.hpp"

namespace leakscan {

enum class CacheMode {
  Replay,  // cache only; a miss is an error (offline default)
  Record,  // always call the endpoint and persist the exchange
  Auto,    // replay on hit, record on miss
};

struct ClientConfig {
  std::string endpoint;              // http(s)://host[:port]/path
  std::string model_id;              // profile name, e.g. "generation" / "validation"
  std::string api_key_env = "LEAKSCAN_API_KEY";
  double timeout_seconds = 60.0;
  int max_retries = 2;               // on transient failures
  double temperature = 0.0;          // pinned for reproducibility
  std::string cache_dir;
  CacheMode mode = CacheMode::Replay;
};

enum class LlmErrorKind { CacheMiss, Transient, Permanent };

struct LlmError : std::runtime_error {
  LlmErrorKind kind;
  LlmError(LlmErrorKind k, const std::string& msg) : std::runtime_error(msg), kind(k) {}
};

struct CompletionExchange {
  std::string cache_key;
  std::string model_id;
  std::string prompt;
  std::string response;
};

/// Digest of (model_id, prompt); the cache filename stem.
std::string completion_cache_key(const std::string& model_id, const std::string& prompt);

/// Chat-completion client with a content-addressed record/replay cache.
/// One JSON file per exchange under cache_dir. Transport errors surface as
/// LlmError{Transient|Permanent}; replay misses as LlmError{CacheMiss}.
class LlmClient {
 public:
  explicit LlmClient(ClientConfig config);

  std::string complete(const std::string& prompt);

  std::optional<CompletionExchange> cache_lookup(const std::string& prompt) const;
  void cache_store(const CompletionExchange& e) const;

  const ClientConfig& config() const { return config_; }

 private:
  std::string call_endpoint(const std::string& prompt) const;
  ClientConfig config_;
};

struct HeuristicOptions {
  std::vector<std::string> alloc_primitives = {"malloc", "calloc",       "realloc",
                                               "strdup", "aligned_alloc", "new"};
  std::vector<std::string> free_primitives = {"free", "delete"};
  int max_depth = 10;
};

/// Offline rule-based stand-in for model classification: a function returning
/// the result of a known allocation primitive (or of an already-classified
/// allocator, transitively within max_depth) is an allocator; one forwarding
/// a parameter (or an identifier alias of it) to a known deallocation
/// primitive or classified deallocator is a deallocator of that argument.
/// Anything else yields no summary. Provenance is marked Heuristic.
std::vector<FunctionSummary> heuristic_classify(const FunctionRecord& rec, const Codebase& cb,
                                                const HeuristicOptions& opts = {});

/// heuristic_classify over every record, one shared memo; deterministic
/// record order.
std::vector<FunctionSummary> heuristic_classify_all(const Codebase& cb,
                                                    const HeuristicOptions& opts = {});

}  // namespace leakscan
