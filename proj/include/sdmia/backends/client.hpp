#pragma once

#include <condition_variable>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <ostream>
#include <string>

#include "json.hpp"
#include "sdmia/backends/backend.hpp"
#include "sdmia/backends/cache.hpp"

namespace sdmia::backends {

// Per-backend query accounting. A request is served either from the cache
// (cache_hits), by a successful remote call (calls), as a refusal (refusals,
// fresh or cached) or not at all (failures). attempts counts every remote
// try including retries; wall_ms sums the latency of remote tries.
struct LedgerCounters {
  std::uint64_t requests = 0;
  std::uint64_t calls = 0;
  std::uint64_t cache_hits = 0;
  std::uint64_t refusals = 0;
  std::uint64_t failures = 0;
  std::uint64_t attempts = 0;
  double wall_ms = 0.0;
};

class Ledger {
 public:
  void Add(const std::string& backend, const LedgerCounters& delta);
  std::map<std::string, LedgerCounters> Snapshot() const;
  LedgerCounters Get(const std::string& backend) const;

  nlohmann::ordered_json ToJson() const;
  static std::map<std::string, LedgerCounters> FromJson(const nlohmann::json& j);

 private:
  mutable std::mutex mu_;
  std::map<std::string, LedgerCounters> counters_;
};

// Wire log for --trace. Authorization values are redacted before writing.
class Tracer {
 public:
  explicit Tracer(std::ostream& out) : out_(out) {}
  void Log(const std::string& backend, const std::string& direction, const std::string& text);
  static std::string Redact(const std::string& text);

 private:
  std::mutex mu_;
  std::ostream& out_;
};

class Semaphore {
 public:
  explicit Semaphore(int permits) : permits_(permits < 1 ? 1 : permits) {}
  void Acquire();
  void Release();

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  int permits_;
};

struct RetryPolicy {
  int max_attempts = 4;
  double base_delay_ms = 200.0;
  double max_delay_ms = 10000.0;
};

struct ClientOptions {
  RetryPolicy retry;
  int max_in_flight = 4;
  // Replay mode: a cache miss throws Error(kCacheMiss) instead of calling out.
  bool cache_only = false;
  // Replaced in tests to avoid real sleeps.
  std::function<void(double ms)> sleep;
};

// Shared machinery for the cached, retrying, concurrency-limited clients.
class ClientBase {
 public:
  ClientBase(BackendId id, std::shared_ptr<BlobCache> cache, std::shared_ptr<Ledger> ledger,
             ClientOptions options);
  const BackendId& id() const { return id_; }

 protected:
  struct Outcome {
    CacheEntry entry;
    bool cache_hit = false;
    int attempts = 0;
    double latency_ms = 0.0;
  };
  // Looks the request up in the cache, otherwise runs `call` under the
  // retry policy and the in-flight limit, then stores the result.
  Outcome Fetch(const std::string& canonical_request, const std::function<CacheEntry()>& call);
  std::string Namespace() const;

  BackendId id_;
  std::shared_ptr<BlobCache> cache_;
  std::shared_ptr<Ledger> ledger_;
  ClientOptions options_;
  Semaphore in_flight_;
};

struct GenerationRecord {
  std::string prompt;
  std::uint64_t seed = 0;
  std::string image;  // "sha256:<hex>" content reference; empty when refused
  std::shared_ptr<const std::string> bytes;
  BackendId backend;
  double latency_ms = 0.0;
  bool cache_hit = false;
  bool refused = false;
  int attempts = 0;
};

std::string ContentRef(std::string_view bytes);

class GenerationClient : public ClientBase {
 public:
  GenerationClient(BackendId id, std::shared_ptr<Generator> impl, std::shared_ptr<BlobCache> cache,
                   std::shared_ptr<Ledger> ledger, ClientOptions options = {});
  GenerationRecord Generate(const std::string& prompt, std::uint64_t seed,
                            const GenerationParams& params);

 private:
  std::shared_ptr<Generator> impl_;
};

// Returns unit-norm vectors of the declared dimension; a backend returning a
// different length raises kDimensionMismatch.
class TextEmbedClient : public ClientBase {
 public:
  TextEmbedClient(BackendId id, std::shared_ptr<TextEmbedder> impl,
                  std::shared_ptr<BlobCache> cache, std::shared_ptr<Ledger> ledger,
                  ClientOptions options = {});
  Vec Embed(const std::string& text);
  std::size_t dim() const { return dim_; }

 private:
  std::shared_ptr<TextEmbedder> impl_;
  std::size_t dim_;
};

class ImageEmbedClient : public ClientBase {
 public:
  ImageEmbedClient(BackendId id, std::shared_ptr<ImageEmbedder> impl,
                   std::shared_ptr<BlobCache> cache, std::shared_ptr<Ledger> ledger,
                   ClientOptions options = {});
  Vec Embed(std::string_view image_bytes);
  std::size_t dim() const { return dim_; }

 private:
  std::shared_ptr<ImageEmbedder> impl_;
  std::size_t dim_;
};

class CaptionClient : public ClientBase {
 public:
  CaptionClient(BackendId id, std::shared_ptr<Captioner> impl, std::shared_ptr<BlobCache> cache,
                std::shared_ptr<Ledger> ledger, ClientOptions options = {});
  std::string Caption(std::string_view image_bytes);

 private:
  std::shared_ptr<Captioner> impl_;
};

class RewriteClient : public ClientBase {
 public:
  RewriteClient(BackendId id, std::shared_ptr<Rewriter> impl, std::shared_ptr<BlobCache> cache,
                std::shared_ptr<Ledger> ledger, ClientOptions options = {});
  std::string Rewrite(const std::string& instruction, std::uint64_t seed);

 private:
  std::shared_ptr<Rewriter> impl_;
};

}  // namespace sdmia::backends
