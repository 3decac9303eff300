#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>

namespace sdmia::backends {

struct CacheEntry {
  bool refused = false;
  std::string bytes;  // empty for refusals
};

// Content-addressed response cache, one namespace per backend name.
//
// On disk: <root>/<namespace>/<2 hex>/<key>.blob holds each successful
// response and <root>/<namespace>/index.jsonl is an append-only log of
// {"key", "status", "size"} records; refusals exist only in the index.
// Without a root the cache lives in memory. Reads may run concurrently;
// writes are serialized and a key is never written twice.
class BlobCache {
 public:
  explicit BlobCache(std::optional<std::filesystem::path> root = std::nullopt);

  std::optional<CacheEntry> Get(const std::string& ns, const std::string& key);
  void Put(const std::string& ns, const std::string& key, const CacheEntry& entry);
  std::size_t Size(const std::string& ns);
  const std::optional<std::filesystem::path>& root() const { return root_; }

  // Key = SHA-256 of version tag, a separator and the canonical request.
  static std::string Key(const std::string& version_tag, const std::string& canonical_request);

 private:
  struct Namespace {
    bool loaded = false;
    // key -> refused flag for disk caches, or the whole entry in memory.
    std::unordered_map<std::string, CacheEntry> entries;
  };
  Namespace& Load(const std::string& ns);  // requires the unique lock
  std::filesystem::path BlobPath(const std::string& ns, const std::string& key) const;

  std::optional<std::filesystem::path> root_;
  std::shared_mutex mu_;
  std::map<std::string, Namespace> spaces_;
};

}  // namespace sdmia::backends
