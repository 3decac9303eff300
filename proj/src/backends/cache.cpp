#include "sdmia/backends/cache.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "sdmia/common/error.hpp"
#include "sdmia/common/hash.hpp"
#include "sdmia/common/text.hpp"

namespace sdmia::backends {

namespace fs = std::filesystem;

BlobCache::BlobCache(std::optional<fs::path> root) : root_(std::move(root)) {}

std::string BlobCache::Key(const std::string& version_tag, const std::string& canonical_request) {
  std::string material = version_tag;
  material += '\n';
  material += canonical_request;
  return Sha256Hex(material);
}

fs::path BlobCache::BlobPath(const std::string& ns, const std::string& key) const {
  return *root_ / ns / key.substr(0, 2) / (key + ".blob");
}

BlobCache::Namespace& BlobCache::Load(const std::string& ns) {
  Namespace& space = spaces_[ns];
  if (space.loaded) return space;
  space.loaded = true;
  if (!root_) return space;
  const fs::path index = *root_ / ns / "index.jsonl";
  if (!fs::exists(index)) return space;
  std::istringstream in(ReadFile(index));
  std::string line;
  while (std::getline(in, line)) {
    if (Trim(line).empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      CacheEntry e;
      e.refused = j.at("status").get<std::string>() == "refused";
      space.entries[j.at("key").get<std::string>()] = e;
    } catch (const nlohmann::json::exception&) {
      // A torn trailing line from an interrupted run; the blob is rewritten
      // on the next request.
    }
  }
  return space;
}

std::optional<CacheEntry> BlobCache::Get(const std::string& ns, const std::string& key) {
  {
    std::shared_lock lock(mu_);
    auto it = spaces_.find(ns);
    if (it != spaces_.end() && it->second.loaded) {
      auto e = it->second.entries.find(key);
      if (e == it->second.entries.end()) return std::nullopt;
      if (!root_ || e->second.refused) return e->second;
      CacheEntry out;
      out.bytes = ReadFile(BlobPath(ns, key));
      return out;
    }
  }
  {
    std::unique_lock lock(mu_);
    Load(ns);
  }
  return Get(ns, key);
}

void BlobCache::Put(const std::string& ns, const std::string& key, const CacheEntry& entry) {
  std::unique_lock lock(mu_);
  Namespace& space = Load(ns);
  if (space.entries.count(key)) return;
  if (!root_) {
    space.entries[key] = entry;
    return;
  }
  if (!entry.refused) WriteFileAtomic(BlobPath(ns, key), entry.bytes);
  nlohmann::ordered_json rec;
  rec["key"] = key;
  rec["status"] = entry.refused ? "refused" : "ok";
  rec["size"] = entry.bytes.size();
  const fs::path index = *root_ / ns / "index.jsonl";
  fs::create_directories(index.parent_path());
  std::ofstream out(index, std::ios::app | std::ios::binary);
  out << rec.dump() << '\n';
  out.flush();
  if (!out) throw Error(ErrorCode::kIo, "cannot append to " + index.string());
  CacheEntry marker;
  marker.refused = entry.refused;
  space.entries[key] = marker;
}

std::size_t BlobCache::Size(const std::string& ns) {
  std::unique_lock lock(mu_);
  return Load(ns).entries.size();
}

}  // namespace sdmia::backends
