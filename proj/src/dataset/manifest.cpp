#include "sdmia/dataset/manifest.hpp"

#include "json.hpp"

#include <sstream>
#include <unordered_set>

#include "sdmia/common/error.hpp"
#include "sdmia/common/text.hpp"

namespace sdmia::dataset {

using nlohmann::ordered_json;

namespace {

std::string RequireString(const ordered_json& rec, const char* field,
                          std::size_t line) {
  auto it = rec.find(field);
  if (it == rec.end()) {
    throw MalformedRecordError(line, std::string("missing field \"") + field + "\"");
  }
  if (!it->is_string()) {
    throw MalformedRecordError(line, std::string("field \"") + field + "\" is not a string");
  }
  return it->get<std::string>();
}

std::optional<std::string> OptionalString(const ordered_json& rec,
                                          const char* field, std::size_t line) {
  auto it = rec.find(field);
  if (it == rec.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) {
    throw MalformedRecordError(line, std::string("field \"") + field + "\" is not a string");
  }
  return it->get<std::string>();
}

}  // namespace

SampleSet ParseManifest(const std::string& text, ManifestMode mode,
                        const std::filesystem::path& base_dir,
                        const LoadOptions& options) {
  SampleSet set;
  set.mode = mode;
  set.base_dir = base_dir;
  std::unordered_set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (Trim(line).empty()) continue;
    ordered_json rec;
    try {
      rec = ordered_json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw MalformedRecordError(line_no, e.what());
    }
    if (!rec.is_object()) throw MalformedRecordError(line_no, "record is not an object");

    Sample s;
    s.id = RequireString(rec, "id", line_no);
    s.image = RequireString(rec, "image", line_no);
    if (s.id.empty()) throw MalformedRecordError(line_no, "empty id");
    if (s.image.empty()) throw MalformedRecordError(line_no, "empty image reference");
    s.caption = OptionalString(rec, "caption", line_no);
    if (s.caption && Trim(*s.caption).empty()) s.caption.reset();
    s.source = OptionalString(rec, "source", line_no).value_or("");
    if (auto label_text = OptionalString(rec, "label", line_no)) {
      auto label = ParseLabel(*label_text);
      if (!label) throw MalformedRecordError(line_no, "unknown label \"" + *label_text + "\"");
      if (mode == ManifestMode::kBenchmark) {
        s.label = label;
      } else {
        ++set.stripped_labels;
      }
    } else if (mode == ManifestMode::kBenchmark) {
      throw Error(ErrorCode::kMissingLabel,
                  "line " + std::to_string(line_no) + ": record \"" + s.id +
                      "\" has no label in benchmark mode");
    }
    if (!seen.insert(s.id).second) throw DuplicateIdError(s.id);
    if (options.check_images && !IsUrl(s.image)) {
      const std::string resolved = set.ResolveImage(s);
      if (!std::filesystem::exists(resolved)) {
        throw MalformedRecordError(line_no, "image not found: " + resolved);
      }
    }
    set.samples.push_back(std::move(s));
  }
  return set;
}

SampleSet LoadManifest(const std::filesystem::path& path, ManifestMode mode,
                       const LoadOptions& options) {
  return ParseManifest(ReadFile(path), mode, path.parent_path(), options);
}

std::string SerializeManifest(const SampleSet& set) {
  std::string out;
  for (const Sample& s : set.samples) {
    ordered_json rec;
    rec["id"] = s.id;
    rec["image"] = s.image;
    if (s.caption) rec["caption"] = *s.caption;
    if (s.label) rec["label"] = LabelName(*s.label);
    if (!s.source.empty()) rec["source"] = s.source;
    out += rec.dump();
    out.push_back('\n');
  }
  return out;
}

void SaveManifest(const SampleSet& set, const std::filesystem::path& path) {
  WriteFileAtomic(path, SerializeManifest(set));
}

}  // namespace sdmia::dataset
