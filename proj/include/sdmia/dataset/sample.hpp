#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sdmia/common/vec.hpp"

namespace sdmia::dataset {

enum class Label { kMember, kNonMember };

const char* LabelName(Label label);
// Accepts "member" / "nonmember" (also "non-member", "non_member").
std::optional<Label> ParseLabel(std::string_view text);

// A suspect image-caption pair.
struct Sample {
  std::string id;
  std::string image;  // local path (relative to the manifest) or URL
  std::optional<std::string> caption;
  std::optional<Label> label;
  std::string source;

  bool operator==(const Sample&) const = default;
};

enum class ManifestMode { kAudit, kBenchmark };

struct SampleSet {
  std::vector<Sample> samples;
  ManifestMode mode = ManifestMode::kAudit;
  std::filesystem::path base_dir;
  // Labels dropped because the manifest was loaded in audit mode.
  std::size_t stripped_labels = 0;

  std::size_t size() const { return samples.size(); }
  std::size_t CountLabel(Label label) const;
  // Resolves a sample image reference against the manifest directory.
  std::string ResolveImage(const Sample& sample) const;
};

bool IsUrl(std::string_view ref);

enum class EmbeddingSpace { kText, kImage, kJoint };

// A finite fixed-length vector tagged with the space it lives in.
class EmbeddingVector {
 public:
  EmbeddingVector() = default;
  // Throws Error(kValidation) on empty or non-finite values.
  EmbeddingVector(Vec values, EmbeddingSpace space);

  const Vec& values() const { return values_; }
  std::size_t dim() const { return values_.size(); }
  EmbeddingSpace space() const { return space_; }

  bool operator==(const EmbeddingVector&) const = default;

 private:
  Vec values_;
  EmbeddingSpace space_ = EmbeddingSpace::kJoint;
};

// Throws Error(kDimensionMismatch) unless every vector shares dim and space.
void CheckHomogeneous(const std::vector<EmbeddingVector>& a,
                      const std::vector<EmbeddingVector>& b = {});

}  // namespace sdmia::dataset
