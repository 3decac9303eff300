#include "sdmia/dataset/sample.hpp"

#include "sdmia/common/error.hpp"

namespace sdmia::dataset {

const char* LabelName(Label label) {
  return label == Label::kMember ? "member" : "nonmember";
}

std::optional<Label> ParseLabel(std::string_view text) {
  if (text == "member") return Label::kMember;
  if (text == "nonmember" || text == "non-member" || text == "non_member") {
    return Label::kNonMember;
  }
  return std::nullopt;
}

std::size_t SampleSet::CountLabel(Label label) const {
  std::size_t n = 0;
  for (const Sample& s : samples) {
    if (s.label == label) ++n;
  }
  return n;
}

bool IsUrl(std::string_view ref) {
  return ref.starts_with("http://") || ref.starts_with("https://");
}

std::string SampleSet::ResolveImage(const Sample& sample) const {
  if (IsUrl(sample.image)) return sample.image;
  std::filesystem::path p(sample.image);
  if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
  return p.lexically_normal().string();
}

EmbeddingVector::EmbeddingVector(Vec values, EmbeddingSpace space)
    : values_(std::move(values)), space_(space) {
  if (values_.empty()) {
    throw Error(ErrorCode::kValidation, "embedding vector has zero length");
  }
  if (!AllFinite(values_)) {
    throw Error(ErrorCode::kValidation, "embedding vector has non-finite entries");
  }
}

void CheckHomogeneous(const std::vector<EmbeddingVector>& a,
                      const std::vector<EmbeddingVector>& b) {
  const EmbeddingVector* first = !a.empty() ? &a.front()
                                 : !b.empty() ? &b.front()
                                              : nullptr;
  if (first == nullptr) return;
  for (const auto* list : {&a, &b}) {
    for (const EmbeddingVector& v : *list) {
      if (v.dim() != first->dim() || v.space() != first->space()) {
        throw Error(ErrorCode::kDimensionMismatch,
                    "embedding dim/space mismatch: " + std::to_string(v.dim()) +
                        " vs " + std::to_string(first->dim()));
      }
    }
  }
}

}  // namespace sdmia::dataset
