#include "sdmia/scoring/relevance.hpp"

#include <algorithm>
#include <cmath>

#include "sdmia/common/error.hpp"

namespace sdmia::scoring {

namespace {
constexpr double kUnitTolerance = 1e-6;

void RequireUnit(std::span<const double> v, const char* which) {
  if (std::abs(Norm(v) - 1.0) > kUnitTolerance) {
    throw Error(ErrorCode::kValidation, std::string(which) + " half is not unit-norm");
  }
}
}  // namespace

JointEmbedding::JointEmbedding(std::span<const double> image_half,
                               std::span<const double> text_half) {
  if (image_half.size() != text_half.size()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "joint halves differ: " + std::to_string(image_half.size()) + " vs " +
                    std::to_string(text_half.size()));
  }
  if (image_half.empty()) throw Error(ErrorCode::kEmptyInput, "empty joint halves");
  RequireUnit(image_half, "image");
  RequireUnit(text_half, "text");
  vector_.reserve(2 * image_half.size());
  vector_.insert(vector_.end(), image_half.begin(), image_half.end());
  vector_.insert(vector_.end(), text_half.begin(), text_half.end());
}

double Relevance(const JointEmbedding& target, const JointEmbedding& generated) {
  if (target.vector().size() != generated.vector().size()) {
    throw Error(ErrorCode::kDimensionMismatch, "joint embeddings differ in dimension");
  }
  return 0.5 * Dot(target.vector(), generated.vector());
}

Pooled PoolTopN(std::span<const double> raw_scores, std::size_t n) {
  if (raw_scores.empty()) throw Error(ErrorCode::kEmptyInput, "nothing to pool");
  n = std::clamp<std::size_t>(n, 1, raw_scores.size());
  std::vector<double> sorted(raw_scores.begin(), raw_scores.end());
  // Stable so that, among values tied at the cut, earlier inputs are taken.
  std::stable_sort(sorted.begin(), sorted.end(), std::greater<>());
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += sorted[i];
  return {sum / static_cast<double>(n), n};
}

Pooled PoolTopK(std::span<const double> raw_scores, double k_percent) {
  if (!(k_percent > 0.0 && k_percent <= 100.0)) {
    throw Error(ErrorCode::kValidation, "K percent must lie in (0, 100]");
  }
  if (raw_scores.empty()) throw Error(ErrorCode::kEmptyInput, "nothing to pool");
  const auto n = static_cast<std::size_t>(
      std::floor(static_cast<double>(raw_scores.size()) * k_percent / 100.0));
  return PoolTopN(raw_scores, std::max<std::size_t>(1, n));
}

}  // namespace sdmia::scoring
