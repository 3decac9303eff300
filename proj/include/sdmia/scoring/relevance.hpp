#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "sdmia/common/vec.hpp"

namespace sdmia::scoring {

// Concatenation of a unit-norm image embedding and a unit-norm caption
// embedding of the same dimension.
class JointEmbedding {
 public:
  // Throws kDimensionMismatch if the halves differ in length and
  // kValidation if either half is not unit-norm (tolerance 1e-6).
  JointEmbedding(std::span<const double> image_half, std::span<const double> text_half);

  const Vec& vector() const { return vector_; }
  std::size_t half_dim() const { return vector_.size() / 2; }
  std::span<const double> image_half() const { return {vector_.data(), half_dim()}; }
  std::span<const double> text_half() const {
    return {vector_.data() + half_dim(), half_dim()};
  }

 private:
  Vec vector_;
};

// Dot product of the joint vectors divided by two, i.e. the mean of the
// image-half and text-half cosines. In [-1, 1].
double Relevance(const JointEmbedding& target, const JointEmbedding& generated);

struct Pooled {
  double value = 0.0;
  std::size_t n = 0;
};

// Mean of the n largest scores with n = max(1, floor(len * K / 100)).
// K must lie in (0, 100]; throws kEmptyInput on an empty list.
Pooled PoolTopK(std::span<const double> raw_scores, double k_percent);
// Mean of the n largest scores (n clamped to [1, len]).
Pooled PoolTopN(std::span<const double> raw_scores, std::size_t n);

}  // namespace sdmia::scoring
