#pragma once

#include <cstddef>
#include <vector>

#include "sdmia/dataset/sample.hpp"

namespace sdmia::dataset {

struct MatchedPair {
  std::size_t member = 0;
  std::size_t nonmember = 0;
  double distance = 0.0;  // cosine distance, 1 - cos

  bool operator==(const MatchedPair&) const = default;
};

// Greedy nearest-neighbour matching without replacement under cosine
// distance. Pairs come out in ascending distance and no index repeats.
// Ties are resolved by (min index, max index, member index) so the result
// transposes when the two lists are swapped.
std::vector<MatchedPair> MatchDistributions(
    const std::vector<EmbeddingVector>& members,
    const std::vector<EmbeddingVector>& nonmembers, std::size_t max_pairs);

}  // namespace sdmia::dataset
