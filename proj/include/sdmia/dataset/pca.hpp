#pragma once

#include <cstddef>
#include <vector>

#include "sdmia/common/vec.hpp"
#include "sdmia/dataset/sample.hpp"

namespace sdmia::dataset {

struct PcaResult {
  std::vector<Vec> points;      // one out_dim-vector per input, in input order
  std::vector<Vec> components;  // out_dim unit directions, descending variance
  Vec explained_variance;       // eigenvalues of the sample covariance
  double total_variance = 0.0;
  Vec mean;

  // Fraction of total variance captured by the retained components.
  double ExplainedFraction() const;
  // Maps a projected point back to the input space.
  Vec Reconstruct(const Vec& projected) const;
};

// Mean-centred projection onto the top out_dim principal directions. Each
// direction is signed so its largest-magnitude entry is positive.
// Throws kDegenerateData when all points coincide, kValidation when there
// are fewer than out_dim + 1 points or the dimension is below out_dim.
PcaResult PcaProject(const std::vector<EmbeddingVector>& embeddings,
                     std::size_t out_dim = 2);

}  // namespace sdmia::dataset
