#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "sdmia/dataset/logistic.hpp"
#include "sdmia/dataset/sample.hpp"

namespace sdmia::dataset {

struct ProjectedPoint {
  double pc1 = 0.0;
  double pc2 = 0.0;
  Label label = Label::kMember;
};

struct BiasProbeResult {
  double accuracy = 0.0;  // mean held-out accuracy over repeats
  std::vector<double> per_repeat;
  std::size_t n_members = 0;
  std::size_t n_nonmembers = 0;
  std::vector<ProjectedPoint> projected_points;
};

struct BiasProbeOptions {
  std::size_t repeats = 5;
  double train_fraction = 0.8;
  std::size_t min_per_class = 20;
  double max_imbalance = 100.0;
  LogisticOptions logistic;
};

// Trains a member-vs-nonmember classifier on seeded stratified splits and
// reports held-out accuracy. Near 0.5 means the two pools are not
// distinguishable from their embeddings alone.
// Throws kUnprobeable when a class has fewer than min_per_class vectors or
// the class ratio exceeds max_imbalance.
BiasProbeResult BiasProbe(const std::vector<EmbeddingVector>& members,
                          const std::vector<EmbeddingVector>& nonmembers,
                          std::uint64_t seed, const BiasProbeOptions& options = {});

// JSON report: accuracy, per-repeat accuracies, counts, projected points.
std::string BiasProbeReportJson(const BiasProbeResult& result);

}  // namespace sdmia::dataset
