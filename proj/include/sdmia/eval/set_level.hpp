#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace sdmia::eval {

struct SetInferenceResult {
  std::size_t set_size = 0;  // L
  std::size_t trials = 0;
  double set_auc = 0.0;      // percent
  double p_value = 1.0;      // in (0, 1]
};

// One-sided Mann-Whitney U test that `sample` is stochastically larger than
// `reference`. Normal approximation with tie correction and continuity
// correction. Returns a p-value in (0, 1].
double MannWhitneyGreaterPValue(std::span<const double> sample,
                                std::span<const double> reference);

// Kolmogorov-Smirnov distance between the empirical CDF of `values` and
// Uniform(0, 1).
double KsDistanceToUniform(std::vector<double> values);

// Each trial draws one size-L set from each pool (without replacement
// within the trial) from an RNG stream keyed by (seed, trial), so trials
// are order-independent. The set statistic is the mean score; set AUC
// compares member-set against nonmember-set statistics.
//
// p_value tests one suspect set (a seeded size-L draw from the member pool)
// against the whole nonmember pool, which serves as the calibration
// distribution.
// Throws Error(kValidation) when either pool has fewer than L entries.
SetInferenceResult SetLevel(std::span<const double> member_scores,
                            std::span<const double> nonmember_scores, std::size_t set_size,
                            std::size_t trials, std::uint64_t seed);

std::string SetInferenceJson(const std::vector<SetInferenceResult>& results);

}  // namespace sdmia::eval
