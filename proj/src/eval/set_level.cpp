#include "sdmia/eval/set_level.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "json.hpp"
#include "sdmia/common/error.hpp"
#include "sdmia/common/hash.hpp"
#include "sdmia/common/rng.hpp"
#include "sdmia/eval/metrics.hpp"

namespace sdmia::eval {

namespace {
constexpr std::size_t kMinTrials = 100;
}

double MannWhitneyGreaterPValue(std::span<const double> sample,
                                std::span<const double> reference) {
  if (sample.empty() || reference.empty()) {
    throw Error(ErrorCode::kEmptyInput, "Mann-Whitney test needs both samples non-empty");
  }
  const double n1 = static_cast<double>(sample.size());
  const double n2 = static_cast<double>(reference.size());
  const double n = n1 + n2;
  // U counts pairs where the sample wins, ties as one half.
  const double u = AucByRanks(sample, reference) * n1 * n2;

  std::vector<double> all(sample.begin(), sample.end());
  all.insert(all.end(), reference.begin(), reference.end());
  std::sort(all.begin(), all.end());
  double tie_term = 0.0;
  for (std::size_t i = 0; i < all.size();) {
    std::size_t j = i;
    while (j < all.size() && all[j] == all[i]) ++j;
    const double t = static_cast<double>(j - i);
    tie_term += t * t * t - t;
    i = j;
  }
  const double mean = n1 * n2 / 2.0;
  const double var = n1 * n2 / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
  if (!(var > 0.0)) return 1.0;
  const double z = (u - mean - 0.5) / std::sqrt(var);
  const double p = 0.5 * std::erfc(z / std::sqrt(2.0));
  return std::clamp(p, std::numeric_limits<double>::min(), 1.0);
}

double KsDistanceToUniform(std::vector<double> values) {
  if (values.empty()) return 1.0;
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  double d = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double v = std::clamp(values[i], 0.0, 1.0);
    d = std::max({d, static_cast<double>(i + 1) / n - v, v - static_cast<double>(i) / n});
  }
  return d;
}

SetInferenceResult SetLevel(std::span<const double> member_scores,
                            std::span<const double> nonmember_scores, std::size_t set_size,
                            std::size_t trials, std::uint64_t seed) {
  if (set_size == 0) throw Error(ErrorCode::kValidation, "set size must be positive");
  if (member_scores.size() < set_size || nonmember_scores.size() < set_size) {
    throw Error(ErrorCode::kValidation,
                "pool smaller than set size " + std::to_string(set_size));
  }
  if (trials < kMinTrials) {
    throw Error(ErrorCode::kValidation, "set-level inference needs at least 100 trials");
  }
  auto draw_mean = [](Rng& rng, std::span<const double> pool, std::size_t k) {
    double s = 0.0;
    for (std::size_t i : rng.SampleWithoutReplacement(pool.size(), k)) s += pool[i];
    return s / static_cast<double>(k);
  };
  std::vector<double> member_stats(trials), nonmember_stats(trials);
  for (std::size_t t = 0; t < trials; ++t) {
    Rng rng(DeriveSeed(seed, {0x5e7, t}));
    member_stats[t] = draw_mean(rng, member_scores, set_size);
    nonmember_stats[t] = draw_mean(rng, nonmember_scores, set_size);
  }
  SetInferenceResult result;
  result.set_size = set_size;
  result.trials = trials;
  result.set_auc = 100.0 * Auc(member_stats, nonmember_stats);

  Rng suspect_rng(DeriveSeed(seed, {0x5a5, 0}));
  std::vector<double> suspect;
  for (std::size_t i : suspect_rng.SampleWithoutReplacement(member_scores.size(), set_size)) {
    suspect.push_back(member_scores[i]);
  }
  result.p_value = MannWhitneyGreaterPValue(suspect, nonmember_scores);
  return result;
}

std::string SetInferenceJson(const std::vector<SetInferenceResult>& results) {
  auto arr = nlohmann::ordered_json::array();
  for (const SetInferenceResult& r : results) {
    nlohmann::ordered_json j;
    j["L"] = r.set_size;
    j["trials"] = r.trials;
    j["set_auc"] = r.set_auc;
    j["p_value"] = r.p_value;
    arr.push_back(std::move(j));
  }
  return arr.dump(2) + "\n";
}

}  // namespace sdmia::eval
