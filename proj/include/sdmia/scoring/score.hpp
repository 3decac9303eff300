#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "sdmia/perturb/perturb.hpp"
#include "sdmia/scoring/relevance.hpp"

namespace sdmia::scoring {

struct ViewScoreSet {
  perturb::ViewKind view = perturb::ViewKind::kToken;
  std::vector<double> raw_scores;  // refused generations excluded
  double pooled = 0.0;
  std::size_t n_pooled = 0;
  bool dropped = false;  // every generation of the view was refused
};

using ViewWeights = std::array<double, 3>;  // token, style, semantic

struct MembershipReport {
  std::string sample_id;
  double s_perturbed = 0.0;
  double s_unperturbed = 0.0;
  double s_final = 0.0;
  std::array<ViewScoreSet, 3> per_view;
  std::optional<double> baseline_reconstruction;
  std::size_t query_count = 0;
  std::vector<std::string> flags;
};

// Generated joint embeddings for one caption, one slot per generation;
// nullopt marks a refused generation.
using GenerationSlots = std::vector<std::optional<JointEmbedding>>;

struct SampleGenerations {
  GenerationSlots unperturbed;
  // Per view, per perturbed caption.
  std::array<std::vector<GenerationSlots>, 3> perturbed;
};

// Throws kValidation unless weights are non-negative with a positive sum.
void ValidateWeights(const ViewWeights& w);

// Weighted mean of the pooled view scores over views that are not dropped
// and carry positive weight. Throws Error(kUnscorable) when none remain.
double CombineViews(const std::array<ViewScoreSet, 3>& per_view, const ViewWeights& w);

// Relevance of each generation to the target, pooled per view with top-K%,
// combined with the view weights, minus the pooled unperturbed relevance.
// Throws Error(kUnscorable) if the unperturbed caption has no generation or
// no weighted view survives.
MembershipReport ScoreSample(const std::string& sample_id, const JointEmbedding& target,
                             const SampleGenerations& generations, double k_percent,
                             const ViewWeights& weights);

// Mean image-half cosine between the target and each repeat.
double ReconstructionBaseline(const JointEmbedding& target, const GenerationSlots& repeats);

nlohmann::ordered_json ToJson(const MembershipReport& r);
MembershipReport MembershipReportFromJson(const nlohmann::json& j);

}  // namespace sdmia::scoring
