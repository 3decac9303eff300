#include "sdmia/scoring/score.hpp"

#include <cmath>

#include "sdmia/common/error.hpp"

namespace sdmia::scoring {

namespace {

std::vector<double> RelevanceList(const JointEmbedding& target, const GenerationSlots& slots) {
  std::vector<double> out;
  out.reserve(slots.size());
  for (const auto& g : slots) {
    if (g) out.push_back(Relevance(target, *g));
  }
  return out;
}

}  // namespace

void ValidateWeights(const ViewWeights& w) {
  double sum = 0.0;
  for (double x : w) {
    if (!(x >= 0.0) || !std::isfinite(x)) {
      throw Error(ErrorCode::kValidation, "view weights must be finite and non-negative");
    }
    sum += x;
  }
  if (!(sum > 0.0)) throw Error(ErrorCode::kValidation, "view weights must not all be zero");
}

double CombineViews(const std::array<ViewScoreSet, 3>& per_view, const ViewWeights& w) {
  double num = 0.0, den = 0.0;
  for (std::size_t v = 0; v < 3; ++v) {
    if (per_view[v].dropped || w[v] <= 0.0) continue;
    num += w[v] * per_view[v].pooled;
    den += w[v];
  }
  if (den <= 0.0) throw Error(ErrorCode::kUnscorable, "every weighted view was refused");
  return num / den;
}

MembershipReport ScoreSample(const std::string& sample_id, const JointEmbedding& target,
                             const SampleGenerations& generations, double k_percent,
                             const ViewWeights& weights) {
  ValidateWeights(weights);
  MembershipReport r;
  r.sample_id = sample_id;
  for (std::size_t v = 0; v < 3; ++v) {
    ViewScoreSet& set = r.per_view[v];
    set.view = perturb::kAllViews[v];
    for (const auto& slots : generations.perturbed[v]) {
      const auto rel = RelevanceList(target, slots);
      set.raw_scores.insert(set.raw_scores.end(), rel.begin(), rel.end());
      r.query_count += slots.size();
    }
    if (set.raw_scores.empty()) {
      set.dropped = true;
      if (weights[v] > 0.0) r.flags.push_back(std::string(perturb::ViewName(set.view)) + "_refused");
      continue;
    }
    const Pooled p = PoolTopK(set.raw_scores, k_percent);
    set.pooled = p.value;
    set.n_pooled = p.n;
  }
  r.query_count += generations.unperturbed.size();
  const auto base = RelevanceList(target, generations.unperturbed);
  if (base.empty()) {
    throw Error(ErrorCode::kUnscorable, sample_id + ": every unperturbed generation was refused");
  }
  r.s_unperturbed = PoolTopK(base, k_percent).value;
  r.s_perturbed = CombineViews(r.per_view, weights);
  r.s_final = r.s_perturbed - r.s_unperturbed;
  return r;
}

double ReconstructionBaseline(const JointEmbedding& target, const GenerationSlots& repeats) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& g : repeats) {
    if (!g) continue;
    sum += Dot(target.image_half(), g->image_half());
    ++n;
  }
  if (n == 0) throw Error(ErrorCode::kUnscorable, "no reconstruction to compare");
  return sum / static_cast<double>(n);
}

nlohmann::ordered_json ToJson(const MembershipReport& r) {
  nlohmann::ordered_json j;
  j["sample_id"] = r.sample_id;
  j["s_final"] = r.s_final;
  j["s_perturbed"] = r.s_perturbed;
  j["s_unperturbed"] = r.s_unperturbed;
  nlohmann::ordered_json views = nlohmann::ordered_json::array();
  for (const auto& v : r.per_view) {
    nlohmann::ordered_json e;
    e["view"] = perturb::ViewName(v.view);
    e["pooled"] = v.pooled;
    e["n_pooled"] = v.n_pooled;
    e["dropped"] = v.dropped;
    e["raw_scores"] = v.raw_scores;
    views.push_back(e);
  }
  j["per_view"] = views;
  j["baseline_reconstruction"] =
      r.baseline_reconstruction ? nlohmann::ordered_json(*r.baseline_reconstruction) : nullptr;
  j["query_count"] = r.query_count;
  j["flags"] = r.flags;
  return j;
}

MembershipReport MembershipReportFromJson(const nlohmann::json& j) {
  MembershipReport r;
  r.sample_id = j.at("sample_id").get<std::string>();
  r.s_final = j.at("s_final").get<double>();
  r.s_perturbed = j.at("s_perturbed").get<double>();
  r.s_unperturbed = j.at("s_unperturbed").get<double>();
  const auto& views = j.at("per_view");
  if (views.size() != 3) throw Error(ErrorCode::kMalformedRecord, "per_view needs three entries");
  for (std::size_t v = 0; v < 3; ++v) {
    ViewScoreSet& s = r.per_view[v];
    s.view = perturb::ParseView(views[v].at("view").get<std::string>());
    s.pooled = views[v].at("pooled").get<double>();
    s.n_pooled = views[v].at("n_pooled").get<std::size_t>();
    s.dropped = views[v].at("dropped").get<bool>();
    s.raw_scores = views[v].at("raw_scores").get<std::vector<double>>();
  }
  if (!j.at("baseline_reconstruction").is_null()) {
    r.baseline_reconstruction = j.at("baseline_reconstruction").get<double>();
  }
  r.query_count = j.at("query_count").get<std::size_t>();
  r.flags = j.at("flags").get<std::vector<std::string>>();
  return r;
}

}  // namespace sdmia::scoring
