#include "sdmia/eval/protocol.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"
#include "sdmia/common/error.hpp"
#include "sdmia/common/hash.hpp"
#include "sdmia/common/rng.hpp"
#include "sdmia/eval/metrics.hpp"

namespace sdmia::eval {

std::string Ratio::ToString() const {
  return std::to_string(members) + ":" + std::to_string(nonmembers);
}

Ratio Ratio::Parse(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw Error(ErrorCode::kValidation, "ratio must look like a:b");
  Ratio r;
  try {
    std::size_t used = 0;
    const long a = std::stol(text.substr(0, colon), &used);
    if (used != colon) throw std::invalid_argument("a");
    const std::string rest = text.substr(colon + 1);
    const long b = std::stol(rest, &used);
    if (used != rest.size()) throw std::invalid_argument("b");
    if (a <= 0 || b <= 0) throw std::invalid_argument("sign");
    r.members = static_cast<std::size_t>(a);
    r.nonmembers = static_cast<std::size_t>(b);
  } catch (const std::logic_error&) {
    throw Error(ErrorCode::kValidation, "invalid ratio \"" + text + "\"");
  }
  return r;
}

MeanStd Summarize(const std::vector<double>& values) {
  MeanStd out;
  if (values.empty()) return out;
  for (double v : values) out.mean += v;
  out.mean /= static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - out.mean) * (v - out.mean);
  out.std = std::sqrt(ss / static_cast<double>(values.size()));
  return out;
}

EvalReport Evaluate(const std::vector<LabeledScore>& scores, Ratio ratio,
                    std::size_t n_seeds, std::uint64_t seed) {
  if (n_seeds == 0) throw Error(ErrorCode::kValidation, "n_seeds must be positive");
  std::vector<double> members, nonmembers;
  for (const LabeledScore& s : scores) {
    (s.label == dataset::Label::kMember ? members : nonmembers).push_back(s.score);
  }
  const std::size_t units =
      std::min(members.size() / ratio.members, nonmembers.size() / ratio.nonmembers);
  if (units == 0) {
    throw Error(ErrorCode::kInfeasible,
                "cannot realise ratio " + ratio.ToString() + " from " +
                    std::to_string(members.size()) + " members and " +
                    std::to_string(nonmembers.size()) + " nonmembers");
  }
  const std::size_t take_m = units * ratio.members;
  const std::size_t take_n = units * ratio.nonmembers;

  EvalReport report;
  report.ratio = ratio;
  report.n_seeds = n_seeds;
  std::vector<double> aucs;
  std::map<double, std::vector<double>> tprs;
  for (std::size_t s = 0; s < n_seeds; ++s) {
    Rng rng(DeriveSeed(seed, {0xe7a1, s}));
    std::vector<double> pos, neg;
    // Keep the drawn subset in original order so a full draw reproduces the
    // input exactly.
    auto pick = [&](const std::vector<double>& pool, std::size_t k, std::vector<double>& out) {
      std::vector<std::size_t> idx = rng.SampleWithoutReplacement(pool.size(), k);
      std::sort(idx.begin(), idx.end());
      for (std::size_t i : idx) out.push_back(pool[i]);
    };
    pick(members, take_m, pos);
    pick(nonmembers, take_n, neg);
    SeedResult r;
    r.n_members = pos.size();
    r.n_nonmembers = neg.size();
    r.auc = 100.0 * Auc(pos, neg);
    aucs.push_back(r.auc);
    for (double cap : DefaultFprCaps()) {
      r.tpr[cap] = 100.0 * TprAtFpr(pos, neg, cap);
      tprs[cap].push_back(r.tpr[cap]);
    }
    report.per_seed.push_back(std::move(r));
  }
  report.auc = Summarize(aucs);
  for (auto& [cap, values] : tprs) report.tpr_at_fpr[cap] = Summarize(values);
  return report;
}

std::string EvalReportJson(const EvalReport& report) {
  nlohmann::ordered_json j;
  j["ratio"] = report.ratio.ToString();
  j["n_seeds"] = report.n_seeds;
  j["auc"] = {{"mean", report.auc.mean}, {"std", report.auc.std}};
  auto tpr = nlohmann::ordered_json::object();
  for (const auto& [cap, ms] : report.tpr_at_fpr) {
    tpr[std::to_string(static_cast<int>(std::lround(cap * 100))) + "%"] = {
        {"mean", ms.mean}, {"std", ms.std}};
  }
  j["tpr_at_fpr"] = std::move(tpr);
  auto seeds = nlohmann::ordered_json::array();
  for (const SeedResult& r : report.per_seed) {
    nlohmann::ordered_json sj;
    sj["auc"] = r.auc;
    sj["n_members"] = r.n_members;
    sj["n_nonmembers"] = r.n_nonmembers;
    for (const auto& [cap, v] : r.tpr) {
      sj["tpr@" + std::to_string(static_cast<int>(std::lround(cap * 100))) + "%"] = v;
    }
    seeds.push_back(std::move(sj));
  }
  j["per_seed"] = std::move(seeds);
  return j.dump(2) + "\n";
}

}  // namespace sdmia::eval
