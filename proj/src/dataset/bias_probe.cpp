#include "sdmia/dataset/bias_probe.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"
#include "sdmia/common/error.hpp"
#include "sdmia/common/hash.hpp"
#include "sdmia/common/rng.hpp"
#include "sdmia/dataset/pca.hpp"

namespace sdmia::dataset {

BiasProbeResult BiasProbe(const std::vector<EmbeddingVector>& members,
                          const std::vector<EmbeddingVector>& nonmembers,
                          std::uint64_t seed, const BiasProbeOptions& options) {
  const std::size_t nm = members.size();
  const std::size_t nn = nonmembers.size();
  if (nm < options.min_per_class || nn < options.min_per_class) {
    throw Error(ErrorCode::kUnprobeable,
                "bias probe needs at least " + std::to_string(options.min_per_class) +
                    " vectors per class (got " + std::to_string(nm) + "/" +
                    std::to_string(nn) + ")");
  }
  const double ratio = static_cast<double>(std::max(nm, nn)) /
                       static_cast<double>(std::min(nm, nn));
  if (ratio > options.max_imbalance) {
    throw Error(ErrorCode::kUnprobeable, "class imbalance exceeds 100:1");
  }
  CheckHomogeneous(members, nonmembers);

  BiasProbeResult result;
  result.n_members = nm;
  result.n_nonmembers = nn;

  for (std::size_t r = 0; r < options.repeats; ++r) {
    Rng rng(DeriveSeed(seed, {0xb1a5, r}));
    std::vector<Vec> train_x, test_x;
    std::vector<int> train_y, test_y;
    auto split = [&](const std::vector<EmbeddingVector>& pool, int label) {
      std::vector<std::size_t> order =
          rng.SampleWithoutReplacement(pool.size(), pool.size());
      const auto n_train = static_cast<std::size_t>(
          std::floor(options.train_fraction * static_cast<double>(pool.size())));
      for (std::size_t k = 0; k < order.size(); ++k) {
        const Vec& v = pool[order[k]].values();
        if (k < n_train) {
          train_x.push_back(v);
          train_y.push_back(label);
        } else {
          test_x.push_back(v);
          test_y.push_back(label);
        }
      }
    };
    split(members, 1);
    split(nonmembers, 0);
    LogisticRegression model(options.logistic);
    model.Fit(train_x, train_y);
    result.per_repeat.push_back(model.Accuracy(test_x, test_y));
  }
  result.accuracy = Mean(result.per_repeat);

  std::vector<EmbeddingVector> all;
  all.reserve(nm + nn);
  all.insert(all.end(), members.begin(), members.end());
  all.insert(all.end(), nonmembers.begin(), nonmembers.end());
  if (all.front().dim() >= 2) {
    try {
      PcaResult pca = PcaProject(all, 2);
      for (std::size_t i = 0; i < all.size(); ++i) {
        result.projected_points.push_back(
            {pca.points[i][0], pca.points[i][1], i < nm ? Label::kMember : Label::kNonMember});
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kDegenerateData) throw;
    }
  }
  return result;
}

std::string BiasProbeReportJson(const BiasProbeResult& result) {
  nlohmann::ordered_json j;
  j["accuracy"] = result.accuracy;
  j["per_repeat"] = result.per_repeat;
  j["n_members"] = result.n_members;
  j["n_nonmembers"] = result.n_nonmembers;
  auto rows = nlohmann::ordered_json::array();
  for (const ProjectedPoint& p : result.projected_points) {
    rows.push_back({p.pc1, p.pc2, LabelName(p.label)});
  }
  j["projected_points"] = std::move(rows);
  return j.dump(2) + "\n";
}

}  // namespace sdmia::dataset
