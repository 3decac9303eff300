#include "sdmia/eval/metrics.hpp"

#include <algorithm>
#include <limits>

#include "sdmia/common/error.hpp"

namespace sdmia::eval {

namespace {

void RequireBoth(std::span<const double> pos, std::span<const double> neg) {
  if (pos.empty() || neg.empty()) {
    throw Error(ErrorCode::kEmptyInput, "metric needs both classes non-empty");
  }
}

constexpr double kEnumerationLimit = 1e6;

}  // namespace

double AucByEnumeration(std::span<const double> pos, std::span<const double> neg) {
  RequireBoth(pos, neg);
  double credit = 0.0;
  for (double p : pos) {
    for (double n : neg) {
      if (p > n) {
        credit += 1.0;
      } else if (p == n) {
        credit += 0.5;
      }
    }
  }
  return credit / (static_cast<double>(pos.size()) * static_cast<double>(neg.size()));
}

double AucByRanks(std::span<const double> pos, std::span<const double> neg) {
  RequireBoth(pos, neg);
  struct Item {
    double score;
    bool positive;
  };
  std::vector<Item> items;
  items.reserve(pos.size() + neg.size());
  for (double p : pos) items.push_back({p, true});
  for (double n : neg) items.push_back({n, false});
  std::sort(items.begin(), items.end(),
            [](const Item& a, const Item& b) { return a.score < b.score; });
  // Sum of 1-based midranks of positives; every value is a multiple of 0.5
  // so the sum is exact.
  double rank_sum = 0.0;
  std::size_t i = 0;
  while (i < items.size()) {
    std::size_t j = i;
    while (j < items.size() && items[j].score == items[i].score) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (items[k].positive) rank_sum += midrank;
    }
    i = j;
  }
  const double np = static_cast<double>(pos.size());
  const double nn = static_cast<double>(neg.size());
  return (rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

double Auc(std::span<const double> pos, std::span<const double> neg) {
  RequireBoth(pos, neg);
  if (static_cast<double>(pos.size()) * static_cast<double>(neg.size()) <= kEnumerationLimit) {
    return AucByEnumeration(pos, neg);
  }
  return AucByRanks(pos, neg);
}

double TprAtFpr(std::span<const double> pos, std::span<const double> neg, double fpr_cap) {
  RequireBoth(pos, neg);
  if (!(fpr_cap > 0.0 && fpr_cap < 1.0)) {
    throw Error(ErrorCode::kValidation, "fpr cap must lie in (0, 1)");
  }
  std::vector<double> sorted_pos(pos.begin(), pos.end());
  std::vector<double> sorted_neg(neg.begin(), neg.end());
  std::sort(sorted_pos.begin(), sorted_pos.end());
  std::sort(sorted_neg.begin(), sorted_neg.end());
  std::vector<double> support = sorted_pos;
  support.insert(support.end(), sorted_neg.begin(), sorted_neg.end());
  std::sort(support.begin(), support.end());
  support.erase(std::unique(support.begin(), support.end()), support.end());

  const double nn = static_cast<double>(neg.size());
  auto count_at_least = [](const std::vector<double>& sorted, double t) {
    return static_cast<double>(sorted.end() - std::lower_bound(sorted.begin(), sorted.end(), t));
  };
  // FPR falls as the threshold rises, and TPR with it, so the answer sits at
  // the smallest feasible threshold.
  for (double t : support) {
    if (count_at_least(sorted_neg, t) / nn <= fpr_cap) {
      return count_at_least(sorted_pos, t) / static_cast<double>(pos.size());
    }
  }
  return 0.0;  // threshold above every score
}

std::vector<RocPoint> RocCurve(std::span<const double> pos, std::span<const double> neg) {
  RequireBoth(pos, neg);
  std::vector<std::pair<double, bool>> items;
  for (double p : pos) items.emplace_back(p, true);
  for (double n : neg) items.emplace_back(n, false);
  std::sort(items.begin(), items.end(),
            [](const auto& a, const auto& b) { return a.first > b.first; });
  std::vector<RocPoint> out{{0.0, 0.0}};
  double tp = 0.0, fp = 0.0;
  std::size_t i = 0;
  while (i < items.size()) {
    std::size_t j = i;
    while (j < items.size() && items[j].first == items[i].first) {
      (items[j].second ? tp : fp) += 1.0;
      ++j;
    }
    out.push_back({fp / static_cast<double>(neg.size()), tp / static_cast<double>(pos.size())});
    i = j;
  }
  return out;
}

}  // namespace sdmia::eval
