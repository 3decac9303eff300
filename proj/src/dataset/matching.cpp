#include "sdmia/dataset/matching.hpp"

#include <algorithm>
#include <tuple>

#include "sdmia/common/error.hpp"

namespace sdmia::dataset {

std::vector<MatchedPair> MatchDistributions(
    const std::vector<EmbeddingVector>& members,
    const std::vector<EmbeddingVector>& nonmembers, std::size_t max_pairs) {
  if (members.empty() || nonmembers.empty()) {
    throw Error(ErrorCode::kEmptyInput, "matching needs both lists non-empty");
  }
  CheckHomogeneous(members, nonmembers);

  std::vector<Vec> a;
  std::vector<Vec> b;
  a.reserve(members.size());
  b.reserve(nonmembers.size());
  for (const auto& v : members) a.push_back(Normalized(v.values()));
  for (const auto& v : nonmembers) b.push_back(Normalized(v.values()));

  std::vector<MatchedPair> all;
  all.reserve(a.size() * b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      all.push_back({i, j, 1.0 - Dot(a[i], b[j])});
    }
  }
  auto key = [](const MatchedPair& p) {
    return std::make_tuple(p.distance, std::min(p.member, p.nonmember),
                           std::max(p.member, p.nonmember), p.member);
  };
  std::sort(all.begin(), all.end(),
            [&](const MatchedPair& x, const MatchedPair& y) { return key(x) < key(y); });

  std::vector<bool> used_a(a.size(), false);
  std::vector<bool> used_b(b.size(), false);
  std::vector<MatchedPair> out;
  const std::size_t limit = std::min({max_pairs, a.size(), b.size()});
  for (const MatchedPair& p : all) {
    if (out.size() >= limit) break;
    if (used_a[p.member] || used_b[p.nonmember]) continue;
    used_a[p.member] = true;
    used_b[p.nonmember] = true;
    out.push_back(p);
  }
  return out;
}

}  // namespace sdmia::dataset
