#pragma once

// Independent reference implementations used to freeze expected values.
// Deliberately naive: enumeration, full sorts and direct sums.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <vector>

#include "sdmia/common/rng.hpp"

namespace oracle {

// Scores on a coarse grid so ties are frequent.
inline std::vector<double> TiedScores(sdmia::Rng& rng, std::size_t n) {
  std::vector<double> out(n);
  for (double& x : out) x = static_cast<double>(rng.UniformInt(12)) / 11.0;
  return out;
}

inline double PairAuc(const std::vector<double>& pos, const std::vector<double>& neg) {
  long wins2 = 0;  // twice the credit, kept integral
  for (double p : pos)
    for (double n : neg) wins2 += p > n ? 2 : (p == n ? 1 : 0);
  return static_cast<double>(wins2) / 2.0 / static_cast<double>(pos.size() * neg.size());
}

// Tries every support value plus +inf as a threshold.
inline double SweepTpr(const std::vector<double>& pos, const std::vector<double>& neg,
                       double cap) {
  std::vector<double> thresholds = pos;
  thresholds.insert(thresholds.end(), neg.begin(), neg.end());
  thresholds.push_back(std::numeric_limits<double>::infinity());
  double best = 0.0;
  for (double t : thresholds) {
    std::size_t fp = 0, tp = 0;
    for (double n : neg) fp += n >= t;
    for (double p : pos) tp += p >= t;
    if (static_cast<double>(fp) / static_cast<double>(neg.size()) <= cap) {
      best = std::max(best, static_cast<double>(tp) / static_cast<double>(pos.size()));
    }
  }
  return best;
}

inline double MannWhitneyNormalP(const std::vector<double>& a, const std::vector<double>& b,
                                 double u) {
  const double n1 = a.size(), n2 = b.size(), n = n1 + n2;
  std::map<double, int> counts;
  for (double x : a) counts[x]++;
  for (double x : b) counts[x]++;
  double ties = 0.0;
  for (auto& [v, c] : counts) ties += static_cast<double>(c) * c * c - c;
  const double sd = std::sqrt(n1 * n2 / 12.0 * ((n + 1) - ties / (n * (n - 1))));
  const double z = (u - n1 * n2 / 2.0 - 0.5) / sd;
  return 0.5 * std::erfc(z / std::sqrt(2.0));
}

// Mean of the n largest values found by a full descending sort.
inline double TopKBySort(std::vector<double> v, double k_percent) {
  std::sort(v.begin(), v.end(), std::greater<>());
  std::size_t n = static_cast<std::size_t>(std::floor(v.size() * k_percent / 100.0));
  n = std::max<std::size_t>(1, std::min(n, v.size()));
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += v[i];
  return s / static_cast<double>(n);
}

// P[Binomial(n, p) >= k], summed term by term in log space.
inline double BinomialUpperTail(int n, double p, int k) {
  double total = 0.0;
  for (int i = k; i <= n; ++i) {
    const double logc = std::lgamma(n + 1.0) - std::lgamma(i + 1.0) - std::lgamma(n - i + 1.0);
    total += std::exp(logc + i * std::log(p) + (n - i) * std::log1p(-p));
  }
  return total;
}

}  // namespace oracle
