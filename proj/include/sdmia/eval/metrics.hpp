#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace sdmia::eval {

// Probability that a random positive outscores a random negative, ties
// counted as one half (the Mann-Whitney statistic). Result in [0, 1].
// Enumerates pairs when |pos|*|neg| <= 1e6 and uses midranks otherwise.
// Throws Error(kEmptyInput) when either class is empty.
double Auc(std::span<const double> pos, std::span<const double> neg);
double AucByEnumeration(std::span<const double> pos, std::span<const double> neg);
double AucByRanks(std::span<const double> pos, std::span<const double> neg);

// Largest TPR over thresholds t drawn from the score support (plus +inf)
// such that |{n >= t}| / |neg| <= fpr_cap. TPR(t) = |{p >= t}| / |pos|.
double TprAtFpr(std::span<const double> pos, std::span<const double> neg, double fpr_cap);

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
};
// Staircase ROC from (0,0) to (1,1), one point per distinct threshold.
std::vector<RocPoint> RocCurve(std::span<const double> pos, std::span<const double> neg);

}  // namespace sdmia::eval
