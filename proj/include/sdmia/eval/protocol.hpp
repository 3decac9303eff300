#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "sdmia/dataset/sample.hpp"

namespace sdmia::eval {

struct LabeledScore {
  double score = 0.0;
  dataset::Label label = dataset::Label::kMember;
};

// member:nonmember proportion, e.g. 1:1 or 1:10.
struct Ratio {
  std::size_t members = 1;
  std::size_t nonmembers = 1;

  std::string ToString() const;
  // Parses "a:b" with positive integers. Throws Error(kValidation).
  static Ratio Parse(const std::string& text);
  bool operator==(const Ratio&) const = default;
};

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

struct SeedResult {
  double auc = 0.0;                  // percent
  std::map<double, double> tpr;      // fpr cap -> percent
  std::size_t n_members = 0;
  std::size_t n_nonmembers = 0;
};

struct EvalReport {
  MeanStd auc;                        // percent
  std::map<double, MeanStd> tpr_at_fpr;  // caps 0.01, 0.05, 0.10
  Ratio ratio;
  std::size_t n_seeds = 0;
  std::vector<SeedResult> per_seed;
};

inline const std::vector<double>& DefaultFprCaps() {
  static const std::vector<double> caps{0.01, 0.05, 0.10};
  return caps;
}

// Population standard deviation (divide by n).
MeanStd Summarize(const std::vector<double>& values);

// Per seed, subsamples members and nonmembers without replacement to the
// exact ratio (as many units as the scarcer side allows), then computes AUC
// and TPR at each FPR cap. Throws Error(kInfeasible) if either side cannot
// supply a single unit.
EvalReport Evaluate(const std::vector<LabeledScore>& scores, Ratio ratio,
                    std::size_t n_seeds = 5, std::uint64_t seed = 0);

std::string EvalReportJson(const EvalReport& report);

}  // namespace sdmia::eval
