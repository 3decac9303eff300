#include "sdmia/common/vec.hpp"

#include "sdmia/common/error.hpp"

namespace sdmia {

double Dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "dot product of " + std::to_string(a.size()) + " and " +
                    std::to_string(b.size()) + " dims");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double Norm(std::span<const double> a) { return std::sqrt(Dot(a, a)); }

Vec Normalized(std::span<const double> a) {
  const double n = Norm(a);
  if (!(n > 0.0) || !std::isfinite(n)) {
    throw Error(ErrorCode::kDegenerateData, "cannot normalize zero vector");
  }
  Vec out(a.begin(), a.end());
  for (double& x : out) x /= n;
  return out;
}

double Cosine(std::span<const double> a, std::span<const double> b) {
  const double d = Dot(a, b);
  const double n = Norm(a) * Norm(b);
  if (!(n > 0.0)) {
    throw Error(ErrorCode::kDegenerateData, "cosine of zero vector");
  }
  return d / n;
}

bool AllFinite(std::span<const double> a) {
  for (double x : a) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

double Mean(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double StdDev(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  const double m = Mean(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(xs.size() - 1));
}

}  // namespace sdmia
