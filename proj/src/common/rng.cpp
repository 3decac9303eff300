#include "sdmia/common/rng.hpp"

#include <numeric>

namespace sdmia {

std::vector<double> Rng::RandomDirection(std::size_t n, double norm) {
  std::vector<double> v;
  double sq = 0.0;
  do {
    v = NormalVector(n);
    sq = 0.0;
    for (double x : v) sq += x * x;
  } while (sq <= 0.0);
  const double s = norm / std::sqrt(sq);
  for (double& x : v) x *= s;
  return v;
}

std::vector<std::size_t> Rng::SampleWithoutReplacement(std::size_t n,
                                                       std::size_t k) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (k > n) k = n;
  for (std::size_t i = 0; i < k; ++i) {
    std::size_t j = i + static_cast<std::size_t>(UniformInt(n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  return idx;
}

}  // namespace sdmia
