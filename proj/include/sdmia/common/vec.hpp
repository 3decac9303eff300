#pragma once

#include <cmath>
#include <span>
#include <vector>

namespace sdmia {

using Vec = std::vector<double>;

double Dot(std::span<const double> a, std::span<const double> b);
double Norm(std::span<const double> a);
// Returns a / |a|. Throws Error(kDegenerateData) on a zero or non-finite vector.
Vec Normalized(std::span<const double> a);
double Cosine(std::span<const double> a, std::span<const double> b);
bool AllFinite(std::span<const double> a);

double Mean(std::span<const double> xs);
// Sample standard deviation (n - 1 denominator); zero for n < 2.
double StdDev(std::span<const double> xs);

}  // namespace sdmia
