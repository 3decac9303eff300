#pragma once

#include <cstddef>
#include <vector>

#include "sdmia/common/vec.hpp"

namespace sdmia::dataset {

struct LogisticOptions {
  double inverse_regularization = 1000.0;  // C
  std::size_t max_iterations = 1000;
  double tolerance = 1e-6;  // on the gradient norm of the mean objective
};

// Binary L2-regularised logistic regression (intercept unpenalised), fit by
// full-batch gradient descent with Armijo backtracking. Minimises
//   (1/n) sum log(1 + exp(-y_i (w.x_i + b))) + |w|^2 / (2 C n)
// which has the same minimiser as the usual C-weighted formulation.
class LogisticRegression {
 public:
  explicit LogisticRegression(LogisticOptions options = {}) : options_(options) {}

  // labels: 1 for the positive class, 0 otherwise.
  void Fit(const std::vector<Vec>& features, const std::vector<int>& labels);

  double DecisionValue(const Vec& x) const;
  int Predict(const Vec& x) const { return DecisionValue(x) > 0.0 ? 1 : 0; }
  double Accuracy(const std::vector<Vec>& features, const std::vector<int>& labels) const;

  const Vec& weights() const { return weights_; }
  double bias() const { return bias_; }
  std::size_t iterations() const { return iterations_; }
  bool converged() const { return converged_; }

 private:
  LogisticOptions options_;
  Vec weights_;
  double bias_ = 0.0;
  std::size_t iterations_ = 0;
  bool converged_ = false;
};

}  // namespace sdmia::dataset
