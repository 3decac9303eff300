#include "sdmia/dataset/logistic.hpp"

#include <Eigen/Dense>

#include <cmath>

#include "sdmia/common/error.hpp"

namespace sdmia::dataset {

namespace {

// log(1 + exp(z)) without overflow.
double Softplus(double z) {
  return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

double Sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

void LogisticRegression::Fit(const std::vector<Vec>& features,
                             const std::vector<int>& labels) {
  if (features.empty() || features.size() != labels.size()) {
    throw Error(ErrorCode::kValidation, "logistic regression needs matching non-empty inputs");
  }
  const auto n = static_cast<Eigen::Index>(features.size());
  const auto d = static_cast<Eigen::Index>(features.front().size());
  Eigen::MatrixXd x(n, d);
  Eigen::VectorXd y(n);  // +-1
  for (Eigen::Index r = 0; r < n; ++r) {
    const Vec& f = features[static_cast<std::size_t>(r)];
    if (static_cast<Eigen::Index>(f.size()) != d) {
      throw Error(ErrorCode::kDimensionMismatch, "feature rows differ in length");
    }
    for (Eigen::Index c = 0; c < d; ++c) x(r, c) = f[static_cast<std::size_t>(c)];
    y(r) = labels[static_cast<std::size_t>(r)] == 1 ? 1.0 : -1.0;
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  const double lambda = 1.0 / (options_.inverse_regularization * static_cast<double>(n));

  Eigen::VectorXd w = Eigen::VectorXd::Zero(d);
  double b = 0.0;

  auto objective = [&](const Eigen::VectorXd& wv, double bv) {
    Eigen::VectorXd margin = (x * wv).array() + bv;
    double loss = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) loss += Softplus(-y(i) * margin(i));
    return loss * inv_n + 0.5 * lambda * wv.squaredNorm();
  };

  double f = objective(w, b);
  double step = 1.0;
  converged_ = false;
  iterations_ = 0;
  Eigen::VectorXd coef(n);
  for (std::size_t it = 0; it < options_.max_iterations; ++it) {
    Eigen::VectorXd margin = (x * w).array() + b;
    for (Eigen::Index i = 0; i < n; ++i) coef(i) = -y(i) * Sigmoid(-y(i) * margin(i)) * inv_n;
    Eigen::VectorXd gw = x.transpose() * coef + lambda * w;
    double gb = coef.sum();
    const double gnorm2 = gw.squaredNorm() + gb * gb;
    if (std::sqrt(gnorm2) < options_.tolerance) {
      converged_ = true;
      break;
    }
    step *= 2.0;
    for (;;) {
      Eigen::VectorXd w_new = w - step * gw;
      const double b_new = b - step * gb;
      const double f_new = objective(w_new, b_new);
      if (f_new <= f - 0.5 * step * gnorm2 || step < 1e-16) {
        w = std::move(w_new);
        b = b_new;
        f = f_new;
        break;
      }
      step *= 0.5;
    }
    iterations_ = it + 1;
  }
  weights_.assign(w.data(), w.data() + d);
  bias_ = b;
}

double LogisticRegression::DecisionValue(const Vec& x) const {
  return Dot(weights_, x) + bias_;
}

double LogisticRegression::Accuracy(const std::vector<Vec>& features,
                                    const std::vector<int>& labels) const {
  if (features.empty()) return 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (Predict(features[i]) == labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(features.size());
}

}  // namespace sdmia::dataset
