#include "sdmia/dataset/pca.hpp"

#include <Eigen/Dense>

#include <cmath>

#include "sdmia/common/error.hpp"

namespace sdmia::dataset {

double PcaResult::ExplainedFraction() const {
  if (total_variance <= 0.0) return 0.0;
  double kept = 0.0;
  for (std::size_t k = 0; k < components.size(); ++k) kept += explained_variance[k];
  return kept / total_variance;
}

Vec PcaResult::Reconstruct(const Vec& projected) const {
  Vec out = mean;
  for (std::size_t k = 0; k < components.size(); ++k) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += projected[k] * components[k][i];
  }
  return out;
}

PcaResult PcaProject(const std::vector<EmbeddingVector>& embeddings,
                     std::size_t out_dim) {
  if (out_dim == 0) throw Error(ErrorCode::kValidation, "out_dim must be positive");
  if (embeddings.size() < out_dim + 1) {
    throw Error(ErrorCode::kValidation,
                "PCA needs at least " + std::to_string(out_dim + 1) + " points");
  }
  CheckHomogeneous(embeddings);
  const std::size_t n = embeddings.size();
  const std::size_t d = embeddings.front().dim();
  if (d < out_dim) throw Error(ErrorCode::kValidation, "dimension below out_dim");

  Eigen::MatrixXd x(n, d);
  for (std::size_t r = 0; r < n; ++r) {
    const Vec& v = embeddings[r].values();
    for (std::size_t c = 0; c < d; ++c) x(r, c) = v[c];
  }
  const Eigen::RowVectorXd mu = x.colwise().mean();
  x.rowwise() -= mu;
  const Eigen::MatrixXd cov = (x.transpose() * x) / static_cast<double>(n - 1);

  const double total = cov.trace();
  const double scale = mu.squaredNorm() + 1.0;
  if (!(total > 1e-24 * scale)) {
    throw Error(ErrorCode::kDegenerateData, "all points coincide; covariance is zero");
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorCode::kDegenerateData, "eigen decomposition failed");
  }
  // Eigen returns ascending eigenvalues.
  const Eigen::VectorXd& evals = solver.eigenvalues();
  const Eigen::MatrixXd& evecs = solver.eigenvectors();

  PcaResult result;
  result.total_variance = total;
  result.mean.assign(mu.data(), mu.data() + d);
  for (std::size_t k = 0; k < d; ++k) {
    result.explained_variance.push_back(std::max(0.0, evals(static_cast<Eigen::Index>(d - 1 - k))));
  }
  Eigen::MatrixXd basis(d, out_dim);
  for (std::size_t k = 0; k < out_dim; ++k) {
    Eigen::VectorXd dir = evecs.col(static_cast<Eigen::Index>(d - 1 - k));
    Eigen::Index arg = 0;
    dir.cwiseAbs().maxCoeff(&arg);
    if (dir(arg) < 0) dir = -dir;
    basis.col(static_cast<Eigen::Index>(k)) = dir;
    result.components.emplace_back(dir.data(), dir.data() + d);
  }
  const Eigen::MatrixXd proj = x * basis;
  result.points.reserve(n);
  for (std::size_t r = 0; r < n; ++r) {
    Vec p(out_dim);
    for (std::size_t k = 0; k < out_dim; ++k) p[k] = proj(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k));
    result.points.push_back(std::move(p));
  }
  return result;
}

}  // namespace sdmia::dataset
