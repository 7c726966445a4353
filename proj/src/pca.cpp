#include <Eigen/Dense>

#include <stdexcept>

#include "twvae/evaluate.hpp"

namespace twvae {

EvalReport pca_baseline(const std::vector<Trajectory>& train_set, const std::vector<Trajectory>& test_set,
                        std::size_t components, std::size_t length) {
  if (train_set.empty()) throw std::invalid_argument("pca_baseline: empty training set");
  const std::size_t dims = train_set.front().dims();
  const std::size_t width = length * dims;
  if (components < 1 || components > std::min(train_set.size(), width)) {
    throw std::invalid_argument("pca_baseline: components must lie in [1, min(count, T*n)]");
  }
  auto flatten = [&](const std::vector<Trajectory>& xs, std::vector<Trajectory>& resampled) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(xs.size()), static_cast<Eigen::Index>(width));
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (xs[i].dims() != dims) throw std::invalid_argument("pca_baseline: channel count mismatch");
      resampled.push_back(xs[i].length() == length ? xs[i] : resample(xs[i], length));
      const auto s = resampled.back().samples();
      for (std::size_t k = 0; k < width; ++k) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = s[k];
    }
    return m;
  };
  std::vector<Trajectory> train_x, test_x;
  const Eigen::MatrixXd train = flatten(train_set, train_x);
  const Eigen::MatrixXd test = flatten(test_set, test_x);

  const Eigen::RowVectorXd mu = train.colwise().mean();
  const Eigen::MatrixXd centered = train.rowwise() - mu;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
  const Eigen::MatrixXd basis = svd.matrixV().leftCols(static_cast<Eigen::Index>(components));

  auto project = [&](const Eigen::MatrixXd& data, const std::vector<Trajectory>& originals) {
    std::vector<Trajectory> recon;
    if (data.rows() == 0) return recon;
    const Eigen::MatrixXd c = data.rowwise() - mu;
    const Eigen::MatrixXd r = ((c * basis) * basis.transpose()).rowwise() + mu;
    for (Eigen::Index i = 0; i < r.rows(); ++i) {
      std::vector<double> v(width);
      for (std::size_t k = 0; k < width; ++k) v[k] = r(i, static_cast<Eigen::Index>(k));
      recon.emplace_back(length, dims, std::move(v), originals[static_cast<std::size_t>(i)].channels());
    }
    return recon;
  };

  EvalReport report;
  report.train_errors = aligned_errors(train_x, project(train, train_x));
  report.test_errors = aligned_errors(test_x, project(test, test_x));
  double s = 0.0;
  for (double e : report.train_errors) s += e;
  report.train_aligned_rmse = s / static_cast<double>(report.train_errors.size());
  s = 0.0;
  for (double e : report.test_errors) s += e;
  report.test_aligned_rmse = report.test_errors.empty() ? 0.0 : s / static_cast<double>(report.test_errors.size());
  return report;
}

}  // namespace twvae
