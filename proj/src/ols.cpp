#include <algorithm>
#include <cmath>

#include "cvselect/error.hpp"
#include "cvselect/kernels.hpp"
#include "cvselect/models.hpp"

namespace cvselect {
namespace {

std::string column_name(const Dataset& data, std::span<const std::size_t> features, Eigen::Index col) {
  if (col == 0) return "(intercept)";
  const auto f = features[static_cast<std::size_t>(col - 1)];
  return f < data.feature_names.size() ? data.feature_names[f] : "#" + std::to_string(f);
}

}  // namespace

Prediction OlsModel::predict(const Dataset& data, std::size_t row) const {
  double m = coef[0];
  const auto r = static_cast<Eigen::Index>(row);
  for (std::size_t j = 0; j < features.size(); ++j) m += coef[static_cast<Eigen::Index>(j + 1)] * data.features(r, static_cast<Eigen::Index>(features[j]));
  return Prediction::regression(m, sigma);
}

OlsModel fit_ols(const Dataset& data, std::span<const std::size_t> rows, std::span<const std::size_t> features) {
  if (rows.empty()) throw FitError("OLS: no training rows");
  const Eigen::MatrixXd x = design_matrix(data, rows, features);
  const Eigen::VectorXd y = gather(data.response, rows);

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  if (qr.rank() < x.cols()) {
    std::string cols;
    const auto& perm = qr.colsPermutation().indices();
    for (Eigen::Index k = qr.rank(); k < x.cols(); ++k) {
      cols += (cols.empty() ? "" : ", ") + column_name(data, features, perm[k]);
    }
    throw FitError("OLS: design matrix is rank deficient (rank " + std::to_string(qr.rank()) + " of " +
                   std::to_string(x.cols()) + "); collinear columns: " + cols);
  }

  OlsModel m;
  m.features.assign(features.begin(), features.end());
  m.coef = qr.solve(y);
  const Eigen::VectorXd fitted = x * m.coef;
  m.residuals = y - fitted;
  m.rss = kernels::sum_sq_diff(std::span<const double>(y.data(), static_cast<std::size_t>(y.size())),
                               std::span<const double>(fitted.data(), static_cast<std::size_t>(fitted.size())));
  m.sigma = std::sqrt(m.rss / static_cast<double>(rows.size()));

  const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(x.rows(), x.cols());
  m.hat = q.rowwise().squaredNorm();
  return m;
}

}  // namespace cvselect
