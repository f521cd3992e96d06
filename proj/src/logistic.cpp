#include <cmath>

#include "cvselect/error.hpp"
#include "cvselect/models.hpp"

namespace cvselect {
namespace {

double sigmoid(double eta) {
  if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

// Bernoulli log-likelihood in terms of the linear predictor.
double loglik(const Eigen::VectorXd& eta, const Eigen::VectorXd& y) {
  double ll = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    // log(1 + exp(eta)) computed without overflow
    const double softplus = eta[i] > 0.0 ? eta[i] + std::log1p(std::exp(-eta[i])) : std::log1p(std::exp(eta[i]));
    ll += y[i] * eta[i] - softplus;
  }
  return ll;
}

constexpr double kSeparationEta = 40.0;

}  // namespace

Prediction LogisticModel::predict(const Dataset& data, std::size_t row) const {
  double eta = coef[0];
  const auto r = static_cast<Eigen::Index>(row);
  for (std::size_t j = 0; j < features.size(); ++j) eta += coef[static_cast<Eigen::Index>(j + 1)] * data.features(r, static_cast<Eigen::Index>(features[j]));
  return Prediction::probability(sigmoid(eta), threshold);
}

LogisticModel fit_logistic(const Dataset& data, std::span<const std::size_t> rows, std::span<const std::size_t> features,
                           std::size_t max_iter, double tol, double threshold) {
  if (data.task != Task::classification) throw UsageError("logistic regression needs a classification response");
  const Eigen::MatrixXd x = design_matrix(data, rows, features);
  const Eigen::VectorXd y = gather(data.response, rows);
  if (x.rows() < x.cols()) throw FitError("logistic: fewer rows than coefficients");
  {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
    if (qr.rank() < x.cols()) throw FitError("logistic: design matrix is rank deficient");
  }

  LogisticModel m;
  m.features.assign(features.begin(), features.end());
  m.threshold = threshold;
  m.coef = Eigen::VectorXd::Zero(x.cols());
  Eigen::VectorXd eta = x * m.coef;
  double ll = loglik(eta, y);
  m.loglik_trace.push_back(ll);

  for (std::size_t it = 1; it <= max_iter; ++it) {
    Eigen::VectorXd prob(eta.size()), w(eta.size());
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
      prob[i] = sigmoid(eta[i]);
      w[i] = prob[i] * (1.0 - prob[i]);
    }
    const Eigen::MatrixXd info = x.transpose() * w.asDiagonal() * x;
    const Eigen::VectorXd score = x.transpose() * (y - prob);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) throw FitError("logistic: information matrix is singular");
    Eigen::VectorXd step = ldlt.solve(score);

    // Step halving keeps the log-likelihood non-decreasing.
    Eigen::VectorXd next = m.coef + step;
    Eigen::VectorXd next_eta = x * next;
    double next_ll = loglik(next_eta, y);
    for (int h = 0; h < 40 && !(next_ll >= ll); ++h) {
      step *= 0.5;
      next = m.coef + step;
      next_eta = x * next;
      next_ll = loglik(next_eta, y);
    }
    if (!(next_ll >= ll)) {
      next = m.coef;
      next_eta = eta;
      next_ll = ll;
      step.setZero();
    }

    m.coef = next;
    eta = next_eta;
    ll = next_ll;
    m.loglik_trace.push_back(ll);
    m.iterations = it;

    if (eta.cwiseAbs().maxCoeff() > kSeparationEta) {
      throw FitError("logistic: separation detected (fitted probabilities numerically 0 or 1 after " + std::to_string(it) +
                     " iterations)");
    }
    if (step.cwiseAbs().maxCoeff() < tol) return m;
  }
  throw FitError("logistic: IRLS did not converge after " + std::to_string(max_iter) + " iterations");
}

}  // namespace cvselect
