#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cvselect/error.hpp"
#include "cvselect/kernels.hpp"
#include "cvselect/models.hpp"

namespace cvselect {
namespace {

using Span = std::span<const double>;
using MutSpan = std::span<double>;

Span col_span(const Eigen::MatrixXd& m, Eigen::Index j) { return {m.col(j).data(), static_cast<std::size_t>(m.rows())}; }
Span vec_span(const Eigen::VectorXd& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }
MutSpan vec_span(Eigen::VectorXd& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

// Soft-thresholding operator. A relative slack of 1e-12 makes
// |z| == threshold (up to rounding) produce an exact zero, so that the fit at
// lambda_max is exactly the null model.
double soft_threshold(double z, double t) {
  const double slack = t * (1.0 + 1e-12);
  if (z > slack) return z - t;
  if (z < -slack) return z + t;
  return 0.0;
}

constexpr std::size_t kMaxOuter = 100;

double sigmoid(double eta) {
  if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

struct Standardized {
  Eigen::MatrixXd x;  // centred, optionally scaled columns
  Eigen::VectorXd center;
  Eigen::VectorXd scale;  // 0 marks a constant column
};

Standardized standardize(const Dataset& data, std::span<const std::size_t> rows, std::span<const std::size_t> features, bool scale) {
  Standardized s;
  const Eigen::MatrixXd design = design_matrix(data, rows, features);
  s.x = design.rightCols(design.cols() - 1);
  const double n = static_cast<double>(rows.size());
  s.center = s.x.colwise().mean().transpose();
  s.x.rowwise() -= s.center.transpose();
  s.scale = Eigen::VectorXd::Ones(s.x.cols());
  for (Eigen::Index j = 0; j < s.x.cols(); ++j) {
    const double sd = std::sqrt(s.x.col(j).squaredNorm() / n);
    if (sd < 1e-12 * (1.0 + std::abs(s.center[j]))) {
      s.scale[j] = 0.0;
      s.x.col(j).setZero();
    } else if (scale) {
      s.scale[j] = sd;
      s.x.col(j) /= sd;
    }
  }
  return s;
}

double penalty(const Eigen::VectorXd& beta, const ElasticNetConfig& cfg) {
  return cfg.lambda * (cfg.alpha * beta.lpNorm<1>() + 0.5 * (1.0 - cfg.alpha) * beta.squaredNorm());
}

double logistic_nll(const Eigen::VectorXd& eta, const Eigen::VectorXd& y) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    const double softplus = eta[i] > 0.0 ? eta[i] + std::log1p(std::exp(-eta[i])) : std::log1p(std::exp(eta[i]));
    s += softplus - y[i] * eta[i];
  }
  return s / static_cast<double>(eta.size());
}

void check_descent(double before, double after, const char* what) {
  if (after > before + 1e-12 * (1.0 + std::abs(before))) {
    throw std::logic_error(std::string("elastic net: objective increased during ") + what);
  }
}

// Penalised least squares on centred columns: minimises
// (1/2n) sum w_i (r_i)^2 + penalty, with r the working residual. Weights
// are uniform (linear objective) or IRLS weights (logistic objective).
// Returns the number of sweeps used.
std::size_t coordinate_descent(const Eigen::MatrixXd& x, const Eigen::MatrixXd& wx, const Eigen::VectorXd& w, Eigen::VectorXd& beta,
                               double& intercept, Eigen::VectorXd& resid, const ElasticNetConfig& cfg, bool fit_intercept,
                               std::vector<double>* trace) {
  const auto n = static_cast<double>(x.rows());
  const double l1 = cfg.lambda * cfg.alpha;
  const double l2 = cfg.lambda * (1.0 - cfg.alpha);
  const double wsum = w.sum();
  Eigen::VectorXd v(x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) v[j] = kernels::dot(col_span(wx, j), col_span(x, j)) / n;

  auto objective = [&] {
    double s = 0.0;
    for (Eigen::Index i = 0; i < resid.size(); ++i) s += w[i] * resid[i] * resid[i];
    return s / (2.0 * n) + penalty(beta, cfg);
  };

  double obj = trace ? objective() : 0.0;
  for (std::size_t sweep = 1; sweep <= cfg.max_iter; ++sweep) {
    double max_change = 0.0;
    if (fit_intercept) {
      const double delta = kernels::dot(vec_span(w), vec_span(resid)) / wsum;
      intercept += delta;
      resid.array() -= delta;
      max_change = std::abs(delta);
    }
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      if (v[j] == 0.0) continue;
      const double old = beta[j];
      const double z = kernels::dot(col_span(wx, j), vec_span(resid)) / n + v[j] * old;
      const double updated = soft_threshold(z, l1) / (v[j] + l2);
      if (updated != old) {
        kernels::axpy(old - updated, col_span(x, j), vec_span(resid));
        beta[j] = updated;
        max_change = std::max(max_change, std::abs(updated - old) * std::sqrt(v[j]));
      }
    }
    if (trace) {
      const double next = objective();
      check_descent(obj, next, "a coordinate sweep");
      trace->push_back(next);
      obj = next;
    }
    if (max_change < cfg.tol) return sweep;
  }
  throw FitError("elastic net: coordinate descent did not converge after " + std::to_string(cfg.max_iter) + " sweeps");
}

}  // namespace

std::size_t ElasticNetModel::nonzero() const {
  return static_cast<std::size_t>((beta.array() != 0.0).count());
}

Eigen::VectorXd ElasticNetModel::coefficients() const {
  Eigen::VectorXd c(beta.size() + 1);
  c[0] = intercept;
  c.tail(beta.size()) = beta;
  return c;
}

std::optional<double> ElasticNetModel::training_sigma() const {
  if (objective == Objective::logistic) return std::nullopt;
  return sigma;
}

Prediction ElasticNetModel::predict(const Dataset& data, std::size_t row) const {
  double eta = intercept;
  const auto r = static_cast<Eigen::Index>(row);
  for (std::size_t j = 0; j < features.size(); ++j) eta += beta[static_cast<Eigen::Index>(j)] * data.features(r, static_cast<Eigen::Index>(features[j]));
  if (objective == Objective::logistic) return Prediction::probability(sigmoid(eta), threshold);
  return Prediction::regression(eta, sigma);
}

ElasticNetModel fit_elastic_net(const Dataset& data, std::span<const std::size_t> rows, std::span<const std::size_t> features,
                                const ElasticNetConfig& cfg, Objective objective, double threshold) {
  cfg.validate();
  if (rows.size() < 2) throw FitError("elastic net: need at least two training rows");
  if (objective == Objective::logistic && data.task != Task::classification) {
    throw UsageError("logistic elastic net needs a classification response");
  }
  const Standardized s = standardize(data, rows, features, cfg.standardize);
  const Eigen::VectorXd y = gather(data.response, rows);
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto q = s.x.cols();

  ElasticNetModel m;
  m.features.assign(features.begin(), features.end());
  m.objective = objective;
  m.threshold = threshold;
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(q);
  double intercept = 0.0;

  if (objective == Objective::linear) {
    intercept = y.mean();
    Eigen::VectorXd resid = y.array() - intercept;
    const Eigen::VectorXd w = Eigen::VectorXd::Ones(n);
    // Columns are centred, so the intercept stays at mean(y).
    m.sweeps = coordinate_descent(s.x, s.x, w, beta, intercept, resid, cfg, false, &m.objective_trace);
  } else {
    const double ybar = std::clamp(y.mean(), 1e-10, 1.0 - 1e-10);
    intercept = std::log(ybar / (1.0 - ybar));
    auto penalised = [&](double b0, const Eigen::VectorXd& b) {
      const Eigen::VectorXd eta = (s.x * b).array() + b0;
      return logistic_nll(eta, y) + penalty(b, cfg);
    };
    double obj = penalised(intercept, beta);
    m.objective_trace.push_back(obj);
    bool converged = false;
    for (std::size_t outer = 0; outer < kMaxOuter && !converged; ++outer) {
      const Eigen::VectorXd eta = (s.x * beta).array() + intercept;
      Eigen::VectorXd w(n), resid(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        const double p = sigmoid(eta[i]);
        w[i] = std::max(p * (1.0 - p), 1e-5);
        resid[i] = (y[i] - p) / w[i];
      }
      const Eigen::MatrixXd wx = w.asDiagonal() * s.x;
      Eigen::VectorXd cand = beta;
      double cand0 = intercept;
      m.sweeps += coordinate_descent(s.x, wx, w, cand, cand0, resid, cfg, true, nullptr);

      // Backtrack along the quadratic-approximation step so the penalised
      // likelihood never increases.
      const Eigen::VectorXd dir = cand - beta;
      const double dir0 = cand0 - intercept;
      double t = 1.0;
      double next = penalised(intercept + dir0, beta + dir);
      while (next > obj && t > 1e-10) {
        t *= 0.5;
        next = penalised(intercept + t * dir0, beta + t * dir);
      }
      if (next > obj) {
        converged = true;  // no descent direction left at working precision
        break;
      }
      const double change = std::max(std::abs(t * dir0), (t * dir).cwiseAbs().maxCoeff());
      beta += t * dir;
      intercept += t * dir0;
      check_descent(obj, next, "an IRLS step");
      obj = next;
      m.objective_trace.push_back(obj);
      converged = change < cfg.tol * 100.0;
    }
    if (!converged) {
      throw FitError("elastic net: logistic outer iterations did not converge after " + std::to_string(kMaxOuter));
    }
  }

  // Back to the original feature scale.
  m.beta = Eigen::VectorXd::Zero(q);
  for (Eigen::Index j = 0; j < q; ++j) {
    if (s.scale[j] != 0.0) m.beta[j] = beta[j] / s.scale[j];
  }
  m.intercept = intercept - m.beta.dot(s.center);
  if (objective == Objective::linear) {
    const Eigen::VectorXd fitted = (design_matrix(data, rows, features).rightCols(q) * m.beta).array() + m.intercept;
    m.sigma = std::sqrt((y - fitted).squaredNorm() / static_cast<double>(n));
  }
  return m;
}

LambdaPath lambda_path(const Dataset& data, std::span<const std::size_t> rows, std::span<const std::size_t> features, double alpha,
                       std::size_t n_lambda, bool standardize_features) {
  if (n_lambda < 2) throw UsageError("lambda path needs at least two values");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw UsageError("alpha must lie in [0, 1]");
  LambdaPath path;
  if (alpha == 0.0) {
    alpha = 0.001;
    path.alpha_surrogate = true;
  }
  const Standardized s = standardize(data, rows, features, standardize_features);
  const Eigen::VectorXd y = gather(data.response, rows);
  const Eigen::VectorXd r0 = y.array() - y.mean();
  const auto n = static_cast<double>(rows.size());
  double top = 0.0;
  for (Eigen::Index j = 0; j < s.x.cols(); ++j) top = std::max(top, std::abs(kernels::dot(col_span(s.x, j), vec_span(r0))));
  const double lambda_max = top / (n * alpha);
  if (!(lambda_max > 0.0)) throw UsageError("lambda path: response is uncorrelated with every feature");
  const double ratio = std::pow(1e-4, 1.0 / static_cast<double>(n_lambda - 1));
  path.lambdas.resize(n_lambda);
  for (std::size_t i = 0; i < n_lambda; ++i) path.lambdas[i] = lambda_max * std::pow(ratio, static_cast<double>(i));
  return path;
}

}  // namespace cvselect
