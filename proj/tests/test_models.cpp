#include <doctest.h>

#include <cmath>
#include <vector>

#include "cvselect/data.hpp"
#include "cvselect/error.hpp"
#include "cvselect/models.hpp"
#include "cvselect/rng.hpp"

using namespace cvselect;

namespace {

Dataset make_data(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, Task task = Task::regression) {
  Dataset d;
  d.features = x;
  d.response = y;
  d.task = task;
  for (Eigen::Index j = 0; j < x.cols(); ++j) d.feature_names.push_back("x" + std::to_string(j + 1));
  if (task == Task::classification) d.class_labels = {"0", "1"};
  return d;
}

std::vector<std::size_t> cols(std::size_t p) { return all_rows(p); }

}  // namespace

TEST_CASE("OLS exact fit and orthogonality") {
  Eigen::MatrixXd x(5, 1);
  x << 1, 2, 3, 4, 5;
  const Dataset d = make_data(x, 2.0 * x.col(0));
  const OlsModel m = fit_ols(d, all_rows(5), cols(1));
  CHECK(std::abs(m.coef[0]) < 1e-10);
  CHECK(std::abs(m.coef[1] - 2.0) < 1e-10);
  CHECK(m.rss < 1e-10);

  const Dataset noisy = simulate_linear_gaussian(80, std::vector<double>{1, -1, 0.5}, 1.0, 3);
  const OlsModel f = fit_ols(noisy, all_rows(80), cols(3));
  const Eigen::MatrixXd design = design_matrix(noisy, all_rows(80), cols(3));
  const Eigen::VectorXd xr = design.transpose() * f.residuals;
  CHECK(xr.cwiseAbs().maxCoeff() < 1e-8 * 80);
  CHECK(f.hat.sum() == doctest::Approx(4.0));
}

TEST_CASE("OLS rank deficiency names the collinear column") {
  Eigen::MatrixXd x(6, 2);
  x << 1, 1, 2, 2, 3, 3, 4, 4, 5, 5, 6, 6;
  Eigen::VectorXd y(6);
  y << 1, 3, 2, 5, 4, 6;
  const Dataset d = make_data(x, y);
  try {
    fit_ols(d, all_rows(6), cols(2));
    FAIL("expected FitError");
  } catch (const FitError& e) {
    CHECK(std::string(e.what()).find("x") != std::string::npos);
  }
}

TEST_CASE("logistic regression") {
  SUBCASE("balanced constant feature gives p = 0.5") {
    Eigen::MatrixXd x = Eigen::MatrixXd::Ones(6, 1);
    Eigen::VectorXd y(6);
    y << 1, 0, 1, 0, 1, 0;
    const Dataset d = make_data(x, y, Task::classification);
    ModelSpec spec;
    spec.family = Family::logistic;
    const auto fit = fit_model(spec, d, all_rows(6));
    CHECK(std::abs(fit->coefficients()[0]) < 1e-8);
    CHECK(fit->predict(d, 0).prob == doctest::Approx(0.5));
  }
  SUBCASE("separable data is rejected") {
    Eigen::MatrixXd x(6, 1);
    x << 1, 2, 3, 4, 5, 6;
    Eigen::VectorXd y(6);
    y << 0, 0, 0, 1, 1, 1;
    const Dataset d = make_data(x, y, Task::classification);
    CHECK_THROWS_AS(fit_logistic(d, all_rows(6), cols(1)), FitError);
  }
  SUBCASE("estimates within 3 se of truth") {
    const Dataset d = simulate_logistic(2000, 0.0, std::vector<double>{0.5, -1.0}, 11);
    const LogisticModel m = fit_logistic(d, all_rows(2000), cols(2));
    // Standard errors from the inverse Fisher information.
    const Eigen::MatrixXd design = design_matrix(d, all_rows(2000), cols(2));
    const Eigen::VectorXd eta = design * m.coef;
    Eigen::MatrixXd info = Eigen::MatrixXd::Zero(3, 3);
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
      const double p = 1.0 / (1.0 + std::exp(-eta[i]));
      info += p * (1 - p) * design.row(i).transpose() * design.row(i);
    }
    const Eigen::VectorXd se = info.inverse().diagonal().cwiseSqrt();
    CHECK(std::abs(m.coef[1] - 0.5) < 3 * se[1]);
    CHECK(std::abs(m.coef[2] + 1.0) < 3 * se[2]);
    for (std::size_t t = 1; t < m.loglik_trace.size(); ++t) CHECK(m.loglik_trace[t] >= m.loglik_trace[t - 1] - 1e-12);
  }
}

TEST_CASE("elastic net oracles") {
  const Dataset d = simulate_linear_gaussian(120, std::vector<double>{1.5, -0.7, 0.0, 0.3}, 1.0, 21);
  const auto rows = all_rows(d.n());

  SUBCASE("lambda 0 equals OLS") {
    ElasticNetConfig cfg;
    cfg.lambda = 0.0;
    const auto en = fit_elastic_net(d, rows, cols(4), cfg, Objective::linear);
    const auto ols = fit_ols(d, rows, cols(4));
    CHECK((en.coefficients() - ols.coef).cwiseAbs().maxCoeff() < 1e-6);
  }

  SUBCASE("ridge closed form on standardized data") {
    ElasticNetConfig cfg;
    cfg.alpha = 0.0;
    cfg.lambda = 0.3;
    const auto en = fit_elastic_net(d, rows, cols(4), cfg, Objective::linear);
    const double n = static_cast<double>(d.n());
    Eigen::MatrixXd z = d.features;
    Eigen::VectorXd mu = z.colwise().mean();
    Eigen::VectorXd sd(4);
    for (int j = 0; j < 4; ++j) {
      z.col(j).array() -= mu[j];
      sd[j] = std::sqrt(z.col(j).squaredNorm() / n);
      z.col(j) /= sd[j];
    }
    const Eigen::VectorXd yc = d.response.array() - d.response.mean();
    const Eigen::MatrixXd a = z.transpose() * z / n + cfg.lambda * Eigen::MatrixXd::Identity(4, 4);
    const Eigen::VectorXd b_std = a.ldlt().solve(z.transpose() * yc / n);
    const Eigen::VectorXd b = b_std.cwiseQuotient(sd);
    CHECK((en.coefficients().tail(4) - b).cwiseAbs().maxCoeff() < 1e-6);
  }

  SUBCASE("objective never increases across sweeps") {
    ElasticNetConfig cfg;
    cfg.alpha = 0.5;
    cfg.lambda = 0.05;
    const auto en = fit_elastic_net(d, rows, cols(4), cfg, Objective::linear);
    for (std::size_t t = 1; t < en.objective_trace.size(); ++t) CHECK(en.objective_trace[t] <= en.objective_trace[t - 1] + 1e-12);
  }

  SUBCASE("lambda max zeroes every coefficient") {
    const LambdaPath path = lambda_path(d, rows, cols(4), 1.0, 10);
    ElasticNetConfig cfg;
    cfg.lambda = path.lambdas.front();
    const auto en = fit_elastic_net(d, rows, cols(4), cfg, Objective::linear);
    CHECK(en.nonzero() == 0);
    CHECK(path.lambdas.back() == doctest::Approx(path.lambdas.front() * 1e-4));
    CHECK(lambda_path(d, rows, cols(4), 0.0, 5).alpha_surrogate);
  }
}

TEST_CASE("lasso on an orthonormal design is soft thresholding") {
  const std::size_t n = 64, p = 4;
  // Orthogonal +/-1 columns with zero mean (Hadamard-like), scaled so that
  // X'X / n = I and standardisation is the identity.
  Eigen::MatrixXd x(n, p);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p; ++j) x(i, j) = ((i >> j) & 1) ? 1.0 : -1.0;
  }
  Rng rng(2);
  Eigen::VectorXd y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = 2.0 * x(i, 0) - 0.3 * x(i, 1) + 0.05 * x(i, 3) + rng.normal();
  const Dataset d = make_data(x, y);
  const Eigen::VectorXd ols = x.transpose() * (y.array() - y.mean()).matrix() / double(n);
  for (double lambda : {0.01, 0.1, 0.5}) {
    ElasticNetConfig cfg;
    cfg.lambda = lambda;
    const auto en = fit_elastic_net(d, all_rows(n), cols(p), cfg, Objective::linear);
    for (std::size_t j = 0; j < p; ++j) {
      const double b = ols[j];
      const double st = (b > 0 ? 1 : -1) * std::max(std::abs(b) - lambda, 0.0);
      CHECK(std::abs(en.beta[j] - st) < 1e-6);
    }
  }
}

TEST_CASE("logistic elastic net") {
  const Dataset d = simulate_logistic(300, 0.2, std::vector<double>{1.0, -0.5, 0.0}, 5);
  ElasticNetConfig cfg;
  cfg.lambda = 0.0;
  const auto en = fit_elastic_net(d, all_rows(300), cols(3), cfg, Objective::logistic);
  const auto ml = fit_logistic(d, all_rows(300), cols(3));
  CHECK((en.coefficients() - ml.coef).cwiseAbs().maxCoeff() < 1e-5);
  cfg.lambda = 0.05;
  const auto pen = fit_elastic_net(d, all_rows(300), cols(3), cfg, Objective::logistic);
  for (std::size_t t = 1; t < pen.objective_trace.size(); ++t) CHECK(pen.objective_trace[t] <= pen.objective_trace[t - 1] + 1e-12);
}

TEST_CASE("model specs") {
  const Dataset d = simulate_linear_gaussian(30, std::vector<double>{1, 2, 3}, 1.0, 1);
  const std::vector<std::string> names{"x1", "x2", "x3"};
  const nlohmann::json j = {{"family", "ols"}, {"features", {"x3", 0}}};
  ModelSpec spec = model_spec_from_json(j, names);
  CHECK(spec.features == std::vector<std::size_t>{2, 0});
  CHECK(spec.param_count() == 3);
  CHECK(spec.rank() == 3);
  CHECK(spec.describe(names) == "ols[x3,x1]");
  const ModelSpec back = model_spec_from_json(to_json(spec), names);
  CHECK(back.features == spec.features);
  CHECK(back.family == spec.family);

  ModelSpec dup = spec;
  dup.features = {1, 1};
  CHECK_THROWS_AS(dup.validate(3), UsageError);
  ModelSpec out_of_range = spec;
  out_of_range.features = {5};
  CHECK_THROWS_AS(out_of_range.validate(3), UsageError);
  ModelSpec bad_alpha;
  bad_alpha.family = Family::elastic_net;
  bad_alpha.enet.alpha = 1.5;
  CHECK_THROWS_AS(bad_alpha.validate(3), UsageError);
  CHECK_THROWS_AS(model_spec_from_json({{"family", "forest"}}, names), UsageError);

  const auto a = fit_model(spec, d, all_rows(30));
  const auto b = fit_model(spec, d, all_rows(30));
  CHECK(a->coefficients() == b->coefficients());
}
