#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "cvselect/data.hpp"
#include "cvselect/losses.hpp"

namespace cvselect {

enum class Family { ols, logistic, elastic_net, growth, custom };
enum class Objective { linear, logistic };
enum class GrowthFunction { gompertz, logistic, von_bertalanffy };

std::string_view to_string(Family f) noexcept;
std::string_view to_string(Objective o) noexcept;
std::string_view to_string(GrowthFunction g) noexcept;
Family parse_family(std::string_view name);
Objective parse_objective(std::string_view name);
GrowthFunction parse_growth_function(std::string_view name);

struct ElasticNetConfig {
  double alpha = 1.0;
  double lambda = 0.0;
  bool standardize = true;
  std::size_t max_iter = 100000;
  double tol = 1e-12;

  void validate() const;
};

/// Growth curve with optional sex contrasts on each parameter and
/// sum-to-zero group offsets on the asymptote. Age and sex are read from
/// feature columns; sex must be coded 0/1 and enters as a -1/+1 contrast.
struct GrowthSpec {
  GrowthFunction function = GrowthFunction::von_bertalanffy;
  bool sex_on_asymptote = false;
  bool sex_on_rate = false;
  bool sex_on_origin = false;
  bool group_intercepts = false;
  std::size_t age_feature = 0;
  std::size_t sex_feature = 1;

  bool uses_sex() const noexcept { return sex_on_asymptote || sex_on_rate || sex_on_origin; }
  /// Short label in the "vB|LKt" style.
  std::string label() const;
};

class FittedModel;

/// Extension point for model families not built in. Implementations must be
/// deterministic and safe to call concurrently on different row sets.
class Learner {
 public:
  virtual ~Learner() = default;
  virtual std::unique_ptr<FittedModel> fit(const Dataset& data, std::span<const std::size_t> rows) const = 0;
  virtual std::size_t param_count() const = 0;
  virtual std::string name() const = 0;
};

struct ModelSpec {
  std::string id;
  Family family = Family::ols;
  /// Feature columns entering the linear predictor (ols, logistic,
  /// elastic_net). Growth models take their columns from `growth`.
  std::vector<std::size_t> features;
  ElasticNetConfig enet;
  Objective objective = Objective::linear;
  GrowthSpec growth;
  std::size_t max_iter = 100;
  double tol = 1e-10;
  /// Decision threshold attached to classifier predictions.
  double threshold = 0.5;
  std::optional<int> complexity_rank;
  std::shared_ptr<const Learner> learner;

  /// Nominal number of free mean parameters, intercept included. Group
  /// offsets are not counted because their number depends on the data.
  std::size_t param_count() const;
  int rank() const { return complexity_rank.value_or(static_cast<int>(param_count())); }
  void validate(std::size_t p) const;
  /// Human-readable default id, e.g. "ols[x1,x3]".
  std::string describe(std::span<const std::string> feature_names = {}) const;
};

nlohmann::json to_json(const ModelSpec& spec);
/// Feature entries may be indices or names (resolved against `feature_names`).
ModelSpec model_spec_from_json(const nlohmann::json& j, std::span<const std::string> feature_names = {});

class FittedModel {
 public:
  virtual ~FittedModel() = default;
  virtual Prediction predict(const Dataset& data, std::size_t row) const = 0;
  /// Family-specific parameter vector (intercept first for linear families).
  virtual Eigen::VectorXd coefficients() const = 0;
  virtual std::optional<double> training_sigma() const { return std::nullopt; }
};

/// Fit dispatch for every family.
std::unique_ptr<FittedModel> fit_model(const ModelSpec& spec, const Dataset& data, std::span<const std::size_t> rows);

/// Process-wide count of fit_model calls.
std::uint64_t fit_counter() noexcept;

/// Design matrix [1, X_features] over the given rows.
Eigen::MatrixXd design_matrix(const Dataset& data, std::span<const std::size_t> rows, std::span<const std::size_t> features);
Eigen::VectorXd gather(const Eigen::VectorXd& v, std::span<const std::size_t> rows);
std::vector<std::size_t> all_rows(std::size_t n);

// ---------------------------------------------------------------- OLS

class OlsModel final : public FittedModel {
 public:
  Prediction predict(const Dataset& data, std::size_t row) const override;
  Eigen::VectorXd coefficients() const override { return coef; }
  std::optional<double> training_sigma() const override { return sigma; }

  std::vector<std::size_t> features;
  Eigen::VectorXd coef;
  /// Leverages of the training rows, in training order.
  Eigen::VectorXd hat;
  Eigen::VectorXd residuals;
  double rss = 0.0;
  /// Maximum-likelihood residual scale sqrt(RSS / n_train).
  double sigma = 0.0;
};

/// Least squares with an intercept via column-pivoted QR. Throws FitError
/// naming the collinear columns when the design is rank deficient.
OlsModel fit_ols(const Dataset& data, std::span<const std::size_t> rows, std::span<const std::size_t> features);

// ---------------------------------------------------------------- logistic

class LogisticModel final : public FittedModel {
 public:
  Prediction predict(const Dataset& data, std::size_t row) const override;
  Eigen::VectorXd coefficients() const override { return coef; }

  std::vector<std::size_t> features;
  Eigen::VectorXd coef;
  double threshold = 0.5;
  std::size_t iterations = 0;
  std::vector<double> loglik_trace;
};

/// Maximum likelihood by iteratively reweighted least squares with step
/// halving. Throws FitError on separation or non-convergence.
LogisticModel fit_logistic(const Dataset& data, std::span<const std::size_t> rows, std::span<const std::size_t> features,
                           std::size_t max_iter = 100, double tol = 1e-10, double threshold = 0.5);

// ---------------------------------------------------------------- elastic net

class ElasticNetModel final : public FittedModel {
 public:
  Prediction predict(const Dataset& data, std::size_t row) const override;
  /// Intercept first, then one coefficient per feature on the original scale.
  Eigen::VectorXd coefficients() const override;
  std::optional<double> training_sigma() const override;

  std::vector<std::size_t> features;
  Objective objective = Objective::linear;
  double intercept = 0.0;
  Eigen::VectorXd beta;
  double sigma = 0.0;
  double threshold = 0.5;
  std::size_t sweeps = 0;
  /// Penalised objective after every coordinate-descent sweep.
  std::vector<double> objective_trace;

  std::size_t nonzero() const;
};

/// Minimises f + lambda (alpha |b|_1 + (1 - alpha)/2 |b|_2^2) by cyclic
/// coordinate descent. f is half the mean squared error (linear) or the
/// mean negative log-likelihood (logistic, via iterated quadratic
/// majorisation). The intercept is not penalised.
ElasticNetModel fit_elastic_net(const Dataset& data, std::span<const std::size_t> rows, std::span<const std::size_t> features,
                                const ElasticNetConfig& cfg, Objective objective, double threshold = 0.5);

struct LambdaPath {
  std::vector<double> lambdas;
  /// alpha = 0 has no finite lambda_max; 0.001 is used in its place.
  bool alpha_surrogate = false;
};

/// Geometric grid from lambda_max down to lambda_max * 1e-4.
LambdaPath lambda_path(const Dataset& data, std::span<const std::size_t> rows, std::span<const std::size_t> features, double alpha,
                       std::size_t n_lambda, bool standardize = true);

// ---------------------------------------------------------------- growth

double growth_curve(GrowthFunction f, double age, double asymptote, double rate, double origin);

/// Partial derivatives of the curve with respect to (asymptote, rate, origin).
Eigen::Vector3d growth_gradient(GrowthFunction f, double age, double asymptote, double rate, double origin);

class GrowthModel final : public FittedModel {
 public:
  Prediction predict(const Dataset& data, std::size_t row) const override;
  /// (asymptote, rate, origin, active sex contrasts..., group offsets...).
  Eigen::VectorXd coefficients() const override;
  std::optional<double> training_sigma() const override { return sigma; }

  GrowthSpec spec;
  double asymptote = 0.0;
  double rate = 0.0;
  double origin = 0.0;
  double sex_asymptote = 0.0;
  double sex_rate = 0.0;
  double sex_origin = 0.0;
  /// Asymptote offsets per training group; they sum to zero. Groups not
  /// seen in training predict with offset 0, the population curve.
  std::map<std::string, double> group_offsets;
  double rss = 0.0;
  double sigma = 0.0;
  std::size_t iterations = 0;
};

struct GrowthStart {
  double asymptote;
  double rate;
  double origin;
};

/// Levenberg-Marquardt least squares.
GrowthModel fit_growth(const Dataset& data, std::span<const std::size_t> rows, const GrowthSpec& spec,
                       std::optional<GrowthStart> init = std::nullopt);

}  // namespace cvselect
