#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cvselect/data.hpp"
#include "cvselect/losses.hpp"
#include "cvselect/models.hpp"
#include "cvselect/splitters.hpp"

namespace cvselect {

/// Runs body(0..count-1) on up to `workers` threads. Each index runs exactly
/// once; callers write results into per-index slots so the outcome does not
/// depend on scheduling. The first exception thrown (lowest index) is
/// rethrown after all workers finish.
void parallel_for(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& body);

struct EngineOptions {
  std::size_t parallel = 1;
  bool bias_correct = false;
  /// Overrides ModelSpec::threshold for confusion-matrix metrics.
  std::optional<double> threshold;
};

/// How ScoreEstimate::se was computed.
enum class SeMethod {
  /// sd of the pointwise values / sqrt(count): the plan tests each datum once.
  pointwise,
  /// sd of the per-repetition means (or metric values) across repetitions.
  repetition,
  /// A single repetition of a pooled metric: no spread to estimate.
  none,
};
std::string_view to_string(SeMethod m) noexcept;

struct ScoreEstimate {
  ScoreKind kind = LossKind::squared_error;
  std::string model_id;
  std::string plan_fingerprint;
  double mean = 0.0;
  double se = 0.0;
  SeMethod se_method = SeMethod::pointwise;
  /// Per-datum losses, for plans that test each datum at most once.
  /// pointwise_index[j] is the datum that pointwise[j] belongs to (ascending).
  std::optional<std::vector<double>> pointwise;
  std::vector<std::size_t> pointwise_index;
  /// Per-repetition means (losses) or metric values (metrics).
  std::optional<std::vector<double>> per_repetition;
  std::optional<double> kappa;
  std::optional<double> corrected_mean;
  std::optional<double> n_effective_params;
  /// Model fits performed, the within-sample fit included.
  std::size_t fit_count = 0;

  Orientation orientation() const { return cvselect::orientation(kind); }
  /// The vector used to pair this estimate with others: pointwise values
  /// when present, otherwise per-repetition values.
  const std::vector<double>& paired_values() const;
};

/// Predictions of the model fitted on plan.splits[k].train. A complete grid
/// has cells[k][i] for every datum i; otherwise cells[k][j] is the
/// prediction for the j-th test row of split k.
struct PredictionGrid {
  std::vector<std::vector<Prediction>> cells;
  bool complete = false;
};

/// Fits one model per split (in parallel when asked) and evaluates it on the
/// test rows, or on every row when `complete`. Fit failures are rethrown as
/// FitError naming the split.
PredictionGrid predict_grid(const ModelSpec& model, const Dataset& data, const FoldPlan& plan, bool complete,
                            std::size_t parallel = 1);

/// Eq 4 cross-validated score for a pointwise loss.
ScoreEstimate cv_score(const ModelSpec& model, const Dataset& data, const FoldPlan& plan, LossKind kind,
                       const EngineOptions& opts = {});

/// Confusion-matrix metric pooled per repetition (Box 1).
ScoreEstimate cv_metric(const ModelSpec& model, const Dataset& data, const FoldPlan& plan, MetricKind kind,
                        const EngineOptions& opts = {});

/// Dispatches to cv_score or cv_metric.
ScoreEstimate cv_estimate(const ModelSpec& model, const Dataset& data, const FoldPlan& plan, const ScoreKind& kind,
                          const EngineOptions& opts = {});

/// Eq 5: mean over data of L(y_i, yhat_i) - (1/K) sum_k L(y_i, yhat_i^{-k}).
double bias_correct(const PredictionGrid& grid, const Dataset& data, LossKind kind, const FittedModel& within_sample_fit);

/// Eq 6: p_CV = lpd_within - lpd_cv, in total log density. Uses the
/// gaussian log density for regression and log p_j for classification.
double effective_params(const Dataset& data, const ModelSpec& model, const FoldPlan& plan, std::size_t parallel = 1);

/// Eq 7 exact LOO for OLS with squared error from a single fit.
ScoreEstimate hat_loo(const Dataset& data, std::span<const std::size_t> features);

/// Summary of pointwise losses under a plan: used by cv_score and by nested
/// tuning so that both follow one aggregation rule. split_losses[s] holds the
/// losses of plan.splits[s].test in order.
ScoreEstimate summarise_losses(const FoldPlan& plan, const std::vector<std::vector<double>>& split_losses, LossKind kind);

/// Summary of per-repetition metric values.
ScoreEstimate summarise_metric(const FoldPlan& plan, std::vector<double> per_repetition, MetricKind kind);

// ---------------------------------------------------------------- tuning

/// Threshold grid used when tuning c: 0.05, 0.10, ..., 0.95.
std::vector<double> threshold_grid();

struct NestedSplitChoice {
  std::size_t split = 0;
  std::string chosen_id;
  std::optional<double> threshold;
  /// Inner-CV score of the chosen candidate (and threshold).
  double inner_score = 0.0;
  /// Original row indices seen by any inner fit or evaluation of this split.
  std::vector<std::size_t> inner_rows;
};

struct NestedResult {
  ScoreEstimate outer;
  std::vector<NestedSplitChoice> choices;
  std::size_t inner_k = 0;
  bool tune_threshold = false;
  /// True once every inner row set has been checked against the outer test rows.
  bool leakage_audited = false;
};

/// Nested CV: per outer split, inner K-fold CV on the outer-train rows picks
/// a candidate (and a threshold for metric kinds when asked); the choice is
/// refitted on the full outer-train rows and scored on the outer test rows.
NestedResult tune_nested(const std::vector<ModelSpec>& candidates, const Dataset& data, const FoldPlan& outer,
                         std::size_t inner_k, const ScoreKind& kind, bool tune_threshold, std::uint64_t seed,
                         const EngineOptions& opts = {});

enum class LambdaRule { best, one_se };
std::string_view to_string(LambdaRule r) noexcept;
LambdaRule parse_lambda_rule(std::string_view name);

struct LambdaTuning {
  double alpha = 1.0;
  Objective objective = Objective::linear;
  bool alpha_surrogate = false;
  std::vector<double> lambdas;
  std::vector<ScoreEstimate> scores;
  /// sigma_diff of every lambda against the best one (Eq 9).
  std::vector<double> sigma_diff;
  /// Nonzero coefficients (intercept excluded) of the full-data fit per lambda.
  std::vector<std::size_t> nonzero;
  std::size_t best_index = 0;
  std::size_t one_se_index = 0;

  double chosen(LambdaRule rule) const { return lambdas[rule == LambdaRule::best ? best_index : one_se_index]; }
};

/// Cross-validated elastic-net path on one shared plan. `one_se` picks the
/// largest lambda whose score is within sigma_diff of the best score.
LambdaTuning tune_lambda(const Dataset& data, std::span<const std::size_t> features, double alpha, Objective objective,
                         const FoldPlan& plan, const ScoreKind& kind, std::size_t n_lambda = 30,
                         const EngineOptions& opts = {});

}  // namespace cvselect
