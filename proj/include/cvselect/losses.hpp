#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "cvselect/splitters.hpp"

namespace cvselect {

enum class Orientation { lower_is_better, higher_is_better };

/// Pointwise losses. Log-type scores keep their natural sign, so
/// gaussian_log_density, log_loss (log p_j) and spherical are
/// higher-is-better; the rest are lower-is-better.
enum class LossKind {
  squared_error,
  absolute_error,
  gaussian_log_density,
  log_loss,
  brier,
  spherical,
  misclassification,
};

/// Confusion-matrix metrics; all higher-is-better.
enum class MetricKind { accuracy, sensitivity, specificity, f1, kappa, tss, mcc };

using ScoreKind = std::variant<LossKind, MetricKind>;

std::string_view to_string(LossKind kind) noexcept;
std::string_view to_string(MetricKind kind) noexcept;
std::string to_string(const ScoreKind& kind);
LossKind parse_loss(std::string_view name);
MetricKind parse_metric(std::string_view name);
ScoreKind parse_score_kind(std::string_view name);

Orientation orientation(LossKind kind) noexcept;
constexpr Orientation orientation(MetricKind) noexcept { return Orientation::higher_is_better; }
Orientation orientation(const ScoreKind& kind) noexcept;
std::string_view to_string(Orientation o) noexcept;

/// Maps a value onto the higher-is-better scale.
constexpr double utility(double value, Orientation o) noexcept {
  return o == Orientation::higher_is_better ? value : -value;
}

/// Whatever a fitted model says about one datum. Regression models fill
/// mean (and sigma when they estimate a dispersion); classifiers fill prob,
/// the probability of class 1, and mean = prob.
struct Prediction {
  double mean = std::numeric_limits<double>::quiet_NaN();
  double sigma = std::numeric_limits<double>::quiet_NaN();
  double prob = std::numeric_limits<double>::quiet_NaN();
  double threshold = 0.5;

  static Prediction regression(double mean, double sigma = std::numeric_limits<double>::quiet_NaN()) {
    Prediction p;
    p.mean = mean;
    p.sigma = sigma;
    return p;
  }
  static Prediction probability(double prob, double threshold = 0.5) {
    Prediction p;
    p.mean = prob;
    p.prob = prob;
    p.threshold = threshold;
    return p;
  }
};

/// Probabilities are clamped to [kProbClamp, 1 - kProbClamp] before taking logs.
inline constexpr double kProbClamp = 1e-15;

double pointwise_loss(LossKind kind, double y, const Prediction& pred);

struct ConfusionMatrix {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  std::uint64_t tn = 0;

  std::uint64_t total() const noexcept { return tp + fp + fn + tn; }
  /// Relabels positives as negatives and vice versa.
  ConfusionMatrix swapped() const noexcept { return {tn, fn, fp, tp}; }
  void add(bool predicted_positive, bool actually_positive) noexcept;
  ConfusionMatrix& operator+=(const ConfusionMatrix& o) noexcept;
  bool operator==(const ConfusionMatrix&) const = default;
};

/// Predicted positive iff p > c.
ConfusionMatrix build_confusion(std::span<const double> probabilities, std::span<const double> labels, double c);

/// Ratios whose denominator is zero evaluate to 0, except that a matrix
/// with no errors (fp = fn = 0) has mcc = 1.
double confusion_metric(const ConfusionMatrix& m, MetricKind kind);

/// One metric value per repetition of the plan, each from a confusion
/// matrix pooled over that repetition's test folds. `split_probs[s]` holds
/// the class-1 probabilities for plan.splits[s].test, in order.
std::vector<double> aggregate_metric(const std::vector<std::vector<double>>& split_probs, std::span<const double> labels,
                                     const FoldPlan& plan, double c, MetricKind kind);

/// As above with a threshold per split (threshold tuning picks one per
/// outer split).
std::vector<double> aggregate_metric(const std::vector<std::vector<double>>& split_probs, std::span<const double> labels,
                                     const FoldPlan& plan, std::span<const double> split_thresholds, MetricKind kind);

}  // namespace cvselect
