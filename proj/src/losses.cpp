#include "cvselect/losses.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include "cvselect/error.hpp"

namespace cvselect {
namespace {

constexpr LossKind kLosses[] = {LossKind::squared_error, LossKind::absolute_error, LossKind::gaussian_log_density,
                                LossKind::log_loss,      LossKind::brier,          LossKind::spherical,
                                LossKind::misclassification};
constexpr MetricKind kMetrics[] = {MetricKind::accuracy, MetricKind::sensitivity, MetricKind::specificity, MetricKind::f1,
                                   MetricKind::kappa,    MetricKind::tss,         MetricKind::mcc};

double ratio(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

double require_prob(const Prediction& pred, LossKind kind) {
  if (std::isnan(pred.prob)) throw UsageError(std::string(to_string(kind)) + " needs a class probability");
  if (pred.prob < 0.0 || pred.prob > 1.0) throw UsageError("probability outside [0, 1]");
  return pred.prob;
}

bool require_label(double y) {
  if (y != 0.0 && y != 1.0) throw UsageError("classification loss needs a 0/1 label");
  return y == 1.0;
}

}  // namespace

std::string_view to_string(LossKind kind) noexcept {
  switch (kind) {
    case LossKind::squared_error:
      return "squared_error";
    case LossKind::absolute_error:
      return "absolute_error";
    case LossKind::gaussian_log_density:
      return "gaussian_log_density";
    case LossKind::log_loss:
      return "log_loss";
    case LossKind::brier:
      return "brier";
    case LossKind::spherical:
      return "spherical";
    case LossKind::misclassification:
      return "misclassification";
  }
  return "unknown";
}

std::string_view to_string(MetricKind kind) noexcept {
  switch (kind) {
    case MetricKind::accuracy:
      return "accuracy";
    case MetricKind::sensitivity:
      return "sensitivity";
    case MetricKind::specificity:
      return "specificity";
    case MetricKind::f1:
      return "f1";
    case MetricKind::kappa:
      return "kappa";
    case MetricKind::tss:
      return "tss";
    case MetricKind::mcc:
      return "mcc";
  }
  return "unknown";
}

std::string to_string(const ScoreKind& kind) {
  return std::visit([](auto k) { return std::string(to_string(k)); }, kind);
}

LossKind parse_loss(std::string_view name) {
  for (auto k : kLosses) {
    if (to_string(k) == name) return k;
  }
  throw UsageError("unknown loss: " + std::string(name));
}

MetricKind parse_metric(std::string_view name) {
  for (auto k : kMetrics) {
    if (to_string(k) == name) return k;
  }
  throw UsageError("unknown metric: " + std::string(name));
}

ScoreKind parse_score_kind(std::string_view name) {
  for (auto k : kLosses) {
    if (to_string(k) == name) return k;
  }
  for (auto k : kMetrics) {
    if (to_string(k) == name) return k;
  }
  throw UsageError("unknown loss or metric: " + std::string(name));
}

Orientation orientation(LossKind kind) noexcept {
  switch (kind) {
    case LossKind::gaussian_log_density:
    case LossKind::log_loss:
    case LossKind::spherical:
      return Orientation::higher_is_better;
    default:
      return Orientation::lower_is_better;
  }
}

Orientation orientation(const ScoreKind& kind) noexcept {
  return std::visit([](auto k) { return orientation(k); }, kind);
}

std::string_view to_string(Orientation o) noexcept {
  return o == Orientation::higher_is_better ? "higher_is_better" : "lower_is_better";
}

double pointwise_loss(LossKind kind, double y, const Prediction& pred) {
  switch (kind) {
    case LossKind::squared_error:
    case LossKind::absolute_error: {
      if (std::isnan(pred.mean)) throw UsageError(std::string(to_string(kind)) + " needs a predicted mean");
      const double r = y - pred.mean;
      return kind == LossKind::squared_error ? r * r : std::abs(r);
    }
    case LossKind::gaussian_log_density: {
      if (std::isnan(pred.mean) || std::isnan(pred.sigma)) {
        throw UsageError("gaussian_log_density needs a predicted mean and sigma");
      }
      if (!(pred.sigma > 0.0)) throw UsageError("gaussian_log_density needs sigma > 0");
      const double r = y - pred.mean;
      const double var = pred.sigma * pred.sigma;
      return -0.5 * std::log(2.0 * std::numbers::pi * var) - r * r / (2.0 * var);
    }
    case LossKind::log_loss: {
      const double p = std::clamp(require_prob(pred, kind), kProbClamp, 1.0 - kProbClamp);
      return std::log(require_label(y) ? p : 1.0 - p);
    }
    case LossKind::brier: {
      const double p1 = require_prob(pred, kind);
      const double p0 = 1.0 - p1;
      const bool pos = require_label(y);
      const double e0 = (pos ? 0.0 : 1.0) - p0;
      const double e1 = (pos ? 1.0 : 0.0) - p1;
      return e0 * e0 + e1 * e1;
    }
    case LossKind::spherical: {
      const double p1 = require_prob(pred, kind);
      const double p0 = 1.0 - p1;
      return (require_label(y) ? p1 : p0) / std::sqrt(p0 * p0 + p1 * p1);
    }
    case LossKind::misclassification: {
      const double p = require_prob(pred, kind);
      const bool predicted = p > pred.threshold;
      return predicted == require_label(y) ? 0.0 : 1.0;
    }
  }
  throw UsageError("unknown loss kind");
}

void ConfusionMatrix::add(bool predicted_positive, bool actually_positive) noexcept {
  if (predicted_positive) {
    ++(actually_positive ? tp : fp);
  } else {
    ++(actually_positive ? fn : tn);
  }
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& o) noexcept {
  tp += o.tp;
  fp += o.fp;
  fn += o.fn;
  tn += o.tn;
  return *this;
}

ConfusionMatrix build_confusion(std::span<const double> probabilities, std::span<const double> labels, double c) {
  if (probabilities.size() != labels.size()) throw UsageError("build_confusion: length mismatch");
  if (probabilities.empty()) throw UsageError("build_confusion: empty input");
  ConfusionMatrix m;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (probabilities[i] < 0.0 || probabilities[i] > 1.0) throw UsageError("build_confusion: probability outside [0, 1]");
    m.add(probabilities[i] > c, require_label(labels[i]));
  }
  return m;
}

double confusion_metric(const ConfusionMatrix& m, MetricKind kind) {
  const double tp = static_cast<double>(m.tp);
  const double fp = static_cast<double>(m.fp);
  const double fn = static_cast<double>(m.fn);
  const double tn = static_cast<double>(m.tn);
  switch (kind) {
    case MetricKind::accuracy:
      return ratio(tp + tn, tp + tn + fp + fn);
    case MetricKind::sensitivity:
      return ratio(tp, tp + fn);
    case MetricKind::specificity:
      return ratio(tn, tn + fp);
    case MetricKind::f1:
      return ratio(2.0 * tp, 2.0 * tp + fp + fn);
    case MetricKind::kappa:
      return ratio(2.0 * (tp * tn - fp * fn), (tp + fp) * (fp + tn) + (tp + fn) * (fn + tn));
    case MetricKind::tss:
      return ratio(tp, tp + fn) + ratio(tn, tn + fp) - 1.0;
    case MetricKind::mcc: {
      if (m.fp == 0 && m.fn == 0 && m.total() > 0) return 1.0;
      return ratio(tp * tn - fp * fn, std::sqrt((tp + fp) * (tp + fn) * (tn + fp) * (tn + fn)));
    }
  }
  throw UsageError("unknown metric kind");
}

std::vector<double> aggregate_metric(const std::vector<std::vector<double>>& split_probs, std::span<const double> labels,
                                     const FoldPlan& plan, std::span<const double> split_thresholds, MetricKind kind) {
  if (split_probs.size() != plan.splits.size() || split_thresholds.size() != plan.splits.size()) {
    throw UsageError("aggregate_metric: need predictions and a threshold for every split");
  }
  std::map<std::size_t, ConfusionMatrix> pooled;
  for (std::size_t s = 0; s < plan.splits.size(); ++s) {
    const auto& test = plan.splits[s].test;
    if (split_probs[s].size() != test.size()) {
      throw UsageError("aggregate_metric: missing predictions for split " + std::to_string(s));
    }
    auto& m = pooled[plan.splits[s].repetition];
    for (std::size_t t = 0; t < test.size(); ++t) {
      m.add(split_probs[s][t] > split_thresholds[s], require_label(labels[test[t]]));
    }
  }
  std::vector<double> out;
  out.reserve(pooled.size());
  for (const auto& [rep, m] : pooled) out.push_back(confusion_metric(m, kind));
  return out;
}

std::vector<double> aggregate_metric(const std::vector<std::vector<double>>& split_probs, std::span<const double> labels,
                                     const FoldPlan& plan, double c, MetricKind kind) {
  const std::vector<double> thresholds(plan.splits.size(), c);
  return aggregate_metric(split_probs, labels, plan, thresholds, kind);
}

}  // namespace cvselect
