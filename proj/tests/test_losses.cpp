#include <doctest.h>

#include <cmath>
#include <vector>

#include "cvselect/error.hpp"
#include "cvselect/losses.hpp"
#include "cvselect/rng.hpp"

using namespace cvselect;

TEST_CASE("pointwise losses") {
  CHECK(pointwise_loss(LossKind::squared_error, 3, Prediction::regression(1)) == 4.0);
  CHECK(pointwise_loss(LossKind::absolute_error, 3, Prediction::regression(1)) == 2.0);
  CHECK(std::abs(pointwise_loss(LossKind::log_loss, 1, Prediction::probability(1.0))) < 1e-14);
  CHECK(pointwise_loss(LossKind::log_loss, 0, Prediction::probability(0.25)) == doctest::Approx(std::log(0.75)));
  CHECK(pointwise_loss(LossKind::brier, 1, Prediction::probability(0.5)) == 0.5);
  CHECK(pointwise_loss(LossKind::spherical, 1, Prediction::probability(1.0)) == 1.0);
  CHECK(pointwise_loss(LossKind::brier, 1, Prediction::probability(1.0)) == 0.0);
  CHECK(pointwise_loss(LossKind::misclassification, 1, Prediction::probability(0.6)) == 0.0);
  CHECK(pointwise_loss(LossKind::misclassification, 1, Prediction::probability(0.9)) == 0.0);
  CHECK(pointwise_loss(LossKind::misclassification, 1, Prediction::probability(0.5)) == 1.0);

  const double s = 2.0;
  const double expected = -0.5 * std::log(2 * M_PI * s * s) - 1.0 / (2 * s * s);
  CHECK(pointwise_loss(LossKind::gaussian_log_density, 2, Prediction::regression(1, s)) == doctest::Approx(expected));
  CHECK(std::isfinite(pointwise_loss(LossKind::log_loss, 1, Prediction::probability(0.0))));
}

TEST_CASE("orientation table") {
  for (auto k : {LossKind::gaussian_log_density, LossKind::log_loss, LossKind::spherical}) {
    CHECK(orientation(k) == Orientation::higher_is_better);
  }
  for (auto k : {LossKind::squared_error, LossKind::absolute_error, LossKind::brier, LossKind::misclassification}) {
    CHECK(orientation(k) == Orientation::lower_is_better);
  }
  CHECK(orientation(ScoreKind{MetricKind::mcc}) == Orientation::higher_is_better);
  CHECK(to_string(parse_score_kind("mcc")) == "mcc");
  CHECK(to_string(parse_score_kind("log_loss")) == "log_loss");
  CHECK_THROWS_AS(parse_score_kind("r2"), UsageError);
}

TEST_CASE("confusion matrices") {
  const std::vector<double> p1{0.9, 0.2}, y1{1, 0};
  CHECK(build_confusion(p1, y1, 0.5) == ConfusionMatrix{1, 0, 0, 1});
  const std::vector<double> p2{0.5}, y2{1};
  CHECK(build_confusion(p2, y2, 0.5) == ConfusionMatrix{0, 0, 1, 0});
  const std::vector<double> p3{0.9, 0.8, 0.2, 0.4, 0.1, 0.7}, y3{1, 1, 1, 0, 0, 0};
  CHECK(build_confusion(p3, y3, 0.5) == ConfusionMatrix{2, 1, 1, 2});
}

TEST_CASE("confusion metrics") {
  const ConfusionMatrix perfect{5, 0, 0, 5};
  CHECK(confusion_metric(perfect, MetricKind::mcc) == 1.0);
  CHECK(confusion_metric(perfect, MetricKind::tss) == 1.0);
  CHECK(confusion_metric(perfect, MetricKind::accuracy) == 1.0);

  const ConfusionMatrix m{3, 1, 2, 4};
  CHECK(confusion_metric(m, MetricKind::accuracy) == doctest::Approx(0.7));
  CHECK(confusion_metric(m, MetricKind::mcc) == doctest::Approx(10.0 / std::sqrt(600.0)));
  CHECK(confusion_metric(m, MetricKind::sensitivity) == doctest::Approx(0.6));
  CHECK(confusion_metric(m, MetricKind::specificity) == doctest::Approx(0.8));
  CHECK(confusion_metric(m, MetricKind::f1) == doctest::Approx(6.0 / 9.0));
  // kappa: po = 0.7, pe = (4*5 + 6*5) / 100 = 0.5
  CHECK(confusion_metric(m, MetricKind::kappa) == doctest::Approx(0.4));

  const ConfusionMatrix all_negative{0, 0, 0, 6};
  CHECK(confusion_metric(all_negative, MetricKind::mcc) == 1.0);
  CHECK(confusion_metric(ConfusionMatrix{0, 3, 0, 0}, MetricKind::sensitivity) == 0.0);
}

TEST_CASE("metric ranges and swap invariance on random matrices") {
  Rng rng(5);
  for (int t = 0; t < 500; ++t) {
    ConfusionMatrix m{rng.below(20), rng.below(20), rng.below(20), rng.below(20)};
    if (m.total() == 0) m.tp = 1;
    const double mcc = confusion_metric(m, MetricKind::mcc);
    CHECK(mcc >= -1.0);
    CHECK(mcc <= 1.0);
    CHECK(confusion_metric(m, MetricKind::kappa) <= 1.0);
    CHECK(mcc == doctest::Approx(confusion_metric(m.swapped(), MetricKind::mcc)).epsilon(1e-12));
    CHECK(confusion_metric(m, MetricKind::tss) == doctest::Approx(confusion_metric(m.swapped(), MetricKind::tss)).epsilon(1e-12));
    CHECK(confusion_metric(m, MetricKind::accuracy) == doctest::Approx(confusion_metric(m.swapped(), MetricKind::accuracy)));
  }
}

TEST_CASE("metric aggregation per repetition") {
  const FoldPlan one = make_kfold(6, 3, 1);
  const std::vector<double> labels{1, 0, 1, 0, 1, 0};
  auto perfect_probs = [&](const FoldPlan& plan) {
    std::vector<std::vector<double>> probs;
    for (const auto& s : plan.splits) {
      std::vector<double> v;
      for (auto i : s.test) v.push_back(labels[i] == 1 ? 0.9 : 0.1);
      probs.push_back(v);
    }
    return probs;
  };
  CHECK(aggregate_metric(perfect_probs(one), labels, one, 0.5, MetricKind::mcc) == std::vector<double>{1.0});

  const FoldPlan rep = make_repeated_kfold(6, 3, 50, 1);
  const auto vals = aggregate_metric(perfect_probs(rep), labels, rep, 0.5, MetricKind::mcc);
  CHECK(vals.size() == 50);
  for (double v : vals) CHECK(v == 1.0);
}

TEST_CASE("propriety of brier and log loss on a 0.01 grid") {
  for (double q = 0.05; q < 0.96; q += 0.05) {
    double best_brier = 1e9, best_log = 1e9, arg_brier = -1, arg_log = -1;
    for (int g = 1; g < 100; ++g) {
      const double p = g / 100.0;
      const double eb = q * pointwise_loss(LossKind::brier, 1, Prediction::probability(p)) +
                        (1 - q) * pointwise_loss(LossKind::brier, 0, Prediction::probability(p));
      const double el = -(q * pointwise_loss(LossKind::log_loss, 1, Prediction::probability(p)) +
                          (1 - q) * pointwise_loss(LossKind::log_loss, 0, Prediction::probability(p)));
      if (eb < best_brier) best_brier = eb, arg_brier = p;
      if (el < best_log) best_log = el, arg_log = p;
    }
    CHECK(std::abs(arg_brier - q) < 0.005 + 1e-9);
    CHECK(std::abs(arg_log - q) < 0.005 + 1e-9);
  }
}
