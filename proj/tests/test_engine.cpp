#include <doctest.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <vector>

#include "cvselect/data.hpp"
#include "cvselect/engine.hpp"
#include "cvselect/error.hpp"
#include "cvselect/models.hpp"
#include "cvselect/splitters.hpp"

using namespace cvselect;

namespace {

ModelSpec ols(std::vector<std::size_t> features) {
  ModelSpec m;
  m.family = Family::ols;
  m.features = std::move(features);
  return m;
}

// Brute-force LOO: n separate refits.
double brute_loo(const Dataset& d, const std::vector<std::size_t>& features) {
  double total = 0;
  for (std::size_t i = 0; i < d.n(); ++i) {
    std::vector<std::size_t> train;
    for (std::size_t j = 0; j < d.n(); ++j) {
      if (j != i) train.push_back(j);
    }
    const OlsModel m = fit_ols(d, train, features);
    const double r = d.response[i] - m.predict(d, i).mean;
    total += r * r;
  }
  return total / static_cast<double>(d.n());
}

}  // namespace

TEST_CASE("parallel_for runs every index and rethrows the lowest failure") {
  std::vector<int> hits(100, 0);
  parallel_for(100, 4, [&](std::size_t i) { hits[i] += 1; });
  CHECK(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
  try {
    parallel_for(20, 3, [](std::size_t i) {
      if (i == 7 || i == 13) throw std::runtime_error("bad " + std::to_string(i));
    });
    FAIL("expected an exception");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()) == "bad 7");
  }
}

TEST_CASE("LOO score equals the hat-matrix shortcut and brute force") {
  const Dataset d = simulate_linear_gaussian(40, std::vector<double>{1, 0.5, -0.2}, 1.0, 8);
  const std::vector<std::size_t> f{0, 1, 2};
  const ScoreEstimate cv = cv_score(ols(f), d, make_loo(d.n()), LossKind::squared_error);
  const ScoreEstimate hat = hat_loo(d, f);
  CHECK(std::abs(cv.mean - hat.mean) < 1e-10);
  CHECK(std::abs(brute_loo(d, f) - hat.mean) < 1e-10);
  REQUIRE(hat.pointwise);
  for (std::size_t i = 0; i < d.n(); ++i) CHECK(std::abs((*cv.pointwise)[i] - (*hat.pointwise)[i]) < 1e-10);
}

TEST_CASE("saturated OLS has leverage one") {
  Dataset d = simulate_linear_gaussian(10, std::vector<double>{1, 1, 1}, 1.0, 2);
  const std::vector<std::size_t> first{0, 1, 2, 3};
  d = d.subset(first);
  CHECK_THROWS_AS(hat_loo(d, std::vector<std::size_t>{0, 1, 2}), FitError);
}

TEST_CASE("score estimate invariants") {
  const Dataset d = simulate_linear_gaussian(60, std::vector<double>{1, -1}, 1.0, 3);
  const FoldPlan plan = make_kfold(60, 5, 1);
  const ScoreEstimate e = cv_score(ols({0, 1}), d, plan, LossKind::squared_error);
  REQUIRE(e.pointwise);
  const double avg = std::accumulate(e.pointwise->begin(), e.pointwise->end(), 0.0) / 60.0;
  CHECK(std::abs(avg - e.mean) < 1e-12);
  CHECK(e.se >= 0);
  CHECK(e.se_method == SeMethod::pointwise);
  CHECK(e.pointwise_index.size() == 60);
  CHECK(std::is_sorted(e.pointwise_index.begin(), e.pointwise_index.end()));
  CHECK(e.fit_count == 5);

  const ScoreEstimate again = cv_score(ols({0, 1}), d, plan, LossKind::squared_error);
  CHECK(*again.pointwise == *e.pointwise);
  CHECK(again.mean == e.mean);

  EngineOptions par;
  par.parallel = 4;
  const ScoreEstimate threaded = cv_score(ols({0, 1}), d, plan, LossKind::squared_error, par);
  CHECK(*threaded.pointwise == *e.pointwise);
  CHECK(threaded.se == e.se);
}

TEST_CASE("K = n and LOO agree after alignment") {
  const Dataset d = simulate_linear_gaussian(25, std::vector<double>{0.7}, 1.0, 6);
  const ScoreEstimate a = cv_score(ols({0}), d, make_kfold(25, 25, 9), LossKind::squared_error);
  const ScoreEstimate b = cv_score(ols({0}), d, make_loo(25), LossKind::squared_error);
  CHECK(a.pointwise_index == b.pointwise_index);
  for (std::size_t i = 0; i < 25; ++i) CHECK((*a.pointwise)[i] == doctest::Approx((*b.pointwise)[i]).epsilon(1e-12));
}

TEST_CASE("repeated plans use the spread across repetitions") {
  const Dataset d = simulate_linear_gaussian(30, std::vector<double>{1}, 1.0, 5);
  const ScoreEstimate e = cv_score(ols({0}), d, make_repeated_kfold(30, 5, 6, 2), LossKind::squared_error);
  CHECK(e.se_method == SeMethod::repetition);
  REQUIRE(e.per_repetition);
  CHECK(e.per_repetition->size() == 6);
  CHECK_FALSE(e.pointwise);
}

TEST_CASE("bias correction") {
  const Dataset d = simulate_linear_gaussian(50, std::vector<double>{1, 0.5}, 1.0, 12);
  const FoldPlan plan = make_kfold(50, 2, 3);
  EngineOptions opts;
  opts.bias_correct = true;
  const auto before = fit_counter();
  const ScoreEstimate e = cv_score(ols({0, 1}), d, plan, LossKind::squared_error, opts);
  CHECK(fit_counter() - before == plan.splits.size() + 1);
  CHECK(e.fit_count == plan.splits.size() + 1);
  REQUIRE(e.kappa);
  REQUIRE(e.corrected_mean);
  CHECK(*e.corrected_mean == doctest::Approx(e.mean + *e.kappa).epsilon(1e-12));
  // K-fold overestimates squared error; the correction pulls it down.
  CHECK(*e.kappa < 0);

  // Constant response: every fold reproduces the full fit, so kappa = 0.
  Dataset flat = d;
  flat.response.setConstant(3.0);
  const ScoreEstimate z = cv_score(ols({}), flat, plan, LossKind::squared_error, opts);
  CHECK(std::abs(*z.kappa) < 1e-12);
}

TEST_CASE("effective number of parameters") {
  SUBCASE("intercept-only model") {
    double total = 0;
    for (std::uint64_t r = 0; r < 20; ++r) {
      const Dataset d = simulate_linear_gaussian(400, std::vector<double>{0.0}, 1.0, 100 + r);
      total += effective_params(d, ols({}), make_loo(d.n()));
    }
    CHECK(std::abs(total / 20 - 2.0) < 0.5);
  }
  SUBCASE("ridge shrinks the effective count") {
    const Dataset d = simulate_linear_gaussian(200, std::vector<double>{1, 0.5, 0.25, 0, 0}, 1.0, 4);
    const FoldPlan loo = make_loo(d.n());
    double prev = 1e9;
    for (double lambda : {0.0, 0.01, 0.1, 1.0, 10.0}) {
      ModelSpec m;
      m.family = Family::elastic_net;
      m.features = {0, 1, 2, 3, 4};
      m.enet.alpha = 0.0;
      m.enet.lambda = lambda;
      const double p = effective_params(d, m, loo);
      CHECK(p <= prev + 1e-9);
      prev = p;
    }
  }
  SUBCASE("requires each datum tested exactly once") {
    const Dataset d = simulate_linear_gaussian(20, std::vector<double>{1}, 1.0, 1);
    CHECK_THROWS_AS(effective_params(d, ols({0}), make_repeated_kfold(20, 5, 2, 1)), UsageError);
  }
}

TEST_CASE("metrics through the engine") {
  const Dataset d = demo_dataset("classification");
  ModelSpec m;
  m.family = Family::logistic;
  m.features = {0, 1, 2};
  const FoldPlan plan = make_repeated_kfold(d.n(), 10, 5, 1);
  const ScoreEstimate e = cv_metric(m, d, plan, MetricKind::mcc);
  REQUIRE(e.per_repetition);
  CHECK(e.per_repetition->size() == 5);
  CHECK(e.se_method == SeMethod::repetition);
  const ScoreEstimate single = cv_metric(m, d, make_kfold(d.n(), 10, 1), MetricKind::mcc);
  CHECK(single.se_method == SeMethod::none);
  EngineOptions bc;
  bc.bias_correct = true;
  CHECK_THROWS_AS(cv_metric(m, d, plan, MetricKind::mcc, bc), UsageError);
}

TEST_CASE("fit failures name the split") {
  Dataset d = simulate_linear_gaussian(20, std::vector<double>{1, 1}, 1.0, 3);
  d.features.col(1) = d.features.col(0);
  try {
    cv_score(ols({0, 1}), d, make_kfold(20, 4, 1), LossKind::squared_error);
    FAIL("expected FitError");
  } catch (const FitError& e) {
    CHECK(std::string(e.what()).find("split") != std::string::npos);
  }
}

TEST_CASE("nested tuning") {
  const Dataset d = simulate_linear_gaussian(80, std::vector<double>{1, 0.5, 0, 0}, 1.0, 7);
  const FoldPlan outer = make_kfold(80, 5, 2);

  SUBCASE("a single candidate reproduces the plain score") {
    const NestedResult r = tune_nested({ols({0, 1})}, d, outer, 4, LossKind::squared_error, false, 3);
    const ScoreEstimate plain = cv_score(ols({0, 1}), d, outer, LossKind::squared_error);
    CHECK(r.outer.mean == doctest::Approx(plain.mean).epsilon(1e-12));
    CHECK(*r.outer.pointwise == *plain.pointwise);
  }

  SUBCASE("inner computations never touch outer test rows") {
    const NestedResult r = tune_nested({ols({0}), ols({0, 1}), ols({0, 1, 2, 3})}, d, outer, 4, LossKind::squared_error, false, 3);
    CHECK(r.leakage_audited);
    REQUIRE(r.choices.size() == outer.splits.size());
    for (std::size_t s = 0; s < outer.splits.size(); ++s) {
      const auto& test = outer.splits[s].test;
      for (auto i : r.choices[s].inner_rows) CHECK(std::find(test.begin(), test.end(), i) == test.end());
    }
  }

  SUBCASE("threshold tuning for metrics") {
    const Dataset c = demo_dataset("classification");
    ModelSpec m;
    m.family = Family::logistic;
    m.features = {0, 1};
    const FoldPlan o = make_kfold(c.n(), 5, 1);
    const NestedResult r = tune_nested({m}, c, o, 3, MetricKind::tss, true, 1);
    for (const auto& ch : r.choices) {
      REQUIRE(ch.threshold);
      CHECK(*ch.threshold >= 0.05 - 1e-12);
      CHECK(*ch.threshold <= 0.95 + 1e-12);
    }
    const auto grid = threshold_grid();
    CHECK(grid.size() == 19);
  }
}

TEST_CASE("lambda tuning") {
  const Dataset d = simulate_linear_gaussian(200, std::vector<double>{1, 0.5, 0.25, 0, 0, 0, 0, 0, 0, 0}, 1.0, 31);
  const std::vector<std::size_t> f = all_rows(10);
  const FoldPlan plan = make_kfold(200, 10, 4);
  const LambdaTuning t = tune_lambda(d, f, 1.0, Objective::linear, plan, LossKind::squared_error, 25);
  CHECK(t.lambdas.size() == 25);
  CHECK(t.scores.size() == 25);
  CHECK(t.chosen(LambdaRule::one_se) >= t.chosen(LambdaRule::best));
  CHECK(t.nonzero[t.one_se_index] <= t.nonzero[t.best_index]);
  for (std::size_t l = 1; l < t.lambdas.size(); ++l) CHECK(t.lambdas[l] < t.lambdas[l - 1]);
  for (const auto& s : t.scores) CHECK(s.plan_fingerprint == plan.fingerprint());
  CHECK(parse_lambda_rule("one_se") == LambdaRule::one_se);
}
