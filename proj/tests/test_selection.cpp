#include <doctest.h>

#include <cmath>
#include <vector>

#include "cvselect/data.hpp"
#include "cvselect/error.hpp"
#include "cvselect/rng.hpp"
#include "cvselect/selection.hpp"

using namespace cvselect;

namespace {

ScoreEntry entry(const std::string& id, std::vector<double> losses, int complexity, const std::string& fp = "plan") {
  ScoreEntry e;
  e.id = id;
  e.complexity = complexity;
  e.estimate.model_id = id;
  e.estimate.plan_fingerprint = fp;
  double m = 0;
  for (double v : losses) m += v;
  m /= static_cast<double>(losses.size());
  double ss = 0;
  for (double v : losses) ss += (v - m) * (v - m);
  e.estimate.mean = m;
  e.estimate.se = std::sqrt(ss / static_cast<double>(losses.size() - 1) / static_cast<double>(losses.size()));
  e.estimate.pointwise_index.resize(losses.size());
  for (std::size_t i = 0; i < losses.size(); ++i) e.estimate.pointwise_index[i] = i;
  e.estimate.pointwise = std::move(losses);
  return e;
}

std::vector<double> noise(std::size_t n, std::uint64_t seed, double shift = 0.0) {
  Rng rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = shift + rng.normal();
  return v;
}

}  // namespace

TEST_CASE("pearson conventions") {
  const auto a = noise(50, 1);
  CHECK(pearson(a, a) == doctest::Approx(1.0));
  const std::vector<double> c(5, 2.0), c2(5, 3.0);
  CHECK(pearson(c, c) == 1.0);
  CHECK(pearson(c, c2) == 0.0);
  CHECK(std::abs(pearson(noise(10000, 2), noise(10000, 3))) < 0.05);
}

TEST_CASE("sigma formulas") {
  CHECK(sigma_diff_formula(1.0, 1.0, 0.0) == doctest::Approx(std::sqrt(2.0)));
  CHECK(sigma_diff_formula(1.0, 1.0, 1.0) == 0.0);
  const auto a = noise(200, 5);
  const ScoreTable same = make_table({entry("a", a, 1), entry("b", a, 2)});
  CHECK(sigma_adj(same)[1] == doctest::Approx(0.0));
  CHECK(sigma_diff(same)[1] == doctest::Approx(0.0));
  CHECK(correlation_with_best(same)[1] == doctest::Approx(1.0));

  // sigma_adj = sigma_best sqrt(1 - rho): rho = 0.75, sigma_best = 2 gives 1.
  CHECK(2.0 * std::sqrt(1.0 - 0.75) == doctest::Approx(1.0));
}

TEST_CASE("sigma_diff equals the paired-difference standard error") {
  for (std::uint64_t t = 0; t < 100; ++t) {
    const auto a = noise(50, 10 * t + 1);
    auto b = noise(50, 10 * t + 2, 0.3);
    for (std::size_t i = 0; i < 50; ++i) b[i] += 0.6 * a[i];
    const ScoreTable table = make_table({entry("a", a, 1), entry("b", b, 2)});
    const std::size_t best = table.best_index();
    const std::size_t other = 1 - best;
    std::vector<double> diff(50);
    for (std::size_t i = 0; i < 50; ++i) diff[i] = (*table.entries[other].estimate.pointwise)[i] - (*table.entries[best].estimate.pointwise)[i];
    double m = 0;
    for (double v : diff) m += v;
    m /= 50;
    double ss = 0;
    for (double v : diff) ss += (v - m) * (v - m);
    const double se = std::sqrt(ss / 49.0 / 50.0);
    CHECK(std::abs(sigma_diff(table)[other] - se) < 1e-10);
  }
}

TEST_CASE("selection rules") {
  SUBCASE("single model") {
    const ScoreTable t = make_table({entry("only", noise(20, 1), 3)});
    for (auto r : {Rule::best_score, Rule::ose_modified, Rule::ose_diff}) {
      const auto res = select(t, r);
      CHECK(res.selected_id == "only");
      CHECK(res.best_id == "only");
    }
  }
  SUBCASE("simpler comparable model wins under OSE") {
    const auto base = noise(200, 4, 1.0);
    auto better = noise(200, 5, -0.01);
    for (std::size_t i = 0; i < better.size(); ++i) better[i] = base[i] + 0.3 * better[i];
    const ScoreTable t = make_table({entry("simple", base, 1), entry("complex", better, 5)});
    CHECK(select(t, Rule::best_score).selected_id == "complex");
    const auto mod = select(t, Rule::ose_modified);
    CHECK(mod.selected_id == "simple");
    CHECK(select(t, Rule::ose_diff).selected_id == "simple");
    CHECK(mod.models[1].sigma_adj == 0.0);
  }
  SUBCASE("more complex models are never chosen by OSE") {
    const auto base = noise(200, 6, 1.0);
    auto worse = base;
    for (auto& v : worse) v += 1e-6;
    const ScoreTable t = make_table({entry("best", base, 2), entry("bigger", worse, 7)});
    CHECK(select(t, Rule::ose_modified).selected_id == "best");
  }
  SUBCASE("identical specs: equal rank tie broken by id") {
    const auto a = noise(150, 9);
    const ScoreTable t = make_table({entry("m2", a, 3), entry("m1", a, 3)});
    const auto res = select(t, Rule::ose_modified);
    CHECK(res.selected_id == "m1");
    CHECK(res.tie_broken);
  }
  SUBCASE("small samples raise a warning") {
    const ScoreTable t = make_table({entry("a", noise(30, 1), 1), entry("b", noise(30, 2), 2)});
    CHECK_FALSE(select(t, Rule::ose_modified).warnings.empty());
  }
  SUBCASE("higher-is-better kinds") {
    auto a = entry("a", noise(120, 3, 0.0), 1);
    auto b = entry("b", noise(120, 3, 0.5), 2);
    a.estimate.kind = b.estimate.kind = LossKind::log_loss;
    const ScoreTable t = make_table({a, b});
    CHECK(select(t, Rule::best_score).selected_id == "b");
  }
  SUBCASE("best-score choice is invariant under monotone transforms") {
    auto a = entry("a", noise(100, 1, 1.0), 1);
    auto b = entry("b", noise(100, 2, 1.1), 2);
    const auto before = select(make_table({a, b}), Rule::best_score).selected_id;
    a.estimate.mean = std::exp(a.estimate.mean);
    b.estimate.mean = std::exp(b.estimate.mean);
    CHECK(select(make_table({a, b}), Rule::best_score).selected_id == before);
  }
}

TEST_CASE("tables reject mixed plans and kinds") {
  CHECK_THROWS_AS(make_table({entry("a", noise(10, 1), 1, "p1"), entry("b", noise(10, 2), 1, "p2")}), UsageError);
  auto b = entry("b", noise(10, 2), 1);
  b.estimate.kind = LossKind::absolute_error;
  CHECK_THROWS_AS(make_table({entry("a", noise(10, 1), 1), b}), UsageError);
  CHECK(parse_rule("ose-mod") == Rule::ose_modified);
  CHECK(parse_rule("best") == Rule::best_score);
  CHECK_THROWS_AS(parse_rule("median"), UsageError);
}

TEST_CASE("score_table on a shared plan") {
  const Dataset d = simulate_linear_gaussian(120, std::vector<double>{1, 0.5, 0, 0}, 1.0, 2);
  std::vector<ModelSpec> models;
  for (std::size_t j = 0; j <= 4; ++j) {
    ModelSpec m;
    m.features = all_rows(j);
    models.push_back(m);
  }
  const FoldPlan plan = make_kfold(120, 10, 1);
  const ScoreTable t = score_table(models, d, plan, LossKind::squared_error);
  CHECK(t.entries.size() == 5);
  CHECK(t.paired);
  for (const auto& e : t.entries) CHECK(e.estimate.plan_fingerprint == plan.fingerprint());
  const auto best = select(t, Rule::best_score);
  const auto mod = select(t, Rule::ose_modified);
  const auto rank_of = [&](const std::string& id) {
    for (const auto& e : t.entries) {
      if (e.id == id) return e.complexity;
    }
    return -1;
  };
  CHECK(rank_of(mod.selected_id) <= rank_of(best.selected_id));
  CHECK(mod.correlation.size() == 5);
  for (const auto& s : mod.models) {
    CHECK(s.sigma_adj >= 0);
    CHECK(s.sigma_adj <= select(t, Rule::best_score).models[t.best_index()].se * std::sqrt(2.0) + 1e-12);
  }
}
