#include <doctest.h>

#include <sstream>

#include "cvselect/error.hpp"
#include "cvselect/experiments.hpp"

using namespace cvselect;

namespace {

ExperimentConfig small(std::string_view name, std::size_t replicates = 30) {
  ExperimentConfig cfg = default_experiment_config(name);
  cfg.replicates = replicates;
  cfg.test_size = 20000;
  cfg.seed = 5;
  return cfg;
}

}  // namespace

TEST_CASE("defaults and validation") {
  for (const auto& name : experiment_names()) {
    const auto cfg = default_experiment_config(name);
    CHECK(cfg.name == name);
    cfg.validate();
    const auto back = experiment_config_from_json(name, to_json(cfg));
    CHECK(to_json(back) == to_json(cfg));
  }
  CHECK_THROWS_AS(default_experiment_config("unknown"), UsageError);
  auto cfg = default_experiment_config("k-bias");
  cfg.replicates = 1;
  CHECK_THROWS_AS(cfg.validate(), UsageError);
  auto rk = default_experiment_config("repeat-vs-k");
  rk.repeats = 30;
  rk.k = 10;
  CHECK_THROWS_AS(rk.validate(), UsageError);
}

TEST_CASE("bias-variance decomposition") {
  auto cfg = small("bias-variance", 60);
  cfg.max_complexity = 4;
  const ExperimentReport r = run_bias_variance(cfg);
  for (std::size_t p = 0; p <= 4; ++p) {
    const std::string cell = "p=" + std::to_string(p);
    const auto& res = r.at(cell, "residual");
    CHECK(std::abs(res.mean) <= 3 * res.se + 1e-12);
  }
  // True model (3 active features) and above: bias^2 near zero.
  const auto& b3 = r.at("p=3", "bias2");
  CHECK(std::abs(b3.mean) <= 3 * b3.se + 1e-12);
  CHECK(r.at("p=4", "variance").mean + 3 * r.at("p=4", "variance").se >= r.at("p=1", "variance").mean);
}

TEST_CASE("k-bias report contract") {
  const ExperimentReport r = run_k_bias_study(small("k-bias", 20));
  for (const std::string cell : {"K=2", "K=5", "K=10", "LOO"}) {
    CHECK_NOTHROW(r.at(cell, "bias"));
    CHECK_NOTHROW(r.at(cell, "bias_corrected"));
    CHECK(r.at(cell, "bias").se > 0);
  }
  CHECK_THROWS_AS(r.at("K=3", "bias"), std::out_of_range);
}

TEST_CASE("repeat versus large K") {
  const auto cfg = small("repeat-vs-k", 20);
  const ExperimentReport a = run_repeat_vs_large_k(cfg);
  const ExperimentReport b = run_repeat_vs_large_k(cfg);
  std::ostringstream sa, sb;
  write_tidy_csv(a, sa);
  write_tidy_csv(b, sb);
  CHECK(sa.str() == sb.str());
  CHECK_NOTHROW(a.at("2x5-fold", "variance"));
  CHECK_NOTHROW(a.at("10-fold", "variance"));
  CHECK(sa.str().rfind("experiment,cell,statistic,mean,se\n", 0) == 0);
}

TEST_CASE("consistency demo") {
  auto cfg = small("consistency", 20);
  cfg.n_sweep = {100, 200};
  cfg.iterations = 20;
  const ExperimentReport r = run_consistency_demo(cfg);
  for (const std::string cell : {"n=100", "n=200"}) {
    const double f = r.at(cell, "loo_true_freq").mean;
    CHECK(f >= 0.0);
    CHECK(f <= 1.0);
  }
}

TEST_CASE("ose study") {
  const ExperimentReport r = run_ose_study(small("ose", 20));
  for (const std::string cell : {"best_score", "ose_modified", "ose_diff"}) CHECK_NOTHROW(r.at(cell, "superset_freq"));
}

TEST_CASE("parallel runs are identical") {
  auto cfg = small("k-bias", 8);
  const auto a = run_experiment(cfg);
  cfg.parallel = 4;
  const auto b = run_experiment(cfg);
  std::ostringstream sa, sb;
  write_tidy_csv(a, sa);
  write_tidy_csv(b, sb);
  CHECK(sa.str() == sb.str());
}
