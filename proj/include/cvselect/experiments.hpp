#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace cvselect {

/// Settings shared by the Monte Carlo studies. Every study draws its data
/// from the linear-Gaussian generator y = X beta + N(0, sigma^2) with
/// standard normal features, one independent dataset per replicate.
struct ExperimentConfig {
  std::string name;
  std::size_t replicates = 200;
  std::size_t n = 100;
  std::vector<double> beta;
  double sigma = 1.0;
  std::uint64_t seed = 0;
  /// bias-variance: nested OLS on the first 0..max_complexity features.
  std::size_t max_complexity = 8;
  /// k-bias: fold counts; 0 stands for n (LOO).
  std::vector<std::size_t> ks;
  /// repeat-vs-k: R repetitions of K-fold against one (R*K)-fold.
  std::size_t repeats = 2;
  std::size_t k = 5;
  /// consistency: sample sizes and leave-d-out iterations per dataset.
  std::vector<std::size_t> n_sweep;
  std::size_t iterations = 100;
  /// Size of the independent test set used as the truth oracle.
  std::size_t test_size = 100000;
  /// bias-variance: number of fixed evaluation points.
  std::size_t eval_points = 50;
  std::size_t parallel = 1;
  bool keep_raw = false;

  void validate() const;
};

/// Defaults for a named experiment. Throws UsageError for unknown names.
ExperimentConfig default_experiment_config(std::string_view name);
std::vector<std::string> experiment_names();

nlohmann::json to_json(const ExperimentConfig& cfg);
/// Starts from default_experiment_config(name) and applies the keys present.
ExperimentConfig experiment_config_from_json(std::string_view name, const nlohmann::json& j);

struct ExperimentCell {
  std::string cell;
  std::string statistic;
  double mean = 0.0;
  /// Monte Carlo standard error.
  double se = 0.0;
};

struct ExperimentReport {
  std::string experiment;
  ExperimentConfig config;
  std::vector<ExperimentCell> cells;
  /// Per-replicate values, kept when config.keep_raw.
  std::map<std::string, std::vector<double>> raw;

  /// Throws std::out_of_range when absent.
  const ExperimentCell& at(std::string_view cell, std::string_view statistic) const;
};

/// Box 3 decomposition for nested OLS. Per complexity cell: bias2, variance,
/// expected_loss, irreducible and residual = expected_loss - bias2 -
/// variance - sigma^2. bias2 is the unbiased estimate (mean error squared
/// minus its sampling variance), so bias2 + variance equals the mean squared
/// deviation from the true mean exactly and residual is a mean of
/// zero-expectation per-replicate terms.
ExperimentReport run_bias_variance(const ExperimentConfig& cfg);

/// Bias of K-fold CV against a per-replicate truth from an independent test
/// set, with and without the Eq 5 correction. Cells "K=<k>" (k = n reads
/// "LOO") with statistics bias, bias_corrected, bias_raw; gap cells
/// "<a> vs <b>" with abs_bias_gap and bias_difference using paired se.
ExperimentReport run_k_bias_study(const ExperimentConfig& cfg);

/// R x K-fold against a single (R*K)-fold on the same replicates: bias and
/// variance of each estimate plus a paired abs_bias_gap.
ExperimentReport run_repeat_vs_large_k(const ExperimentConfig& cfg);

/// Per n: how often best-score LOO and best-score leave-d_c-out pick the
/// true nested OLS model.
ExperimentReport run_consistency_demo(const ExperimentConfig& cfg);

/// Nested OLS selection with 10-fold CV: how often best_score, ose_modified
/// and ose_diff pick a strict superset of the true features.
ExperimentReport run_ose_study(const ExperimentConfig& cfg);

/// Dispatch on cfg.name.
ExperimentReport run_experiment(const ExperimentConfig& cfg);

/// Columns: experiment,cell,statistic,mean,se.
void write_tidy_csv(const ExperimentReport& report, std::ostream& out);

}  // namespace cvselect
