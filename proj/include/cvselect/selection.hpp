#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cvselect/engine.hpp"

namespace cvselect {

struct ScoreEntry {
  std::string id;
  ScoreEstimate estimate;
  int complexity = 0;
};

struct ScoreTable {
  std::vector<ScoreEntry> entries;
  ScoreKind kind = LossKind::squared_error;
  std::string plan_fingerprint;
  /// Loss vectors are aligned across entries (same plan, same data order).
  bool paired = false;

  Orientation orientation() const { return cvselect::orientation(kind); }
  /// Index of the best mean score; ties go to the earlier entry.
  std::size_t best_index() const;
};

/// Validates that every entry shares kind and plan, and sets `paired`.
ScoreTable make_table(std::vector<ScoreEntry> entries);

/// Pearson correlation. A zero-variance input gives 1 if the two vectors
/// are identical and 0 otherwise.
double pearson(std::span<const double> a, std::span<const double> b);

/// sqrt(sm^2 + sb^2 - 2 rho sm sb), clamped at zero against rounding.
double sigma_diff_formula(double sigma_m, double sigma_best, double rho);

/// rho_{best,m} for every entry (Eq 8 context).
std::vector<double> correlation_with_best(const ScoreTable& table);
/// Eq 8: sigma_best * sqrt(1 - rho).
std::vector<double> sigma_adj(const ScoreTable& table);
/// Eq 9, with the square root.
std::vector<double> sigma_diff(const ScoreTable& table);
/// Full M x M correlation matrix of the paired loss vectors.
std::vector<std::vector<double>> correlation_matrix(const ScoreTable& table);

enum class Rule { best_score, ose_modified, ose_diff };
std::string_view to_string(Rule r) noexcept;
/// Accepts "best", "best_score", "ose-mod", "ose_modified", "ose-diff", "ose_diff".
Rule parse_rule(std::string_view name);

struct ModelSummary {
  std::string id;
  double mean = 0.0;
  double se = 0.0;
  double rho = 1.0;
  double sigma_adj = 0.0;
  double sigma_diff = 0.0;
  /// mean_m - mean_best in the native orientation.
  double delta = 0.0;
  int complexity = 0;
  /// Within the rule's threshold of the best score.
  bool comparable = false;
};

struct SelectionResult {
  Rule rule = Rule::best_score;
  ScoreKind kind = LossKind::squared_error;
  std::string best_id;
  std::string selected_id;
  std::vector<ModelSummary> models;
  std::vector<std::vector<double>> correlation;
  /// Several comparable models shared the lowest complexity rank.
  bool tie_broken = false;
  std::vector<std::string> warnings;
};

SelectionResult select(const ScoreTable& table, Rule rule);

/// Scores every model on one shared plan. Fit errors are rethrown naming
/// the model.
ScoreTable score_table(const std::vector<ModelSpec>& models, const Dataset& data, const FoldPlan& plan, const ScoreKind& kind,
                       const EngineOptions& opts = {});

}  // namespace cvselect
