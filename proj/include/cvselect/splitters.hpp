#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace cvselect {

/// One train/test pair. Both index lists are sorted and disjoint.
struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
  std::size_t repetition = 0;

  bool operator==(const Split&) const = default;
};

enum class SchemeKind { kfold, repeated_kfold, loo, leave_d_out, logo, blocked, stratified_kfold };

std::string_view to_string(SchemeKind kind) noexcept;
SchemeKind parse_scheme(std::string_view name);

/// Parameters of the scheme that produced a plan. Fields that do not apply
/// to the kind are zero.
struct Scheme {
  SchemeKind kind = SchemeKind::kfold;
  std::size_t k = 0;
  std::size_t repeats = 0;
  std::size_t d = 0;
  std::size_t iterations = 0;
  double h = 0.0;
  /// Blocked plans: the kind of the wrapped plan.
  SchemeKind base = SchemeKind::kfold;

  bool operator==(const Scheme&) const = default;
};

struct FoldPlan {
  std::vector<Split> splits;
  Scheme scheme;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  /// Blocked plans: splits discarded because their training set was empty.
  std::size_t dropped = 0;

  /// Number of distinct repetition ids (1 for single-pass schemes).
  std::size_t repetitions() const;

  /// True when no index is tested more than once across the plan, so that
  /// per-datum losses form a single vector.
  bool tests_each_index_at_most_once() const;

  /// Stable hash of the canonical JSON form.
  std::string fingerprint() const;

  bool operator==(const FoldPlan&) const = default;
};

FoldPlan make_kfold(std::size_t n, std::size_t k, std::uint64_t seed);
FoldPlan make_loo(std::size_t n);
FoldPlan make_repeated_kfold(std::size_t n, std::size_t k, std::size_t repeats, std::uint64_t seed);
FoldPlan make_stratified_kfold(std::size_t n, std::size_t k, std::span<const std::string> strata, std::uint64_t seed);
FoldPlan make_leave_d_out(std::size_t n, std::size_t d, std::size_t iterations, std::uint64_t seed);
FoldPlan make_logo(std::span<const std::string> groups);

/// Test-set size for consistent leave-d-out selection,
/// ceil(n (1 - 1 / (ln n - 1))). Requires n >= 8.
std::size_t consistent_d(std::size_t n);

/// Removes from every training set each index whose euclidean distance to
/// the nearest test point is <= h. Splits left with no training data are
/// dropped and counted in FoldPlan::dropped; if every split is dropped the
/// call throws.
FoldPlan make_blocked(const Eigen::MatrixXd& coords, const FoldPlan& base, double h);

/// Inner K-fold plan over one outer training set. Inner indices are
/// positions into `to_original`, which lists the outer training indices.
struct InnerPlan {
  FoldPlan plan;
  std::vector<std::size_t> to_original;
};

struct NestedPlan {
  FoldPlan outer;
  std::vector<InnerPlan> inner;
};

NestedPlan make_nested(const FoldPlan& outer, std::size_t inner_k, std::uint64_t seed);

/// Throws UsageError unless every split is disjoint, non-empty and in range.
void check_plan(const FoldPlan& plan);

nlohmann::json to_json(const FoldPlan& plan);
FoldPlan plan_from_json(const nlohmann::json& j);

}  // namespace cvselect
