#include "cvselect/splitters.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <unordered_map>

#include "cvselect/error.hpp"
#include "cvselect/kernels.hpp"
#include "cvselect/rng.hpp"

namespace cvselect {
namespace {

std::vector<std::size_t> complement(std::size_t n, const std::vector<std::size_t>& sorted_test) {
  std::vector<std::size_t> train;
  train.reserve(n - sorted_test.size());
  std::size_t t = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (t < sorted_test.size() && sorted_test[t] == i) {
      ++t;
    } else {
      train.push_back(i);
    }
  }
  return train;
}

std::vector<Split> splits_from_folds(std::size_t n, std::vector<std::vector<std::size_t>> folds, std::size_t repetition) {
  std::vector<Split> splits;
  splits.reserve(folds.size());
  for (auto& fold : folds) {
    std::sort(fold.begin(), fold.end());
    Split s;
    s.train = complement(n, fold);
    s.test = std::move(fold);
    s.repetition = repetition;
    splits.push_back(std::move(s));
  }
  return splits;
}

std::vector<Split> kfold_splits(std::size_t n, std::size_t k, Rng& rng, std::size_t repetition) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  rng.shuffle(std::span<std::size_t>(perm));
  std::vector<std::vector<std::size_t>> folds(k);
  for (std::size_t j = 0; j < n; ++j) folds[j % k].push_back(perm[j]);
  return splits_from_folds(n, std::move(folds), repetition);
}

void check_k(std::size_t n, std::size_t k) {
  if (k < 2) throw UsageError("K must be at least 2, got " + std::to_string(k));
  if (k > n) throw UsageError("K = " + std::to_string(k) + " exceeds n = " + std::to_string(n));
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::string_view to_string(SchemeKind kind) noexcept {
  switch (kind) {
    case SchemeKind::kfold:
      return "kfold";
    case SchemeKind::repeated_kfold:
      return "repeated-kfold";
    case SchemeKind::loo:
      return "loo";
    case SchemeKind::leave_d_out:
      return "leave-d-out";
    case SchemeKind::logo:
      return "logo";
    case SchemeKind::blocked:
      return "blocked";
    case SchemeKind::stratified_kfold:
      return "stratified-kfold";
  }
  return "unknown";
}

SchemeKind parse_scheme(std::string_view name) {
  for (auto k : {SchemeKind::kfold, SchemeKind::repeated_kfold, SchemeKind::loo, SchemeKind::leave_d_out, SchemeKind::logo,
                 SchemeKind::blocked, SchemeKind::stratified_kfold}) {
    if (to_string(k) == name) return k;
  }
  throw UsageError("unknown scheme: " + std::string(name));
}

std::size_t FoldPlan::repetitions() const {
  std::set<std::size_t> ids;
  for (const auto& s : splits) ids.insert(s.repetition);
  return ids.size();
}

bool FoldPlan::tests_each_index_at_most_once() const {
  std::vector<char> seen(n, 0);
  for (const auto& s : splits) {
    for (auto i : s.test) {
      if (seen[i]) return false;
      seen[i] = 1;
    }
  }
  return true;
}

std::string FoldPlan::fingerprint() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(to_json(*this).dump())));
  return buf;
}

FoldPlan make_kfold(std::size_t n, std::size_t k, std::uint64_t seed) {
  check_k(n, k);
  Rng rng(seed, 0);
  FoldPlan plan;
  plan.splits = kfold_splits(n, k, rng, 0);
  plan.scheme.kind = SchemeKind::kfold;
  plan.scheme.k = k;
  plan.n = n;
  plan.seed = seed;
  return plan;
}

FoldPlan make_loo(std::size_t n) {
  if (n < 2) throw UsageError("LOO needs n >= 2");
  std::vector<std::vector<std::size_t>> folds(n);
  for (std::size_t i = 0; i < n; ++i) folds[i] = {i};
  FoldPlan plan;
  plan.splits = splits_from_folds(n, std::move(folds), 0);
  plan.scheme.kind = SchemeKind::loo;
  plan.scheme.k = n;
  plan.n = n;
  return plan;
}

FoldPlan make_repeated_kfold(std::size_t n, std::size_t k, std::size_t repeats, std::uint64_t seed) {
  check_k(n, k);
  if (repeats < 1) throw UsageError("repeats must be at least 1");
  FoldPlan plan;
  for (std::size_t r = 0; r < repeats; ++r) {
    Rng rng(seed, r);
    auto s = kfold_splits(n, k, rng, r);
    plan.splits.insert(plan.splits.end(), std::make_move_iterator(s.begin()), std::make_move_iterator(s.end()));
  }
  plan.scheme.kind = SchemeKind::repeated_kfold;
  plan.scheme.k = k;
  plan.scheme.repeats = repeats;
  plan.n = n;
  plan.seed = seed;
  return plan;
}

FoldPlan make_stratified_kfold(std::size_t n, std::size_t k, std::span<const std::string> strata, std::uint64_t seed) {
  if (strata.size() != n) throw UsageError("strata length does not match n");
  check_k(n, k);
  std::map<std::string, std::vector<std::size_t>> levels;
  for (std::size_t i = 0; i < n; ++i) levels[strata[i]].push_back(i);
  Rng rng(seed, 0);
  std::vector<std::vector<std::size_t>> folds(k);
  // The dealing cursor carries over between levels so overall fold sizes
  // stay balanced as well as the per-level counts.
  std::size_t cursor = 0;
  for (auto& [level, idx] : levels) {
    rng.shuffle(std::span<std::size_t>(idx));
    for (auto i : idx) folds[cursor++ % k].push_back(i);
  }
  FoldPlan plan;
  plan.splits = splits_from_folds(n, std::move(folds), 0);
  plan.scheme.kind = SchemeKind::stratified_kfold;
  plan.scheme.k = k;
  plan.n = n;
  plan.seed = seed;
  return plan;
}

FoldPlan make_leave_d_out(std::size_t n, std::size_t d, std::size_t iterations, std::uint64_t seed) {
  if (d < 1 || d >= n) throw UsageError("leave-d-out needs 1 <= d <= n-1, got d = " + std::to_string(d));
  if (iterations < 1) throw UsageError("leave-d-out needs at least one iteration");
  FoldPlan plan;
  std::vector<std::size_t> perm(n);
  for (std::size_t it = 0; it < iterations; ++it) {
    Rng rng(seed, it);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    for (std::size_t j = 0; j < d; ++j) std::swap(perm[j], perm[j + rng.below(n - j)]);
    std::vector<std::vector<std::size_t>> folds{std::vector<std::size_t>(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(d))};
    auto s = splits_from_folds(n, std::move(folds), it);
    plan.splits.push_back(std::move(s.front()));
  }
  plan.scheme.kind = SchemeKind::leave_d_out;
  plan.scheme.d = d;
  plan.scheme.iterations = iterations;
  plan.n = n;
  plan.seed = seed;
  return plan;
}

std::size_t consistent_d(std::size_t n) {
  if (n < 8) throw UsageError("consistent_d needs n >= 8, got " + std::to_string(n));
  const double nn = static_cast<double>(n);
  return static_cast<std::size_t>(std::ceil(nn * (1.0 - 1.0 / (std::log(nn) - 1.0))));
}

FoldPlan make_logo(std::span<const std::string> groups) {
  std::vector<std::string> order;
  std::unordered_map<std::string, std::size_t> slot;
  std::vector<std::vector<std::size_t>> folds;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    auto [it, inserted] = slot.try_emplace(groups[i], folds.size());
    if (inserted) folds.emplace_back();
    folds[it->second].push_back(i);
  }
  if (folds.size() < 2) throw UsageError("leave-one-group-out needs at least 2 distinct groups");
  FoldPlan plan;
  plan.splits = splits_from_folds(groups.size(), std::move(folds), 0);
  plan.scheme.kind = SchemeKind::logo;
  plan.scheme.k = plan.splits.size();
  plan.n = groups.size();
  return plan;
}

FoldPlan make_blocked(const Eigen::MatrixXd& coords, const FoldPlan& base, double h) {
  if (static_cast<std::size_t>(coords.rows()) != base.n) {
    throw UsageError("coords have " + std::to_string(coords.rows()) + " rows, plan has n = " + std::to_string(base.n));
  }
  if (!(h >= 0.0)) throw UsageError("blocking distance h must be >= 0");
  const double h2 = h * h;
  const std::size_t n = base.n;
  FoldPlan plan;
  plan.scheme = base.scheme;
  plan.scheme.kind = SchemeKind::blocked;
  plan.scheme.base = base.scheme.kind == SchemeKind::blocked ? base.scheme.base : base.scheme.kind;
  plan.scheme.h = h;
  plan.n = n;
  plan.seed = base.seed;
  plan.dropped = base.dropped;

  std::vector<double> nearest(n), dist(n);
  for (const auto& split : base.splits) {
    std::fill(nearest.begin(), nearest.end(), std::numeric_limits<double>::infinity());
    for (auto t : split.test) {
      std::fill(dist.begin(), dist.end(), 0.0);
      for (Eigen::Index c = 0; c < coords.cols(); ++c) {
        kernels::add_sq_offset(std::span<const double>(coords.col(c).data(), n), coords(static_cast<Eigen::Index>(t), c), dist);
      }
      for (std::size_t i = 0; i < n; ++i) nearest[i] = std::min(nearest[i], dist[i]);
    }
    Split s;
    s.test = split.test;
    s.repetition = split.repetition;
    for (auto i : split.train) {
      if (nearest[i] > h2) s.train.push_back(i);
    }
    if (s.train.empty()) {
      ++plan.dropped;
    } else {
      plan.splits.push_back(std::move(s));
    }
  }
  if (plan.splits.empty()) throw UsageError("blocking removed every training point: empty training sets");
  return plan;
}

NestedPlan make_nested(const FoldPlan& outer, std::size_t inner_k, std::uint64_t seed) {
  if (inner_k < 2) throw UsageError("inner K must be at least 2");
  NestedPlan nested;
  nested.outer = outer;
  for (std::size_t s = 0; s < outer.splits.size(); ++s) {
    const auto& train = outer.splits[s].train;
    if (inner_k > train.size()) {
      throw UsageError("inner K = " + std::to_string(inner_k) + " exceeds outer training size " + std::to_string(train.size()) +
                       " of split " + std::to_string(s));
    }
    InnerPlan inner;
    inner.plan = make_kfold(train.size(), inner_k, derive_seed(seed, s));
    inner.to_original = train;
    nested.inner.push_back(std::move(inner));
  }
  return nested;
}

void check_plan(const FoldPlan& plan) {
  if (plan.splits.empty()) throw UsageError("plan has no splits");
  for (std::size_t s = 0; s < plan.splits.size(); ++s) {
    const auto& split = plan.splits[s];
    const std::string where = " in split " + std::to_string(s);
    if (split.test.empty()) throw UsageError("empty test set" + where);
    if (split.train.empty()) throw UsageError("empty training set" + where);
    std::vector<char> mark(plan.n, 0);
    for (auto i : split.train) {
      if (i >= plan.n) throw UsageError("index out of range" + where);
      mark[i] = 1;
    }
    for (auto i : split.test) {
      if (i >= plan.n) throw UsageError("index out of range" + where);
      if (mark[i]) throw UsageError("train and test overlap at index " + std::to_string(i) + where);
    }
  }
}

nlohmann::json to_json(const FoldPlan& plan) {
  using nlohmann::json;
  json scheme{{"kind", to_string(plan.scheme.kind)}};
  const auto kind = plan.scheme.kind == SchemeKind::blocked ? plan.scheme.base : plan.scheme.kind;
  if (plan.scheme.kind == SchemeKind::blocked) {
    scheme["base"] = to_string(plan.scheme.base);
    scheme["h"] = plan.scheme.h;
  }
  switch (kind) {
    case SchemeKind::repeated_kfold:
      scheme["repeats"] = plan.scheme.repeats;
      [[fallthrough]];
    case SchemeKind::kfold:
    case SchemeKind::stratified_kfold:
    case SchemeKind::loo:
    case SchemeKind::logo:
      scheme["k"] = plan.scheme.k;
      break;
    case SchemeKind::leave_d_out:
      scheme["d"] = plan.scheme.d;
      scheme["iterations"] = plan.scheme.iterations;
      break;
    case SchemeKind::blocked:
      break;
  }
  json splits = json::array();
  for (const auto& s : plan.splits) {
    splits.push_back(json{{"train", s.train}, {"test", s.test}, {"repetition", s.repetition}});
  }
  json j{{"scheme", scheme}, {"n", plan.n}, {"seed", plan.seed}, {"splits", std::move(splits)}};
  if (plan.dropped > 0) j["dropped"] = plan.dropped;
  return j;
}

FoldPlan plan_from_json(const nlohmann::json& j) {
  try {
    FoldPlan plan;
    const auto& scheme = j.at("scheme");
    plan.scheme.kind = parse_scheme(scheme.at("kind").get<std::string>());
    plan.scheme.k = scheme.value("k", std::size_t{0});
    plan.scheme.repeats = scheme.value("repeats", std::size_t{0});
    plan.scheme.d = scheme.value("d", std::size_t{0});
    plan.scheme.iterations = scheme.value("iterations", std::size_t{0});
    plan.scheme.h = scheme.value("h", 0.0);
    if (scheme.contains("base")) plan.scheme.base = parse_scheme(scheme.at("base").get<std::string>());
    plan.n = j.at("n").get<std::size_t>();
    plan.seed = j.value("seed", std::uint64_t{0});
    plan.dropped = j.value("dropped", std::size_t{0});
    for (const auto& s : j.at("splits")) {
      Split split;
      split.train = s.at("train").get<std::vector<std::size_t>>();
      split.test = s.at("test").get<std::vector<std::size_t>>();
      split.repetition = s.value("repetition", std::size_t{0});
      plan.splits.push_back(std::move(split));
    }
    check_plan(plan);
    return plan;
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("malformed fold plan: ") + e.what());
  }
}

}  // namespace cvselect
