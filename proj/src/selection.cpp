#include "cvselect/selection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cvselect/error.hpp"

namespace cvselect {

std::size_t ScoreTable::best_index() const {
  if (entries.empty()) throw UsageError("score table is empty");
  const Orientation o = orientation();
  std::size_t best = 0;
  for (std::size_t m = 1; m < entries.size(); ++m) {
    if (utility(entries[m].estimate.mean, o) > utility(entries[best].estimate.mean, o)) best = m;
  }
  return best;
}

ScoreTable make_table(std::vector<ScoreEntry> entries) {
  if (entries.empty()) throw UsageError("score table is empty");
  ScoreTable t;
  t.kind = entries.front().estimate.kind;
  t.plan_fingerprint = entries.front().estimate.plan_fingerprint;
  t.paired = true;
  const ScoreEstimate& first = entries.front().estimate;
  for (const auto& e : entries) {
    if (e.estimate.kind != t.kind) throw UsageError("score table mixes kinds: '" + e.id + "' differs from '" + entries.front().id + "'");
    if (e.estimate.plan_fingerprint != t.plan_fingerprint) throw UsageError("score table mixes plans: '" + e.id + "' used another plan");
    const bool has = e.estimate.pointwise || e.estimate.per_repetition;
    if (!has || e.estimate.pointwise.has_value() != first.pointwise.has_value() ||
        e.estimate.paired_values().size() != first.paired_values().size() ||
        e.estimate.pointwise_index != first.pointwise_index) {
      t.paired = false;
    }
  }
  t.entries = std::move(entries);
  return t;
}

double pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw UsageError("correlation needs vectors of equal length");
  if (a.size() < 2) throw UsageError("correlation needs at least two paired values");
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double saa = 0.0, sbb = 0.0, sab = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma, db = b[i] - mb;
    saa += da * da;
    sbb += db * db;
    sab += da * db;
  }
  if (saa == 0.0 || sbb == 0.0) return std::equal(a.begin(), a.end(), b.begin()) ? 1.0 : 0.0;
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

double sigma_diff_formula(double sigma_m, double sigma_best, double rho) {
  const double v = sigma_m * sigma_m + sigma_best * sigma_best - 2.0 * rho * sigma_m * sigma_best;
  return std::sqrt(std::max(v, 0.0));
}

std::vector<double> correlation_with_best(const ScoreTable& table) {
  const std::size_t b = table.best_index();
  if (table.entries.size() == 1) return {1.0};
  if (!table.paired) throw UsageError("correlations need a paired score table (same plan, aligned loss vectors)");
  const auto& best = table.entries[b].estimate.paired_values();
  std::vector<double> rho(table.entries.size());
  for (std::size_t m = 0; m < rho.size(); ++m) rho[m] = m == b ? 1.0 : pearson(best, table.entries[m].estimate.paired_values());
  return rho;
}

std::vector<double> sigma_adj(const ScoreTable& table) {
  const double sb = table.entries[table.best_index()].estimate.se;
  const auto rho = correlation_with_best(table);
  std::vector<double> out(rho.size());
  for (std::size_t m = 0; m < rho.size(); ++m) out[m] = sb * std::sqrt(std::max(1.0 - rho[m], 0.0));
  return out;
}

std::vector<double> sigma_diff(const ScoreTable& table) {
  const double sb = table.entries[table.best_index()].estimate.se;
  const auto rho = correlation_with_best(table);
  std::vector<double> out(rho.size());
  for (std::size_t m = 0; m < rho.size(); ++m) {
    out[m] = m == table.best_index() ? 0.0 : sigma_diff_formula(table.entries[m].estimate.se, sb, rho[m]);
  }
  return out;
}

std::vector<std::vector<double>> correlation_matrix(const ScoreTable& table) {
  const std::size_t m = table.entries.size();
  std::vector<std::vector<double>> c(m, std::vector<double>(m, 1.0));
  if (m == 1) return c;
  if (!table.paired) throw UsageError("correlations need a paired score table (same plan, aligned loss vectors)");
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      c[i][j] = c[j][i] = pearson(table.entries[i].estimate.paired_values(), table.entries[j].estimate.paired_values());
    }
  }
  return c;
}

std::string_view to_string(Rule r) noexcept {
  switch (r) {
    case Rule::best_score:
      return "best_score";
    case Rule::ose_modified:
      return "ose_modified";
    case Rule::ose_diff:
      return "ose_diff";
  }
  return "?";
}

Rule parse_rule(std::string_view name) {
  if (name == "best" || name == "best_score" || name == "best-score") return Rule::best_score;
  if (name == "ose-mod" || name == "ose_modified" || name == "ose-modified") return Rule::ose_modified;
  if (name == "ose-diff" || name == "ose_diff") return Rule::ose_diff;
  throw UsageError("unknown selection rule: " + std::string(name) + " (expected best, ose-mod or ose-diff)");
}

SelectionResult select(const ScoreTable& table, Rule rule) {
  const std::size_t b = table.best_index();
  const Orientation o = table.orientation();
  SelectionResult res;
  res.rule = rule;
  res.kind = table.kind;
  res.best_id = table.entries[b].id;

  const bool single = table.entries.size() == 1;
  const bool have_pairs = single || table.paired;
  if (!have_pairs && rule != Rule::best_score) throw UsageError("OSE rules need a paired score table");
  std::vector<double> rho(table.entries.size(), 1.0), adj(table.entries.size(), 0.0), diff(table.entries.size(), 0.0);
  if (have_pairs) {
    rho = correlation_with_best(table);
    adj = sigma_adj(table);
    diff = sigma_diff(table);
    res.correlation = correlation_matrix(table);
  }

  const double best_u = utility(table.entries[b].estimate.mean, o);
  for (std::size_t m = 0; m < table.entries.size(); ++m) {
    const auto& e = table.entries[m];
    ModelSummary s;
    s.id = e.id;
    s.mean = e.estimate.mean;
    s.se = e.estimate.se;
    s.rho = rho[m];
    s.sigma_adj = adj[m];
    s.sigma_diff = diff[m];
    s.delta = e.estimate.mean - table.entries[b].estimate.mean;
    s.complexity = e.complexity;
    const double gap = best_u - utility(e.estimate.mean, o);
    switch (rule) {
      case Rule::best_score:
        s.comparable = m == b;
        break;
      case Rule::ose_modified:
        s.comparable = gap <= adj[m];
        break;
      case Rule::ose_diff:
        s.comparable = gap <= diff[m];
        break;
    }
    res.models.push_back(s);
  }

  std::size_t chosen = b;
  if (rule != Rule::best_score) {
    const int best_rank = table.entries[b].complexity;
    std::vector<std::size_t> pool;
    for (std::size_t m = 0; m < table.entries.size(); ++m) {
      if (res.models[m].comparable && table.entries[m].complexity <= best_rank) pool.push_back(m);
    }
    const int low = table.entries[*std::min_element(pool.begin(), pool.end(), [&](auto x, auto y) {
                                    return table.entries[x].complexity < table.entries[y].complexity;
                                  })].complexity;
    std::erase_if(pool, [&](auto m) { return table.entries[m].complexity != low; });
    res.tie_broken = pool.size() > 1;
    chosen = *std::min_element(pool.begin(), pool.end(), [&](auto x, auto y) {
      const double ux = utility(table.entries[x].estimate.mean, o), uy = utility(table.entries[y].estimate.mean, o);
      if (ux != uy) return ux > uy;
      return table.entries[x].id < table.entries[y].id;
    });
    if (res.tie_broken) res.warnings.push_back("several comparable models share the lowest complexity rank; chose the better mean, then the first id");
  }
  res.selected_id = table.entries[chosen].id;

  if (have_pairs && !single) {
    const std::size_t n = table.entries[b].estimate.paired_values().size();
    if (table.entries[b].estimate.pointwise && n < 100) {
      res.warnings.push_back("n = " + std::to_string(n) + " < 100: standard errors of score differences may be unreliable");
    }
  }
  return res;
}

ScoreTable score_table(const std::vector<ModelSpec>& models, const Dataset& data, const FoldPlan& plan, const ScoreKind& kind,
                       const EngineOptions& opts) {
  if (models.empty()) throw UsageError("score table needs at least one model");
  std::vector<ScoreEntry> entries;
  entries.reserve(models.size());
  for (const auto& spec : models) {
    ScoreEntry e;
    e.id = spec.id.empty() ? spec.describe(data.feature_names) : spec.id;
    e.complexity = spec.rank();
    ModelSpec named = spec;
    named.id = e.id;
    e.estimate = cv_estimate(named, data, plan, kind, opts);
    entries.push_back(std::move(e));
  }
  return make_table(std::move(entries));
}

}  // namespace cvselect
