#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "cvselect/engine.hpp"
#include "cvselect/error.hpp"
#include "cvselect/selection.hpp"

namespace cvselect {

std::vector<double> threshold_grid() {
  std::vector<double> grid;
  for (int i = 1; i <= 19; ++i) grid.push_back(i / 20.0);
  return grid;
}

namespace {

double average(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

struct InnerChoice {
  std::size_t candidate = 0;
  std::optional<double> threshold;
  double score = 0.0;
};

InnerChoice choose_inner(const std::vector<ModelSpec>& candidates, const Dataset& sub, const FoldPlan& plan, const ScoreKind& kind,
                         bool tune_threshold, const EngineOptions& opts) {
  const Orientation o = orientation(kind);
  InnerChoice best;
  bool have = false;
  auto consider = [&](std::size_t c, std::optional<double> t, double score) {
    if (!have || utility(score, o) > utility(best.score, o)) {
      best = {c, t, score};
      have = true;
    }
  };
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    if (const auto* loss = std::get_if<LossKind>(&kind)) {
      consider(c, std::nullopt, cv_score(candidates[c], sub, plan, *loss).mean);
      continue;
    }
    const auto metric = std::get<MetricKind>(kind);
    const PredictionGrid grid = predict_grid(candidates[c], sub, plan, false);
    std::vector<std::vector<double>> probs(grid.cells.size());
    for (std::size_t s = 0; s < grid.cells.size(); ++s) {
      for (const auto& p : grid.cells[s]) probs[s].push_back(p.prob);
    }
    const std::span<const double> labels(sub.response.data(), sub.n());
    const std::vector<double> thresholds =
        tune_threshold ? threshold_grid() : std::vector<double>{opts.threshold.value_or(candidates[c].threshold)};
    for (double t : thresholds) consider(c, t, average(aggregate_metric(probs, labels, plan, t, metric)));
  }
  return best;
}

}  // namespace

NestedResult tune_nested(const std::vector<ModelSpec>& candidates, const Dataset& data, const FoldPlan& outer,
                         std::size_t inner_k, const ScoreKind& kind, bool tune_threshold, std::uint64_t seed,
                         const EngineOptions& opts) {
  if (candidates.empty()) throw UsageError("nested tuning needs at least one candidate");
  if (outer.n != data.n()) throw UsageError("outer plan does not match the dataset");
  const bool is_metric = std::holds_alternative<MetricKind>(kind);
  if (is_metric && data.task != Task::classification) throw UsageError("metric kinds need a classification dataset");
  if (tune_threshold && !is_metric) throw UsageError("threshold tuning applies to confusion-matrix metrics only");
  if (opts.bias_correct) throw UsageError("bias correction is not available for nested tuning");

  std::vector<ModelSpec> specs = candidates;
  std::set<std::string> ids;
  for (auto& s : specs) {
    if (s.id.empty()) s.id = s.describe(data.feature_names);
    if (!ids.insert(s.id).second) throw UsageError("duplicate candidate id: " + s.id);
  }

  const NestedPlan nested = make_nested(outer, inner_k, seed);
  const std::size_t splits = outer.splits.size();
  NestedResult res;
  res.inner_k = inner_k;
  res.tune_threshold = tune_threshold;
  res.choices.resize(splits);
  std::vector<std::vector<double>> outer_values(splits);
  std::vector<double> outer_thresholds(splits, 0.5);

  parallel_for(splits, opts.parallel, [&](std::size_t s) {
    const InnerPlan& inner = nested.inner[s];
    const Split& split = outer.splits[s];
    const Dataset sub = data.subset(inner.to_original);
    const InnerChoice pick = choose_inner(specs, sub, inner.plan, kind, tune_threshold, opts);
    const ModelSpec& chosen = specs[pick.candidate];

    NestedSplitChoice& out = res.choices[s];
    out.split = s;
    out.chosen_id = chosen.id;
    out.threshold = pick.threshold;
    out.inner_score = pick.score;
    out.inner_rows = inner.to_original;
    std::sort(out.inner_rows.begin(), out.inner_rows.end());

    std::unique_ptr<FittedModel> fit;
    try {
      fit = fit_model(chosen, data, split.train);
    } catch (const FitError& e) {
      throw FitError("model '" + chosen.id + "' failed on outer split " + std::to_string(s) + ": " + e.what());
    }
    auto& values = outer_values[s];
    values.resize(split.test.size());
    for (std::size_t j = 0; j < split.test.size(); ++j) {
      const Prediction p = fit->predict(data, split.test[j]);
      if (is_metric) {
        values[j] = p.prob;
      } else {
        values[j] = pointwise_loss(std::get<LossKind>(kind), data.response[static_cast<Eigen::Index>(split.test[j])], p);
      }
    }
    if (is_metric) outer_thresholds[s] = pick.threshold.value_or(opts.threshold.value_or(chosen.threshold));
  });

  // Leakage audit: nothing an inner computation touched may be an outer test row.
  for (std::size_t s = 0; s < splits; ++s) {
    const auto& rows = res.choices[s].inner_rows;
    for (std::size_t t : outer.splits[s].test) {
      if (std::binary_search(rows.begin(), rows.end(), t)) {
        throw std::logic_error("nested CV leakage: outer test row " + std::to_string(t) + " reached the inner layer of split " + std::to_string(s));
      }
    }
  }
  res.leakage_audited = true;

  if (is_metric) {
    const std::span<const double> labels(data.response.data(), data.n());
    const auto metric = std::get<MetricKind>(kind);
    res.outer = summarise_metric(outer, aggregate_metric(outer_values, labels, outer, outer_thresholds, metric), metric);
  } else {
    res.outer = summarise_losses(outer, outer_values, std::get<LossKind>(kind));
  }
  std::ostringstream id;
  id << "nested[";
  for (std::size_t i = 0; i < specs.size(); ++i) id << (i ? "," : "") << specs[i].id;
  id << "]";
  res.outer.model_id = id.str();
  res.outer.fit_count = splits;
  return res;
}

std::string_view to_string(LambdaRule r) noexcept {
  return r == LambdaRule::best ? "best" : "one_se";
}

LambdaRule parse_lambda_rule(std::string_view name) {
  if (name == "best") return LambdaRule::best;
  if (name == "one_se" || name == "one-se" || name == "1se") return LambdaRule::one_se;
  throw UsageError("unknown lambda rule: " + std::string(name) + " (expected best or one_se)");
}

LambdaTuning tune_lambda(const Dataset& data, std::span<const std::size_t> features, double alpha, Objective objective,
                         const FoldPlan& plan, const ScoreKind& kind, std::size_t n_lambda, const EngineOptions& opts) {
  const std::vector<std::size_t> rows = all_rows(data.n());
  const LambdaPath path = lambda_path(data, rows, features, alpha, n_lambda);
  LambdaTuning out;
  out.alpha = alpha;
  out.objective = objective;
  out.alpha_surrogate = path.alpha_surrogate;
  out.lambdas = path.lambdas;

  std::vector<ScoreEntry> entries;
  for (double lambda : path.lambdas) {
    ModelSpec spec;
    spec.family = Family::elastic_net;
    spec.features.assign(features.begin(), features.end());
    spec.objective = objective;
    spec.enet.alpha = alpha;
    spec.enet.lambda = lambda;
    std::ostringstream id;
    id.precision(17);
    id << "enet[alpha=" << alpha << ",lambda=" << lambda << "]";
    spec.id = id.str();
    ScoreEstimate est = cv_estimate(spec, data, plan, kind, opts);
    out.scores.push_back(est);
    out.nonzero.push_back(fit_elastic_net(data, rows, features, spec.enet, objective).nonzero());
    entries.push_back({spec.id, std::move(est), 0});
  }

  const ScoreTable table = make_table(std::move(entries));
  out.best_index = table.best_index();
  out.sigma_diff = sigma_diff(table);
  const Orientation o = table.orientation();
  const double best_u = utility(out.scores[out.best_index].mean, o);
  // The grid descends, so the first lambda within reach is the largest one.
  for (std::size_t l = 0; l < out.lambdas.size(); ++l) {
    if (best_u - utility(out.scores[l].mean, o) <= out.sigma_diff[l]) {
      out.one_se_index = l;
      break;
    }
  }
  return out;
}

}  // namespace cvselect
