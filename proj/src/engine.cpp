#include "cvselect/engine.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <numeric>
#include <thread>

#include "cvselect/error.hpp"

namespace cvselect {

void parallel_for(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& body) {
  if (workers <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
      try {
        body(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  const std::size_t threads = std::min(workers, count);
  pool.reserve(threads);
  for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::string_view to_string(SeMethod m) noexcept {
  switch (m) {
    case SeMethod::pointwise:
      return "pointwise";
    case SeMethod::repetition:
      return "repetition";
    case SeMethod::none:
      return "none";
  }
  return "?";
}

const std::vector<double>& ScoreEstimate::paired_values() const {
  if (pointwise) return *pointwise;
  if (per_repetition) return *per_repetition;
  throw UsageError("score estimate for '" + model_id + "' carries no loss vector");
}

namespace {

double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sd_of(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

std::span<const double> labels_of(const Dataset& data) {
  return {data.response.data(), data.n()};
}

void require_classification(const Dataset& data, MetricKind kind) {
  if (data.task != Task::classification) {
    throw UsageError("metric '" + std::string(to_string(kind)) + "' needs a classification dataset");
  }
}

const Prediction& test_cell(const PredictionGrid& grid, const FoldPlan& plan, std::size_t s, std::size_t j) {
  return grid.complete ? grid.cells[s][plan.splits[s].test[j]] : grid.cells[s][j];
}

std::vector<std::vector<double>> split_probabilities(const PredictionGrid& grid, const FoldPlan& plan, const std::string& id) {
  std::vector<std::vector<double>> probs(plan.splits.size());
  for (std::size_t s = 0; s < plan.splits.size(); ++s) {
    const auto& test = plan.splits[s].test;
    probs[s].resize(test.size());
    for (std::size_t j = 0; j < test.size(); ++j) {
      const double p = test_cell(grid, plan, s, j).prob;
      if (std::isnan(p)) throw UsageError("model '" + id + "' does not predict class probabilities");
      probs[s][j] = p;
    }
  }
  return probs;
}

std::vector<std::vector<double>> split_losses(const PredictionGrid& grid, const FoldPlan& plan, const Dataset& data,
                                              LossKind kind) {
  std::vector<std::vector<double>> out(plan.splits.size());
  for (std::size_t s = 0; s < plan.splits.size(); ++s) {
    const auto& test = plan.splits[s].test;
    out[s].resize(test.size());
    for (std::size_t j = 0; j < test.size(); ++j) {
      out[s][j] = pointwise_loss(kind, data.response[static_cast<Eigen::Index>(test[j])], test_cell(grid, plan, s, j));
    }
  }
  return out;
}

void check_plan_matches(const FoldPlan& plan, const Dataset& data) {
  if (plan.n != data.n()) {
    throw UsageError("plan is for n = " + std::to_string(plan.n) + " but the dataset has n = " + std::to_string(data.n()));
  }
}

}  // namespace

PredictionGrid predict_grid(const ModelSpec& model, const Dataset& data, const FoldPlan& plan, bool complete,
                            std::size_t parallel) {
  check_plan_matches(plan, data);
  PredictionGrid grid;
  grid.complete = complete;
  grid.cells.resize(plan.splits.size());
  parallel_for(plan.splits.size(), parallel, [&](std::size_t s) {
    const Split& split = plan.splits[s];
    std::unique_ptr<FittedModel> fit;
    try {
      fit = fit_model(model, data, split.train);
    } catch (const FitError& e) {
      throw FitError("model '" + model.id + "' failed on split " + std::to_string(s) + ": " + e.what());
    }
    auto& row = grid.cells[s];
    if (complete) {
      row.resize(data.n());
      for (std::size_t i = 0; i < data.n(); ++i) row[i] = fit->predict(data, i);
    } else {
      row.resize(split.test.size());
      for (std::size_t j = 0; j < split.test.size(); ++j) row[j] = fit->predict(data, split.test[j]);
    }
  });
  return grid;
}

ScoreEstimate summarise_losses(const FoldPlan& plan, const std::vector<std::vector<double>>& losses, LossKind kind) {
  ScoreEstimate est;
  est.kind = kind;
  est.plan_fingerprint = plan.fingerprint();
  if (plan.tests_each_index_at_most_once()) {
    std::vector<std::pair<std::size_t, double>> cells;
    for (std::size_t s = 0; s < plan.splits.size(); ++s) {
      for (std::size_t j = 0; j < plan.splits[s].test.size(); ++j) cells.emplace_back(plan.splits[s].test[j], losses[s][j]);
    }
    std::sort(cells.begin(), cells.end());
    std::vector<double> values(cells.size());
    est.pointwise_index.resize(cells.size());
    for (std::size_t j = 0; j < cells.size(); ++j) {
      est.pointwise_index[j] = cells[j].first;
      values[j] = cells[j].second;
    }
    est.mean = mean_of(values);
    est.se = sd_of(values) / std::sqrt(static_cast<double>(values.size()));
    est.se_method = SeMethod::pointwise;
    est.pointwise = std::move(values);
    return est;
  }
  std::map<std::size_t, std::pair<double, std::size_t>> sums;
  for (std::size_t s = 0; s < plan.splits.size(); ++s) {
    auto& [sum, count] = sums[plan.splits[s].repetition];
    for (double v : losses[s]) sum += v;
    count += losses[s].size();
  }
  std::vector<double> reps;
  reps.reserve(sums.size());
  for (const auto& [r, sc] : sums) reps.push_back(sc.first / static_cast<double>(sc.second));
  est.mean = mean_of(reps);
  est.se = sd_of(reps);
  est.se_method = SeMethod::repetition;
  est.per_repetition = std::move(reps);
  return est;
}

ScoreEstimate summarise_metric(const FoldPlan& plan, std::vector<double> per_repetition, MetricKind kind) {
  ScoreEstimate est;
  est.kind = kind;
  est.plan_fingerprint = plan.fingerprint();
  est.mean = mean_of(per_repetition);
  est.se = sd_of(per_repetition);
  est.se_method = per_repetition.size() > 1 ? SeMethod::repetition : SeMethod::none;
  est.per_repetition = std::move(per_repetition);
  return est;
}

ScoreEstimate cv_score(const ModelSpec& model, const Dataset& data, const FoldPlan& plan, LossKind kind,
                       const EngineOptions& opts) {
  const PredictionGrid grid = predict_grid(model, data, plan, opts.bias_correct, opts.parallel);
  ScoreEstimate est = summarise_losses(plan, split_losses(grid, plan, data, kind), kind);
  est.model_id = model.id;
  est.fit_count = plan.splits.size();
  if (opts.bias_correct) {
    const auto full = fit_model(model, data, all_rows(data.n()));
    ++est.fit_count;
    est.kappa = bias_correct(grid, data, kind, *full);
    est.corrected_mean = est.mean + *est.kappa;
  }
  return est;
}

ScoreEstimate cv_metric(const ModelSpec& model, const Dataset& data, const FoldPlan& plan, MetricKind kind,
                        const EngineOptions& opts) {
  require_classification(data, kind);
  if (opts.bias_correct) throw UsageError("bias correction needs a pointwise loss, not metric '" + std::string(to_string(kind)) + "'");
  const PredictionGrid grid = predict_grid(model, data, plan, false, opts.parallel);
  const double c = opts.threshold.value_or(model.threshold);
  ScoreEstimate est = summarise_metric(plan, aggregate_metric(split_probabilities(grid, plan, model.id), labels_of(data), plan, c, kind), kind);
  est.model_id = model.id;
  est.fit_count = plan.splits.size();
  return est;
}

ScoreEstimate cv_estimate(const ModelSpec& model, const Dataset& data, const FoldPlan& plan, const ScoreKind& kind,
                          const EngineOptions& opts) {
  if (const auto* loss = std::get_if<LossKind>(&kind)) return cv_score(model, data, plan, *loss, opts);
  return cv_metric(model, data, plan, std::get<MetricKind>(kind), opts);
}

double bias_correct(const PredictionGrid& grid, const Dataset& data, LossKind kind, const FittedModel& within_sample_fit) {
  if (!grid.complete || grid.cells.empty()) throw UsageError("bias correction needs a complete prediction grid");
  const std::size_t n = data.n();
  for (const auto& row : grid.cells) {
    if (row.size() != n) throw UsageError("bias correction needs a complete prediction grid");
  }
  const auto splits = static_cast<double>(grid.cells.size());
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double y = data.response[static_cast<Eigen::Index>(i)];
    double fold_mean = 0.0;
    for (const auto& row : grid.cells) fold_mean += pointwise_loss(kind, y, row[i]);
    total += pointwise_loss(kind, y, within_sample_fit.predict(data, i)) - fold_mean / splits;
  }
  return total / static_cast<double>(n);
}

double effective_params(const Dataset& data, const ModelSpec& model, const FoldPlan& plan, std::size_t parallel) {
  check_plan_matches(plan, data);
  std::size_t tested = 0;
  for (const auto& s : plan.splits) tested += s.test.size();
  if (!plan.tests_each_index_at_most_once() || tested != data.n()) {
    throw UsageError("effective parameters need a plan that tests every datum exactly once");
  }
  const LossKind kind = data.task == Task::regression ? LossKind::gaussian_log_density : LossKind::log_loss;
  const PredictionGrid grid = predict_grid(model, data, plan, false, parallel);
  double lpd_cv = 0.0;
  for (const auto& v : split_losses(grid, plan, data, kind)) lpd_cv += std::accumulate(v.begin(), v.end(), 0.0);
  const auto full = fit_model(model, data, all_rows(data.n()));
  double lpd_ws = 0.0;
  for (std::size_t i = 0; i < data.n(); ++i) lpd_ws += pointwise_loss(kind, data.response[static_cast<Eigen::Index>(i)], full->predict(data, i));
  return lpd_ws - lpd_cv;
}

namespace {

std::string loo_fingerprint(std::size_t n) {
  static std::mutex mu;
  static std::map<std::size_t, std::string> cache;
  std::lock_guard lock(mu);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, make_loo(n).fingerprint()).first;
  return it->second;
}

}  // namespace

ScoreEstimate hat_loo(const Dataset& data, std::span<const std::size_t> features) {
  const std::vector<std::size_t> rows = all_rows(data.n());
  const OlsModel fit = fit_ols(data, rows, features);
  std::vector<double> values(data.n());
  for (std::size_t i = 0; i < data.n(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    const double h = fit.hat[r];
    if (h > 1.0 - 1e-10) throw FitError("hat-matrix LOO: leverage h = 1 at index " + std::to_string(i) + " (the point determines its own fit)");
    const double d = fit.residuals[r] / (1.0 - h);
    values[i] = d * d;
  }
  ScoreEstimate est;
  est.kind = LossKind::squared_error;
  est.model_id = "ols";
  est.plan_fingerprint = loo_fingerprint(data.n());
  est.mean = mean_of(values);
  est.se = sd_of(values) / std::sqrt(static_cast<double>(values.size()));
  est.se_method = SeMethod::pointwise;
  est.pointwise_index = rows;
  est.pointwise = std::move(values);
  est.fit_count = 1;
  return est;
}

}  // namespace cvselect
