#include "cvselect/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "cvselect/data.hpp"
#include "cvselect/engine.hpp"
#include "cvselect/error.hpp"
#include "cvselect/models.hpp"
#include "cvselect/rng.hpp"
#include "cvselect/selection.hpp"
#include "cvselect/splitters.hpp"

namespace cvselect {

namespace {

// Stream ids that keep the different random inputs of one replicate apart.
constexpr std::uint64_t kTrainStream = 1;
constexpr std::uint64_t kTestStream = 2;
constexpr std::uint64_t kPlanStream = 3;
constexpr std::uint64_t kEvalStream = 4;

const std::vector<std::string> kNames = {"bias-variance", "k-bias", "repeat-vs-k", "consistency", "ose"};

double mean_of(std::span<const double> v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); }

double sd_of(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

double mc_se(std::span<const double> v) { return sd_of(v) / std::sqrt(static_cast<double>(v.size())); }

double binomial_se(double f, std::size_t reps) { return std::sqrt(f * (1.0 - f) / static_cast<double>(reps)); }

std::vector<double> difference(std::span<const double> a, std::span<const double> b) {
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  return d;
}

/// Jackknife standard error of a statistic of the replicate sample.
template <typename Stat>
double jackknife_se(std::size_t reps, Stat leave_out) {
  std::vector<double> theta(reps);
  for (std::size_t r = 0; r < reps; ++r) theta[r] = leave_out(r);
  const double m = mean_of(theta);
  double ss = 0.0;
  for (double t : theta) ss += (t - m) * (t - m);
  return std::sqrt(ss * static_cast<double>(reps - 1) / static_cast<double>(reps));
}

/// Sample variance of the replicate values and its jackknife se.
std::pair<double, double> variance_with_se(std::span<const double> v) {
  const std::size_t r = v.size();
  double s1 = 0.0, s2 = 0.0;
  for (double x : v) {
    s1 += x;
    s2 += x * x;
  }
  auto var_of = [](double a1, double a2, double k) { return (a2 - a1 * a1 / k) / (k - 1.0); };
  const double var = var_of(s1, s2, static_cast<double>(r));
  const double se = jackknife_se(r, [&](std::size_t i) { return var_of(s1 - v[i], s2 - v[i] * v[i], static_cast<double>(r - 1)); });
  return {var, se};
}

std::vector<std::size_t> first_features(std::size_t j) {
  std::vector<std::size_t> f(j);
  std::iota(f.begin(), f.end(), 0);
  return f;
}

std::size_t active_count(const std::vector<double>& beta) {
  std::size_t k = 0;
  while (k < beta.size() && beta[k] != 0.0) ++k;
  for (std::size_t j = k; j < beta.size(); ++j) {
    if (beta[j] != 0.0) throw UsageError("experiments need the active coefficients first in beta (nested models)");
  }
  return k;
}

/// Noise of a simulated dataset, recovered as y - X beta.
Eigen::VectorXd noise_of(const Dataset& d, const std::vector<double>& beta) {
  const Eigen::Map<const Eigen::VectorXd> b(beta.data(), static_cast<Eigen::Index>(beta.size()));
  return d.response - d.features * b;
}

/// Test mean squared error of an OLS fit on a large independent sample.
double test_mse(const OlsModel& fit, const Dataset& test) {
  Eigen::VectorXd yhat = Eigen::VectorXd::Constant(test.response.size(), fit.coef[0]);
  for (std::size_t j = 0; j < fit.features.size(); ++j) {
    yhat += fit.coef[static_cast<Eigen::Index>(j + 1)] * test.features.col(static_cast<Eigen::Index>(fit.features[j]));
  }
  return (test.response - yhat).squaredNorm() / static_cast<double>(test.response.size());
}

void add(ExperimentReport& rep, std::string cell, std::string stat, double mean, double se) {
  if (!std::isfinite(mean) || !std::isfinite(se)) throw FitError("experiment produced a non-finite " + stat + " in cell " + cell);
  rep.cells.push_back({std::move(cell), std::move(stat), mean, se});
}

void add_mean(ExperimentReport& rep, const std::string& cell, const std::string& stat, const std::vector<double>& v) {
  add(rep, cell, stat, mean_of(v), mc_se(v));
  if (rep.config.keep_raw) rep.raw[cell + "/" + stat] = v;
}

/// |mean a| - |mean b| with the paired se of a - b.
void add_gap(ExperimentReport& rep, const std::string& cell, const std::vector<double>& a, const std::vector<double>& b) {
  const auto d = difference(a, b);
  add(rep, cell, "abs_bias_gap", std::abs(mean_of(a)) - std::abs(mean_of(b)), mc_se(d));
  add(rep, cell, "bias_difference", mean_of(d), mc_se(d));
}

std::string k_label(std::size_t k, std::size_t n) { return k == n ? "LOO" : "K=" + std::to_string(k); }

ModelSpec ols_spec(std::size_t j) {
  ModelSpec s;
  s.family = Family::ols;
  s.features = first_features(j);
  s.id = "ols" + std::to_string(j);
  return s;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (std::find(kNames.begin(), kNames.end(), name) == kNames.end()) throw UsageError("unknown experiment: " + name);
  if (replicates < 3) throw UsageError("experiments need at least 3 replicates");
  if (!(sigma > 0.0)) throw UsageError("experiment sigma must be positive");
  if (beta.empty()) throw UsageError("experiment beta must not be empty");
  if (n < beta.size() + 3) throw UsageError("experiment n is too small for the generator");
  if (name == "bias-variance" && max_complexity > beta.size()) throw UsageError("max_complexity exceeds the number of generated features");
  if (name == "k-bias" && ks.empty()) throw UsageError("k-bias needs a K sweep");
  for (auto k : ks) {
    if (k == 1 || k > n) throw UsageError("K values must lie in [2, n] (0 means n)");
  }
  if (name == "repeat-vs-k" && (k < 2 || repeats < 1 || repeats * k > n)) throw UsageError("repeat-vs-k needs 2 <= K and R*K <= n");
  if (name == "consistency") {
    if (n_sweep.empty()) throw UsageError("consistency needs an n sweep");
    for (auto m : n_sweep) {
      if (m < 8 || m < beta.size() + 3) throw UsageError("consistency sample sizes are too small");
    }
    if (iterations < 1) throw UsageError("consistency needs at least one leave-d-out iteration");
  }
  if (test_size < 1000) throw UsageError("truth test set must have at least 1000 points");
  if (eval_points < 1) throw UsageError("need at least one evaluation point");
}

ExperimentConfig default_experiment_config(std::string_view name) {
  ExperimentConfig c;
  c.name = std::string(name);
  c.beta = {1.0, 0.5, 0.25, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0};
  if (name == "bias-variance") {
    c.max_complexity = 8;
  } else if (name == "k-bias") {
    c.beta = {1.0, 0.5, 0.25, 0.0, 0.0};
    c.ks = {2, 5, 10, 0};
  } else if (name == "repeat-vs-k") {
    c.beta = {1.0, 0.5, 0.25, 0.0, 0.0};
  } else if (name == "consistency") {
    c.beta = {1.0, 0.5, 0.0, 0.0, 0.0, 0.0};
    c.n_sweep = {100, 300, 1000};
  } else if (name == "ose") {
    c.replicates = 500;
  } else {
    std::string all;
    for (const auto& n : kNames) all += (all.empty() ? "" : ", ") + n;
    throw UsageError("unknown experiment '" + std::string(name) + "'; available: " + all);
  }
  return c;
}

std::vector<std::string> experiment_names() { return kNames; }

nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["name"] = c.name;
  j["replicates"] = c.replicates;
  j["n"] = c.n;
  j["beta"] = c.beta;
  j["sigma"] = c.sigma;
  j["seed"] = c.seed;
  j["max_complexity"] = c.max_complexity;
  j["ks"] = c.ks;
  j["repeats"] = c.repeats;
  j["k"] = c.k;
  j["n_sweep"] = c.n_sweep;
  j["iterations"] = c.iterations;
  j["test_size"] = c.test_size;
  j["eval_points"] = c.eval_points;
  j["keep_raw"] = c.keep_raw;
  return j;
}

ExperimentConfig experiment_config_from_json(std::string_view name, const nlohmann::json& j) {
  ExperimentConfig c = default_experiment_config(name);
  if (!j.is_object()) throw UsageError("experiment settings must be a JSON object");
  try {
    if (j.contains("replicates")) c.replicates = j.at("replicates").get<std::size_t>();
    if (j.contains("n")) c.n = j.at("n").get<std::size_t>();
    if (j.contains("beta")) c.beta = j.at("beta").get<std::vector<double>>();
    if (j.contains("sigma")) c.sigma = j.at("sigma").get<double>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("max_complexity")) c.max_complexity = j.at("max_complexity").get<std::size_t>();
    if (j.contains("ks")) c.ks = j.at("ks").get<std::vector<std::size_t>>();
    if (j.contains("repeats")) c.repeats = j.at("repeats").get<std::size_t>();
    if (j.contains("k")) c.k = j.at("k").get<std::size_t>();
    if (j.contains("n_sweep")) c.n_sweep = j.at("n_sweep").get<std::vector<std::size_t>>();
    if (j.contains("iterations")) c.iterations = j.at("iterations").get<std::size_t>();
    if (j.contains("test_size")) c.test_size = j.at("test_size").get<std::size_t>();
    if (j.contains("eval_points")) c.eval_points = j.at("eval_points").get<std::size_t>();
    if (j.contains("keep_raw")) c.keep_raw = j.at("keep_raw").get<bool>();
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("bad experiment setting: ") + e.what());
  }
  return c;
}

const ExperimentCell& ExperimentReport::at(std::string_view cell, std::string_view statistic) const {
  for (const auto& c : cells) {
    if (c.cell == cell && c.statistic == statistic) return c;
  }
  throw std::out_of_range("no cell " + std::string(cell) + "/" + std::string(statistic));
}

// ---------------------------------------------------------------- Box 3

ExperimentReport run_bias_variance(const ExperimentConfig& cfg) {
  cfg.validate();
  const std::size_t reps = cfg.replicates, cells = cfg.max_complexity + 1, pts = cfg.eval_points;
  const Eigen::Map<const Eigen::VectorXd> beta(cfg.beta.data(), static_cast<Eigen::Index>(cfg.beta.size()));

  Eigen::MatrixXd x_eval(static_cast<Eigen::Index>(pts), beta.size());
  Rng eval_rng(cfg.seed, kEvalStream);
  for (Eigen::Index i = 0; i < x_eval.rows(); ++i) {
    for (Eigen::Index j = 0; j < x_eval.cols(); ++j) x_eval(i, j) = eval_rng.normal();
  }
  const Eigen::VectorXd f_eval = x_eval * beta;

  // err[r][c][e] = yhat - f at evaluation point e; loss[r][c] = mean_e (yhat - y*)^2.
  std::vector<std::vector<std::vector<double>>> err(reps, std::vector<std::vector<double>>(cells, std::vector<double>(pts)));
  std::vector<std::vector<double>> loss(reps, std::vector<double>(cells));
  parallel_for(reps, cfg.parallel, [&](std::size_t r) {
    const std::uint64_t rs = derive_seed(cfg.seed, r);
    const Dataset d = simulate_linear_gaussian(cfg.n, cfg.beta, cfg.sigma, derive_seed(rs, kTrainStream));
    Rng noise(rs, kTestStream);
    std::vector<double> y_star(pts);
    for (std::size_t e = 0; e < pts; ++e) y_star[e] = f_eval[static_cast<Eigen::Index>(e)] + cfg.sigma * noise.normal();
    const auto rows = all_rows(d.n());
    for (std::size_t c = 0; c < cells; ++c) {
      const OlsModel fit = fit_ols(d, rows, first_features(c));
      double l = 0.0;
      for (std::size_t e = 0; e < pts; ++e) {
        const auto ei = static_cast<Eigen::Index>(e);
        double yhat = fit.coef[0];
        for (std::size_t j = 0; j < c; ++j) yhat += fit.coef[static_cast<Eigen::Index>(j + 1)] * x_eval(ei, static_cast<Eigen::Index>(j));
        err[r][c][e] = yhat - f_eval[ei];
        l += (yhat - y_star[e]) * (yhat - y_star[e]);
      }
      loss[r][c] = l / static_cast<double>(pts);
    }
  });

  ExperimentReport rep;
  rep.experiment = cfg.name;
  rep.config = cfg;
  const double k = static_cast<double>(reps);
  const double s2 = cfg.sigma * cfg.sigma;
  for (std::size_t c = 0; c < cells; ++c) {
    const std::string cell = "p=" + std::to_string(c);
    std::vector<double> s1(pts, 0.0), sq(pts, 0.0);
    for (std::size_t r = 0; r < reps; ++r) {
      for (std::size_t e = 0; e < pts; ++e) {
        s1[e] += err[r][c][e];
        sq[e] += err[r][c][e] * err[r][c][e];
      }
    }
    // Unbiased squared bias and variance per point from the replicate sums.
    auto stats = [&](std::size_t skip) {
      const double m = skip < reps ? k - 1.0 : k;
      double b2 = 0.0, var = 0.0;
      for (std::size_t e = 0; e < pts; ++e) {
        double a1 = s1[e], a2 = sq[e];
        if (skip < reps) {
          a1 -= err[skip][c][e];
          a2 -= err[skip][c][e] * err[skip][c][e];
        }
        const double mean = a1 / m;
        const double v = (a2 - m * mean * mean) / (m - 1.0);
        b2 += mean * mean - v / m;
        var += v;
      }
      return std::pair{b2 / static_cast<double>(pts), var / static_cast<double>(pts)};
    };
    const auto [bias2, variance] = stats(reps);
    add(rep, cell, "bias2", bias2, jackknife_se(reps, [&](std::size_t r) { return stats(r).first; }));
    add(rep, cell, "variance", variance, jackknife_se(reps, [&](std::size_t r) { return stats(r).second; }));

    std::vector<double> l(reps), resid(reps);
    for (std::size_t r = 0; r < reps; ++r) {
      double msd = 0.0;
      for (double v : err[r][c]) msd += v * v;
      l[r] = loss[r][c];
      resid[r] = loss[r][c] - msd / static_cast<double>(pts) - s2;
    }
    add_mean(rep, cell, "expected_loss", l);
    add(rep, cell, "irreducible", s2, 0.0);
    add_mean(rep, cell, "residual", resid);
  }
  return rep;
}

// ---------------------------------------------------------------- choice of K

namespace {

/// Per replicate: S_hat - S_true for each plan, with both sides adjusted by
/// control variates of known zero mean: the realised mean squared noise
/// minus sigma^2 on each side, and on the training side the noise-fit cross
/// term of the full fit. The bias estimate is unchanged while the Monte
/// Carlo noise from the particular noise draw largely cancels.
struct BiasDraw {
  std::vector<double> bias, bias_corrected, bias_raw, estimate;
};

template <typename MakePlans>
std::vector<BiasDraw> bias_draws(const ExperimentConfig& cfg, std::size_t plans, MakePlans make_plans) {
  std::vector<BiasDraw> out(plans);
  for (auto& d : out) {
    d.bias.resize(cfg.replicates);
    d.bias_corrected.resize(cfg.replicates);
    d.bias_raw.resize(cfg.replicates);
    d.estimate.resize(cfg.replicates);
  }
  const ModelSpec model = ols_spec(cfg.beta.size());
  const double s2 = cfg.sigma * cfg.sigma;
  parallel_for(cfg.replicates, cfg.parallel, [&](std::size_t r) {
    const std::uint64_t rs = derive_seed(cfg.seed, r);
    const Dataset train = simulate_linear_gaussian(cfg.n, cfg.beta, cfg.sigma, derive_seed(rs, kTrainStream));
    const Dataset test = simulate_linear_gaussian(cfg.test_size, cfg.beta, cfg.sigma, derive_seed(rs, kTestStream));
    const OlsModel full = fit_ols(train, all_rows(train.n()), model.features);
    const double s_true = test_mse(full, test);
    const Eigen::VectorXd eps = noise_of(train, cfg.beta);
    const double nt = static_cast<double>(train.n());
    // Cross term 2/n eps'(mu - yhat) of the full fit; its expectation is
    // -2 sigma^2 tr(H) / n, so the shifted term has mean zero.
    const double cross = 2.0 * eps.dot(full.residuals - eps) / nt + 2.0 * s2 * static_cast<double>(full.coef.size()) / nt;
    const double train_noise = eps.squaredNorm() / nt - s2 + cross;
    const double test_noise = noise_of(test, cfg.beta).squaredNorm() / static_cast<double>(test.n()) - s2;
    const std::vector<FoldPlan> ps = make_plans(train.n(), derive_seed(rs, kPlanStream));
    EngineOptions opts;
    opts.bias_correct = true;
    for (std::size_t p = 0; p < plans; ++p) {
      const ScoreEstimate est = cv_score(model, train, ps[p], LossKind::squared_error, opts);
      out[p].estimate[r] = est.mean;
      out[p].bias_raw[r] = est.mean - s_true;
      out[p].bias[r] = (est.mean - train_noise) - (s_true - test_noise);
      out[p].bias_corrected[r] = (*est.corrected_mean - train_noise) - (s_true - test_noise);
    }
  });
  return out;
}

}  // namespace

ExperimentReport run_k_bias_study(const ExperimentConfig& cfg) {
  cfg.validate();
  std::vector<std::size_t> ks;
  for (auto k : cfg.ks) ks.push_back(k == 0 ? cfg.n : k);
  const auto draws = bias_draws(cfg, ks.size(), [&](std::size_t n, std::uint64_t seed) {
    std::vector<FoldPlan> ps;
    for (std::size_t i = 0; i < ks.size(); ++i) ps.push_back(ks[i] == n ? make_loo(n) : make_kfold(n, ks[i], derive_seed(seed, i)));
    return ps;
  });
  ExperimentReport rep;
  rep.experiment = cfg.name;
  rep.config = cfg;
  for (std::size_t i = 0; i < ks.size(); ++i) {
    const std::string cell = k_label(ks[i], cfg.n);
    add_mean(rep, cell, "bias", draws[i].bias);
    add_mean(rep, cell, "bias_corrected", draws[i].bias_corrected);
    add_mean(rep, cell, "bias_raw", draws[i].bias_raw);
    add_mean(rep, cell, "estimate", draws[i].estimate);
  }
  for (std::size_t i = 0; i + 1 < ks.size(); ++i) {
    add_gap(rep, k_label(ks[i], cfg.n) + " vs " + k_label(ks[i + 1], cfg.n), draws[i].bias, draws[i + 1].bias);
  }
  for (std::size_t i = 0; i < ks.size(); ++i) {
    for (std::size_t j = 0; j < ks.size(); ++j) {
      if (i == j) continue;
      add_gap(rep, k_label(ks[i], cfg.n) + " corrected vs " + k_label(ks[j], cfg.n), draws[i].bias_corrected, draws[j].bias);
    }
  }
  for (std::size_t i = 0; i < ks.size(); ++i) {
    add_gap(rep, k_label(ks[i], cfg.n) + " uncorrected vs corrected", draws[i].bias, draws[i].bias_corrected);
  }
  return rep;
}

ExperimentReport run_repeat_vs_large_k(const ExperimentConfig& cfg) {
  cfg.validate();
  const std::size_t big = cfg.repeats * cfg.k;
  const auto draws = bias_draws(cfg, 2, [&](std::size_t n, std::uint64_t seed) {
    return std::vector<FoldPlan>{make_repeated_kfold(n, cfg.k, cfg.repeats, derive_seed(seed, 0)),
                                 big == n ? make_loo(n) : make_kfold(n, big, derive_seed(seed, 1))};
  });
  ExperimentReport rep;
  rep.experiment = cfg.name;
  rep.config = cfg;
  const std::string names[2] = {std::to_string(cfg.repeats) + "x" + std::to_string(cfg.k) + "-fold", std::to_string(big) + "-fold"};
  for (int i = 0; i < 2; ++i) {
    add_mean(rep, names[i], "bias", draws[i].bias);
    add_mean(rep, names[i], "bias_raw", draws[i].bias_raw);
    const auto [v, se] = variance_with_se(draws[i].estimate);
    add(rep, names[i], "variance", v, se);
    const auto [ve, see] = variance_with_se(draws[i].bias_raw);
    add(rep, names[i], "error_variance", ve, see);
  }
  add_gap(rep, names[0] + " vs " + names[1], draws[0].bias, draws[1].bias);
  return rep;
}

// ---------------------------------------------------------------- Box 2

ExperimentReport run_consistency_demo(const ExperimentConfig& cfg) {
  cfg.validate();
  const std::size_t truth = active_count(cfg.beta);
  const std::size_t models = cfg.beta.size() + 1;
  ExperimentReport rep;
  rep.experiment = cfg.name;
  rep.config = cfg;
  for (std::size_t ni = 0; ni < cfg.n_sweep.size(); ++ni) {
    const std::size_t n = cfg.n_sweep[ni];
    const std::size_t d = consistent_d(n);
    if (n - d < models + 1) throw UsageError("leave-d_c-out training sets (" + std::to_string(n - d) + " rows) are too small for the candidate models at n = " + std::to_string(n));
    std::vector<double> loo_hit(cfg.replicates), ldo_hit(cfg.replicates), loo_over(cfg.replicates), ldo_over(cfg.replicates);
    parallel_for(cfg.replicates, cfg.parallel, [&](std::size_t r) {
      const std::uint64_t rs = derive_seed(derive_seed(cfg.seed, ni), r);
      const Dataset data = simulate_linear_gaussian(n, cfg.beta, cfg.sigma, derive_seed(rs, kTrainStream));
      const FoldPlan plan = make_leave_d_out(n, d, cfg.iterations, derive_seed(rs, kPlanStream));
      std::vector<double> loo(models), ldo(models, 0.0);
      for (std::size_t j = 0; j < models; ++j) {
        const auto feats = first_features(j);
        loo[j] = hat_loo(data, feats).mean;
        for (const auto& split : plan.splits) {
          const OlsModel fit = fit_ols(data, split.train, feats);
          double ss = 0.0;
          for (auto i : split.test) {
            const double e = data.response[static_cast<Eigen::Index>(i)] - fit.predict(data, i).mean;
            ss += e * e;
          }
          ldo[j] += ss / static_cast<double>(split.test.size());
        }
      }
      const auto pick_loo = static_cast<std::size_t>(std::min_element(loo.begin(), loo.end()) - loo.begin());
      const auto pick_ldo = static_cast<std::size_t>(std::min_element(ldo.begin(), ldo.end()) - ldo.begin());
      loo_hit[r] = pick_loo == truth ? 1.0 : 0.0;
      ldo_hit[r] = pick_ldo == truth ? 1.0 : 0.0;
      loo_over[r] = pick_loo > truth ? 1.0 : 0.0;
      ldo_over[r] = pick_ldo > truth ? 1.0 : 0.0;
    });
    const std::string cell = "n=" + std::to_string(n);
    auto freq = [&](const std::string& stat, const std::vector<double>& v) {
      const double f = mean_of(v);
      add(rep, cell, stat, f, binomial_se(f, cfg.replicates));
    };
    add(rep, cell, "d", static_cast<double>(d), 0.0);
    freq("loo_true_freq", loo_hit);
    freq("ldo_true_freq", ldo_hit);
    freq("loo_overfit_freq", loo_over);
    freq("ldo_overfit_freq", ldo_over);
  }
  return rep;
}

// ---------------------------------------------------------------- OSE

ExperimentReport run_ose_study(const ExperimentConfig& cfg) {
  cfg.validate();
  const std::size_t truth = active_count(cfg.beta);
  const std::size_t models = cfg.beta.size() + 1;
  const Rule rules[] = {Rule::best_score, Rule::ose_modified, Rule::ose_diff};
  std::vector<std::vector<double>> chosen(3, std::vector<double>(cfg.replicates));
  std::vector<ModelSpec> specs;
  for (std::size_t j = 0; j < models; ++j) specs.push_back(ols_spec(j));
  parallel_for(cfg.replicates, cfg.parallel, [&](std::size_t r) {
    const std::uint64_t rs = derive_seed(cfg.seed, r);
    const Dataset data = simulate_linear_gaussian(cfg.n, cfg.beta, cfg.sigma, derive_seed(rs, kTrainStream));
    const FoldPlan plan = make_kfold(cfg.n, 10, derive_seed(rs, kPlanStream));
    const ScoreTable table = score_table(specs, data, plan, LossKind::squared_error);
    for (std::size_t k = 0; k < 3; ++k) {
      const std::string id = select(table, rules[k]).selected_id;
      chosen[k][r] = static_cast<double>(std::stoul(id.substr(3)));
    }
  });
  ExperimentReport rep;
  rep.experiment = cfg.name;
  rep.config = cfg;
  std::vector<double> superset(3);
  for (std::size_t k = 0; k < 3; ++k) {
    const std::string cell(to_string(rules[k]));
    std::vector<double> over(cfg.replicates), hit(cfg.replicates);
    for (std::size_t r = 0; r < cfg.replicates; ++r) {
      over[r] = chosen[k][r] > static_cast<double>(truth) ? 1.0 : 0.0;
      hit[r] = chosen[k][r] == static_cast<double>(truth) ? 1.0 : 0.0;
    }
    superset[k] = mean_of(over);
    add(rep, cell, "superset_freq", superset[k], binomial_se(superset[k], cfg.replicates));
    const double h = mean_of(hit);
    add(rep, cell, "true_freq", h, binomial_se(h, cfg.replicates));
    add_mean(rep, cell, "selected_features", chosen[k]);
  }
  for (std::size_t k = 1; k < 3; ++k) {
    const double se = std::hypot(binomial_se(superset[0], cfg.replicates), binomial_se(superset[k], cfg.replicates));
    add(rep, "best_score vs " + std::string(to_string(rules[k])), "superset_freq_gap", superset[0] - superset[k], se);
  }
  return rep;
}

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  if (cfg.name == "bias-variance") return run_bias_variance(cfg);
  if (cfg.name == "k-bias") return run_k_bias_study(cfg);
  if (cfg.name == "repeat-vs-k") return run_repeat_vs_large_k(cfg);
  if (cfg.name == "consistency") return run_consistency_demo(cfg);
  if (cfg.name == "ose") return run_ose_study(cfg);
  default_experiment_config(cfg.name);  // throws with the list of names
  return {};
}

void write_tidy_csv(const ExperimentReport& report, std::ostream& out) {
  const auto old = out.precision(17);
  out << "experiment,cell,statistic,mean,se\n";
  for (const auto& c : report.cells) out << report.experiment << ',' << c.cell << ',' << c.statistic << ',' << c.mean << ',' << c.se << '\n';
  out.precision(old);
}

}  // namespace cvselect
