#include "cli.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "cvselect/data.hpp"
#include "cvselect/engine.hpp"
#include "cvselect/error.hpp"
#include "cvselect/experiments.hpp"
#include "cvselect/models.hpp"
#include "cvselect/report.hpp"
#include "cvselect/selection.hpp"
#include "cvselect/splitters.hpp"

namespace cvselect::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// Feature lists on the command line may mix names and indices.
json feature_list(const std::string& s) {
  json arr = json::array();
  for (const auto& item : split_list(s)) {
    if (!item.empty() && std::all_of(item.begin(), item.end(), [](unsigned char c) { return std::isdigit(c); })) {
      arr.push_back(std::stoul(item));
    } else {
      arr.push_back(item);
    }
  }
  return arr;
}

/// Flag values; unset optionals leave the config file untouched.
struct Flags {
  std::optional<std::string> config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> parallel;
  std::optional<std::string> out;

  // data
  std::optional<std::string> data, response, feature_columns, task, groups_column, strata_column, coord_columns;
  // plan
  std::optional<std::size_t> n, k, repeats, d, iterations;
  std::optional<double> h;
  std::optional<std::string> scheme, base;
  // model
  std::optional<std::string> family, features, objective, growth_function, sex_on, id;
  std::optional<double> alpha, lambda, threshold;
  bool group_intercepts = false;
  // scoring and selection
  std::optional<std::string> kind, rule;
  bool bias_correct = false, pointwise = false, effective_params = false, nested_models = false;
  // tuning
  bool nested = false, tune_threshold = false;
  std::optional<std::size_t> inner_k, n_lambda;
  // bench
  std::string experiment;
  std::optional<std::size_t> replicates;
};

json load_config(const Flags& f) {
  if (!f.config) return json::object();
  std::ifstream in(*f.config);
  if (!in) throw UsageError("cannot open config file " + *f.config);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw UsageError("config file " + *f.config + " is not valid JSON (byte " + std::to_string(e.byte) + ")");
  }
  if (!j.is_object()) throw UsageError("config file must hold a JSON object");
  return j;
}

/// Config file first, flags on top, seed always explicit.
json resolve(const Flags& f) {
  json c = load_config(f);
  auto set = [](json& node, const char* key, const auto& opt) {
    if (opt) node[key] = *opt;
  };
  json& data = c["data"];
  if (!data.is_object()) data = json::object();
  set(data, "path", f.data);
  set(data, "response", f.response);
  if (f.feature_columns) data["features"] = split_list(*f.feature_columns);
  set(data, "task", f.task);
  set(data, "groups", f.groups_column);
  set(data, "strata", f.strata_column);
  if (f.coord_columns) data["coords"] = split_list(*f.coord_columns);

  json& plan = c["plan"];
  if (!plan.is_object()) plan = json::object();
  set(plan, "scheme", f.scheme);
  set(plan, "n", f.n);
  set(plan, "k", f.k);
  set(plan, "repeats", f.repeats);
  set(plan, "d", f.d);
  set(plan, "iterations", f.iterations);
  set(plan, "h", f.h);
  set(plan, "base", f.base);

  set(c, "kind", f.kind);
  set(c, "rule", f.rule);
  if (f.bias_correct) c["bias_correct"] = true;
  set(c, "threshold", f.threshold);

  json& tune = c["tune"];
  if (!tune.is_object()) tune = json::object();
  if (f.nested) tune["nested"] = true;
  if (f.tune_threshold) tune["tune_threshold"] = true;
  set(tune, "inner_k", f.inner_k);
  set(tune, "n_lambda", f.n_lambda);

  if (f.seed) {
    c["seed"] = *f.seed;
  } else if (!c.contains("seed")) {
    std::uint64_t seed = 0;
    if (const char* env = std::getenv("CVSELECT_SEED"); env && *env) {
      char* end = nullptr;
      seed = std::strtoull(env, &end, 10);
      if (*end != '\0') throw UsageError(std::string("CVSELECT_SEED is not an integer: ") + env);
    }
    c["seed"] = seed;
  }
  if (!c.at("seed").is_number_unsigned() && !(c.at("seed").is_number_integer() && c.at("seed").get<long long>() >= 0)) {
    throw UsageError("seed must be a non-negative integer");
  }
  if (f.parallel) c["parallel"] = *f.parallel;
  if (!c.contains("parallel")) c["parallel"] = 1;
  if (f.out) c["out"] = *f.out;
  return c;
}

/// The resolved config as recorded in reports: output location and thread
/// count do not change results, so they are left out to keep reports
/// byte-identical across them.
json recorded(json c) {
  c.erase("parallel");
  c.erase("out");
  for (const char* key : {"data", "plan", "tune"}) {
    if (c.contains(key) && c.at(key).empty()) c.erase(key);
  }
  return c;
}

std::uint64_t seed_of(const json& c) { return c.at("seed").get<std::uint64_t>(); }

std::size_t parallel_of(const json& c) {
  const auto p = c.at("parallel").get<long long>();
  if (p < 1) throw UsageError("--parallel must be at least 1");
  return static_cast<std::size_t>(p);
}

template <typename T>
T get_or(const json& node, const char* key, T fallback) {
  if (!node.is_object() || !node.contains(key) || node.at(key).is_null()) return fallback;
  try {
    return node.at(key).get<T>();
  } catch (const json::exception&) {
    throw UsageError(std::string("config value '") + key + "' has the wrong type");
  }
}

std::optional<Dataset> load_data(const json& c) {
  const json& d = c.at("data");
  if (!d.contains("path")) return std::nullopt;
  const auto path = d.at("path").get<std::string>();
  if (path.rfind("demo:", 0) == 0) return demo_dataset(path.substr(5));
  if (!fs::exists(path)) throw UsageError("dataset file not found: " + path);
  CsvSchema schema;
  schema.response_column = get_or<std::string>(d, "response", "y");
  schema.feature_columns = get_or<std::vector<std::string>>(d, "features", {});
  if (d.contains("groups")) schema.group_column = d.at("groups").get<std::string>();
  if (d.contains("strata")) schema.strata_column = d.at("strata").get<std::string>();
  schema.coord_columns = get_or<std::vector<std::string>>(d, "coords", {});
  schema.task = parse_task(get_or<std::string>(d, "task", "regression"));
  return load_csv(path, schema);
}

Dataset require_data(const json& c) {
  auto d = load_data(c);
  if (!d) throw UsageError("no dataset: pass --data PATH or --data demo:NAME");
  return std::move(*d);
}

FoldPlan build_plan(const json& p, std::size_t n, const Dataset* data, std::uint64_t seed, const std::string& scheme) {
  const SchemeKind kind = parse_scheme(scheme);
  const std::size_t k = get_or<std::size_t>(p, "k", 10);
  switch (kind) {
    case SchemeKind::kfold:
      return make_kfold(n, k, seed);
    case SchemeKind::repeated_kfold:
      return make_repeated_kfold(n, k, get_or<std::size_t>(p, "repeats", 10), seed);
    case SchemeKind::loo:
      return make_loo(n);
    case SchemeKind::leave_d_out: {
      const std::size_t d = p.contains("d") ? p.at("d").get<std::size_t>() : consistent_d(n);
      return make_leave_d_out(n, d, get_or<std::size_t>(p, "iterations", 100), seed);
    }
    case SchemeKind::logo:
      if (!data || !data->groups) throw UsageError("scheme logo needs a dataset with --groups-column");
      return make_logo(*data->groups);
    case SchemeKind::stratified_kfold: {
      if (!data) throw UsageError("scheme stratified-kfold needs a dataset");
      if (data->strata) return make_stratified_kfold(n, k, *data->strata, seed);
      if (data->task != Task::classification) throw UsageError("scheme stratified-kfold needs --strata-column");
      std::vector<std::string> labels;
      for (Eigen::Index i = 0; i < data->response.size(); ++i) labels.push_back(data->response[i] == 1.0 ? "1" : "0");
      return make_stratified_kfold(n, k, labels, seed);
    }
    case SchemeKind::blocked: {
      if (!data || !data->coords) throw UsageError("scheme blocked needs a dataset with --coord-columns");
      const std::string base = get_or<std::string>(p, "base", "loo");
      if (parse_scheme(base) == SchemeKind::blocked) throw UsageError("blocked plans cannot wrap a blocked plan");
      return make_blocked(*data->coords, build_plan(p, n, data, seed, base), get_or<double>(p, "h", 0.0));
    }
  }
  throw UsageError("unknown scheme");
}

FoldPlan plan_for(const json& c, const Dataset& data) {
  const json& p = c.at("plan");
  if (p.contains("n") && p.at("n").get<std::size_t>() != data.n()) throw UsageError("--n does not match the dataset size");
  return build_plan(p, data.n(), &data, seed_of(c), get_or<std::string>(p, "scheme", "kfold"));
}

ScoreKind kind_for(const json& c, const Dataset& data) {
  if (c.contains("kind")) return parse_score_kind(c.at("kind").get<std::string>());
  return data.task == Task::regression ? ScoreKind{LossKind::squared_error} : ScoreKind{LossKind::log_loss};
}

json model_flags(const Flags& f, const Dataset& data) {
  json m;
  m["family"] = f.family.value_or(data.task == Task::classification ? "logistic" : "ols");
  if (f.id) m["id"] = *f.id;
  json hyper = json::object();
  if (f.alpha) hyper["alpha"] = *f.alpha;
  if (f.lambda) hyper["lambda"] = *f.lambda;
  if (f.objective) hyper["objective"] = *f.objective;
  if (f.threshold) hyper["threshold"] = *f.threshold;
  if (f.growth_function) hyper["function"] = *f.growth_function;
  if (f.sex_on) {
    json terms = json::array();
    for (char ch : *f.sex_on) terms.push_back(std::string(1, ch));
    hyper["sex_effect_on"] = terms;
  }
  if (f.group_intercepts) hyper["group_intercepts"] = true;
  if (!hyper.contains("objective") && m["family"] != "logistic" && data.task == Task::classification) hyper["objective"] = "logistic";
  m["hyperparameters"] = hyper;
  if (f.features) {
    m["features"] = feature_list(*f.features);
  } else if (m["family"] != "growth") {
    json all = json::array();
    for (std::size_t j = 0; j < data.p(); ++j) all.push_back(j);
    m["features"] = all;
  }
  return m;
}

bool model_flags_given(const Flags& f) {
  return f.family || f.features || f.alpha || f.lambda || f.objective || f.growth_function || f.sex_on || f.group_intercepts || f.id;
}

std::vector<ModelSpec> parse_models(const json& arr, const Dataset& data) {
  std::vector<ModelSpec> out;
  for (const auto& m : arr) {
    ModelSpec spec = model_spec_from_json(m, data.feature_names);
    spec.validate(data.p());
    if (spec.id.empty()) spec.id = spec.describe(data.feature_names);
    out.push_back(std::move(spec));
  }
  return out;
}

/// Nested sequence over the --features order (or all features): the first
/// 0, 1, ..., p features.
json nested_models(const Flags& f, const Dataset& data) {
  const json base = model_flags(f, data);
  const json feats = base.at("features");
  json arr = json::array();
  for (std::size_t j = 0; j <= feats.size(); ++j) {
    json m = base;
    m.erase("id");
    m["features"] = json(std::vector<json>(feats.begin(), feats.begin() + static_cast<std::ptrdiff_t>(j)));
    arr.push_back(m);
  }
  return arr;
}

struct Output {
  std::ostream& out;
  std::ostream& err;
  std::optional<fs::path> dir;

  void prepare(const json& config) {
    if (!dir) return;
    std::error_code ec;
    fs::create_directories(*dir, ec);
    if (ec) throw UsageError("cannot create output directory " + dir->string() + ": " + ec.message());
    write_text(serialize(recorded(config)), *dir / "config.json");
  }
  void emit(const std::string& file, const std::string& text) {
    if (dir) {
      write_text(text, *dir / file);
    } else {
      out << text;
    }
  }
};

void summary_line(std::ostream& err, const ScoreEstimate& e) {
  err << e.model_id << ": " << to_string(e.kind) << " = " << e.mean << " (se " << e.se << ", " << to_string(e.se_method) << ")";
  if (e.corrected_mean) err << ", bias-corrected " << *e.corrected_mean;
  err << "\n";
}

// ---------------------------------------------------------------- commands

void cmd_split(const Flags& f, Output& o) {
  json c = resolve(f);
  auto data = load_data(c);
  const json& p = c.at("plan");
  std::size_t n = 0;
  if (data) {
    n = data->n();
    if (p.contains("n") && p.at("n").get<std::size_t>() != n) throw UsageError("--n does not match the dataset size");
  } else if (p.contains("n")) {
    n = p.at("n").get<std::size_t>();
  } else {
    throw UsageError("split needs --n or --data");
  }
  const FoldPlan plan = build_plan(p, n, data ? &*data : nullptr, seed_of(c), get_or<std::string>(p, "scheme", "kfold"));
  o.prepare(c);
  o.emit("plan.json", serialize(to_json(plan)));
  o.err << "plan: " << to_string(plan.scheme.kind) << ", " << plan.splits.size() << " splits over n = " << plan.n;
  if (plan.dropped) o.err << ", " << plan.dropped << " dropped (empty training set)";
  o.err << ", fingerprint " << plan.fingerprint() << "\n";
}

void cmd_score(const Flags& f, Output& o) {
  json c = resolve(f);
  const Dataset data = require_data(c);
  if (model_flags_given(f) || !c.contains("models")) c["models"] = json::array({model_flags(f, data)});
  const auto models = parse_models(c.at("models"), data);
  if (models.size() != 1) throw UsageError("score takes exactly one model (the config lists " + std::to_string(models.size()) + ")");
  const FoldPlan plan = plan_for(c, data);
  const ScoreKind kind = kind_for(c, data);
  c["kind"] = to_string(kind);
  EngineOptions opts;
  opts.parallel = parallel_of(c);
  opts.bias_correct = get_or<bool>(c, "bias_correct", false);
  if (c.contains("threshold")) opts.threshold = c.at("threshold").get<double>();

  ScoreEstimate est = cv_estimate(models.front(), data, plan, kind, opts);
  if (f.effective_params) est.n_effective_params = effective_params(data, models.front(), plan, opts.parallel);
  o.prepare(c);
  o.emit("score.json", serialize_report(make_envelope("score", to_json(est), recorded(c), est.plan_fingerprint)));
  if (f.pointwise) {
    if (!o.dir) throw UsageError("--pointwise needs --out");
    std::ofstream csv(*o.dir / "pointwise.csv", std::ios::binary);
    write_pointwise_csv(est, csv);
  }
  summary_line(o.err, est);
}

void cmd_select(const Flags& f, Output& o) {
  json c = resolve(f);
  const Dataset data = require_data(c);
  if (f.nested_models) {
    c["models"] = nested_models(f, data);
  } else if (!c.contains("models")) {
    throw UsageError("select needs a config with \"models\" or --nested-models");
  }
  const auto models = parse_models(c.at("models"), data);
  if (models.size() < 2) throw UsageError("select needs at least two models");
  const FoldPlan plan = plan_for(c, data);
  const ScoreKind kind = kind_for(c, data);
  c["kind"] = to_string(kind);
  const Rule rule = parse_rule(get_or<std::string>(c, "rule", "best"));
  c["rule"] = to_string(rule);
  EngineOptions opts;
  opts.parallel = parallel_of(c);
  if (c.contains("threshold")) opts.threshold = c.at("threshold").get<double>();

  const ScoreTable table = score_table(models, data, plan, kind, opts);
  const SelectionResult res = select(table, rule);
  json payload = to_json(res);
  payload["plan_fingerprint"] = table.plan_fingerprint;
  o.prepare(c);
  o.emit("selection.json", serialize_report(make_envelope("selection", payload, recorded(c), table.plan_fingerprint)));
  for (const auto& m : res.models) {
    o.err << m.id << ": mean " << m.mean << " se " << m.se << " sigma_adj " << m.sigma_adj << " sigma_diff " << m.sigma_diff
          << (m.id == res.selected_id ? "  <- selected" : "") << "\n";
  }
  for (const auto& w : res.warnings) o.err << "warning: " << w << "\n";
}

void cmd_tune(const Flags& f, Output& o) {
  json c = resolve(f);
  const Dataset data = require_data(c);
  const FoldPlan plan = plan_for(c, data);
  const ScoreKind kind = kind_for(c, data);
  c["kind"] = to_string(kind);
  EngineOptions opts;
  opts.parallel = parallel_of(c);
  if (c.contains("threshold")) opts.threshold = c.at("threshold").get<double>();
  const json& t = c.at("tune");

  if (get_or<bool>(t, "nested", false)) {
    if (model_flags_given(f) && !c.contains("models")) c["models"] = json::array({model_flags(f, data)});
    if (!c.contains("models")) throw UsageError("nested tuning needs candidate models in the config");
    const auto models = parse_models(c.at("models"), data);
    const NestedResult res = tune_nested(models, data, plan, get_or<std::size_t>(t, "inner_k", 10), kind,
                                         get_or<bool>(t, "tune_threshold", false), seed_of(c), opts);
    o.prepare(c);
    o.emit("tuning.json", serialize_report(make_envelope("nested", to_json(res), recorded(c), res.outer.plan_fingerprint)));
    summary_line(o.err, res.outer);
    return;
  }

  const std::string family = f.family.value_or(get_or<std::string>(t, "family", "elastic-net"));
  if (parse_family(family) != Family::elastic_net) throw UsageError("tune needs --family elastic-net or --nested");
  const double alpha = f.alpha.value_or(get_or<double>(t, "alpha", 1.0));
  const Objective objective = parse_objective(
      f.objective.value_or(get_or<std::string>(t, "objective", data.task == Task::classification ? "logistic" : "linear")));
  std::vector<std::size_t> features;
  if (f.features) {
    json m = {{"family", "elastic_net"}, {"features", feature_list(*f.features)}};
    features = model_spec_from_json(m, data.feature_names).features;
  } else {
    features = all_rows(data.p());
  }
  c["tune"]["family"] = "elastic_net";
  c["tune"]["alpha"] = alpha;
  c["tune"]["objective"] = to_string(objective);
  const LambdaTuning res = tune_lambda(data, features, alpha, objective, plan, kind, get_or<std::size_t>(t, "n_lambda", 30), opts);
  o.prepare(c);
  o.emit("tuning.json", serialize_report(make_envelope("lambda_tuning", to_json(res), recorded(c), plan.fingerprint())));
  if (res.alpha_surrogate) o.err << "warning: alpha = 0 has no finite lambda_max; the grid uses alpha = 0.001\n";
  o.err << "lambda (best) = " << res.chosen(LambdaRule::best) << ", lambda (one_se) = " << res.chosen(LambdaRule::one_se) << "\n";
}

void cmd_bench(const Flags& f, Output& o) {
  json c = resolve(f);
  json settings = c.contains("bench") ? c.at("bench") : json::object();
  if (!settings.is_object()) throw UsageError("config \"bench\" must be an object");
  if (f.replicates) settings["replicates"] = *f.replicates;
  if (f.n) settings["n"] = *f.n;
  settings["seed"] = seed_of(c);
  ExperimentConfig cfg = experiment_config_from_json(f.experiment, settings);
  cfg.parallel = parallel_of(c);
  cfg.validate();
  c["bench"] = to_json(cfg);
  const ExperimentReport rep = run_experiment(cfg);
  o.prepare(c);
  o.emit(cfg.name + ".json", serialize_report(make_envelope("experiment", to_json(rep), recorded(c))));
  if (o.dir) {
    std::ofstream csv(*o.dir / (cfg.name + ".csv"), std::ios::binary);
    write_tidy_csv(rep, csv);
  }
  for (const auto& cell : rep.cells) o.err << cell.cell << " " << cell.statistic << " = " << cell.mean << " (se " << cell.se << ")\n";
}

void add_data_options(CLI::App* sub, Flags& f) {
  sub->add_option("--data", f.data, "CSV file or demo:NAME (" + [] {
    std::string s;
    for (const auto& n : demo_names()) s += (s.empty() ? "" : "|") + n;
    return s;
  }() + ")");
  sub->add_option("--response", f.response, "Response column (default y)");
  sub->add_option("--feature-columns", f.feature_columns, "Comma-separated feature columns (default: all others)");
  sub->add_option("--task", f.task, "regression | classification");
  sub->add_option("--groups-column", f.groups_column, "Group column for logo");
  sub->add_option("--strata-column", f.strata_column, "Strata column for stratified-kfold");
  sub->add_option("--coord-columns", f.coord_columns, "Comma-separated coordinate columns for blocked");
}

void add_plan_options(CLI::App* sub, Flags& f) {
  sub->add_option("--scheme", f.scheme, "kfold | repeated-kfold | loo | leave-d-out | logo | blocked | stratified-kfold");
  sub->add_option("--k", f.k, "Folds (default 10)");
  sub->add_option("--repeats", f.repeats, "Repetitions for repeated-kfold (default 10)");
  sub->add_option("--d", f.d, "Test size for leave-d-out (default: consistent d)");
  sub->add_option("--iterations", f.iterations, "Iterations for leave-d-out (default 100)");
  sub->add_option("--block-h", f.h, "Blocking distance h for blocked");
  sub->add_option("--base", f.base, "Base scheme wrapped by blocked (default loo)");
}

void add_model_options(CLI::App* sub, Flags& f) {
  sub->add_option("--family", f.family, "ols | logistic | elastic-net | growth");
  sub->add_option("--features", f.features, "Comma-separated model features (names or indices)");
  sub->add_option("--alpha", f.alpha, "Elastic-net mixing");
  sub->add_option("--lambda", f.lambda, "Elastic-net penalty");
  sub->add_option("--objective", f.objective, "linear | logistic");
  sub->add_option("--growth-function", f.growth_function, "gompertz | logistic | von_bertalanffy");
  sub->add_option("--sex-on", f.sex_on, "Growth parameters with a sex contrast, e.g. LK");
  sub->add_flag("--group-intercepts", f.group_intercepts, "Per-group asymptote offsets");
  sub->add_option("--id", f.id, "Model id");
  sub->add_option("--threshold", f.threshold, "Decision threshold for metrics");
  sub->add_option("--kind", f.kind, "Loss or metric name");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Flags f;
  CLI::App app{"Cross-validation model selection"};
  app.name(args.empty() ? "cvselect" : args.front());
  app.require_subcommand(1);
  app.add_option("--config", f.config, "JSON config file; flags override it");
  app.add_option("--seed", f.seed, "Random seed (default: CVSELECT_SEED, else 0)");
  app.add_option("--parallel", f.parallel, "Worker threads");
  app.add_option("--out", f.out, "Output directory");

  auto* split = app.add_subcommand("split", "Emit a fold plan");
  split->add_option("--n", f.n, "Number of rows when no dataset is given");
  add_data_options(split, f);
  add_plan_options(split, f);

  auto* score = app.add_subcommand("score", "Cross-validated score of one model");
  add_data_options(score, f);
  add_plan_options(score, f);
  add_model_options(score, f);
  score->add_flag("--bias-correct", f.bias_correct, "Add the pointwise bias correction");
  score->add_flag("--pointwise", f.pointwise, "Write pointwise.csv next to the report");
  score->add_flag("--effective-params", f.effective_params, "Report the effective number of parameters");

  auto* sel = app.add_subcommand("select", "Score several models on one plan and apply a selection rule");
  add_data_options(sel, f);
  add_plan_options(sel, f);
  add_model_options(sel, f);
  sel->add_option("--rule", f.rule, "best | ose-mod | ose-diff");
  sel->add_flag("--nested-models", f.nested_models, "Candidates: the first 0, 1, ..., p of --features");

  auto* tune = app.add_subcommand("tune", "Elastic-net lambda path or nested CV");
  add_data_options(tune, f);
  add_plan_options(tune, f);
  add_model_options(tune, f);
  tune->add_option("--n-lambda", f.n_lambda, "Lambda grid size (default 30)");
  tune->add_flag("--nested", f.nested, "Nested CV over the config's candidate models");
  tune->add_option("--inner-k", f.inner_k, "Inner folds (default 10)");
  tune->add_flag("--tune-threshold", f.tune_threshold, "Also tune the decision threshold");

  auto* bench = app.add_subcommand("bench", "Run a Monte Carlo experiment");
  std::string names;
  for (const auto& n : experiment_names()) names += (names.empty() ? "" : " | ") + n;
  bench->add_option("experiment", f.experiment, names)->required();
  bench->add_option("--replicates", f.replicates, "Replicates");
  bench->add_option("--n", f.n, "Sample size");

  for (auto* sub : {split, score, sel, tune, bench}) sub->fallthrough();

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  if (argv.empty()) argv.push_back("cvselect");
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    std::string msg = e.what();
    if (msg.empty()) msg = "invalid arguments";
    err << app.get_name() << ": error: " << msg << "\n";
    return kUsage;
  }

  Output o{out, err, f.out ? std::optional<fs::path>(*f.out) : std::nullopt};
  try {
    if (*split) cmd_split(f, o);
    else if (*score) cmd_score(f, o);
    else if (*sel) cmd_select(f, o);
    else if (*tune) cmd_tune(f, o);
    else if (*bench) cmd_bench(f, o);
    return kOk;
  } catch (const UsageError& e) {
    err << app.get_name() << ": error: " << e.what() << "\n";
    return kUsage;
  } catch (const json::exception& e) {
    err << app.get_name() << ": error: bad config value: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    err << app.get_name() << ": error: " << e.what() << "\n";
    return kFailure;
  }
}

}  // namespace cvselect::cli
