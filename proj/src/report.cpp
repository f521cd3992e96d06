#include "cvselect/report.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <ostream>
#include <sstream>

#include "cvselect/error.hpp"

namespace cvselect {

using nlohmann::json;

std::string current_timestamp() {
  std::time_t t;
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH"); epoch && *epoch) {
    t = static_cast<std::time_t>(std::strtoll(epoch, nullptr, 10));
  } else {
    t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  }
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

ReportEnvelope make_envelope(std::string payload_type, json payload, json config, std::string plan_fingerprint) {
  ReportEnvelope env;
  env.payload_type = std::move(payload_type);
  env.payload = std::move(payload);
  env.config = std::move(config);
  env.plan_fingerprint = std::move(plan_fingerprint);
  env.created = current_timestamp();
  return env;
}

json to_json(const ScoreEstimate& e) {
  json j;
  j["kind"] = to_string(e.kind);
  j["orientation"] = to_string(e.orientation());
  j["model_id"] = e.model_id;
  j["plan_fingerprint"] = e.plan_fingerprint;
  j["mean"] = e.mean;
  j["utility"] = utility(e.mean, e.orientation());
  j["se"] = e.se;
  j["se_method"] = to_string(e.se_method);
  j["fit_count"] = e.fit_count;
  if (e.pointwise) {
    j["pointwise"] = *e.pointwise;
    j["pointwise_index"] = e.pointwise_index;
  }
  if (e.per_repetition) j["per_repetition"] = *e.per_repetition;
  if (e.kappa) j["kappa"] = *e.kappa;
  if (e.corrected_mean) j["corrected_mean"] = *e.corrected_mean;
  if (e.n_effective_params) j["n_effective_params"] = *e.n_effective_params;
  return j;
}

ScoreEstimate score_estimate_from_json(const json& j) {
  ScoreEstimate e;
  e.kind = parse_score_kind(j.at("kind").get<std::string>());
  e.model_id = j.at("model_id").get<std::string>();
  e.plan_fingerprint = j.at("plan_fingerprint").get<std::string>();
  e.mean = j.at("mean").get<double>();
  e.se = j.at("se").get<double>();
  const auto method = j.at("se_method").get<std::string>();
  e.se_method = method == "pointwise" ? SeMethod::pointwise : method == "repetition" ? SeMethod::repetition : SeMethod::none;
  e.fit_count = j.value("fit_count", std::size_t{0});
  if (j.contains("pointwise")) {
    e.pointwise = j.at("pointwise").get<std::vector<double>>();
    e.pointwise_index = j.at("pointwise_index").get<std::vector<std::size_t>>();
  }
  if (j.contains("per_repetition")) e.per_repetition = j.at("per_repetition").get<std::vector<double>>();
  if (j.contains("kappa")) e.kappa = j.at("kappa").get<double>();
  if (j.contains("corrected_mean")) e.corrected_mean = j.at("corrected_mean").get<double>();
  if (j.contains("n_effective_params")) e.n_effective_params = j.at("n_effective_params").get<double>();
  return e;
}

json to_json(const SelectionResult& r) {
  json j;
  j["rule"] = to_string(r.rule);
  j["kind"] = to_string(r.kind);
  j["orientation"] = to_string(orientation(r.kind));
  j["best"] = r.best_id;
  j["selected"] = r.selected_id;
  j["tie_broken"] = r.tie_broken;
  j["warnings"] = r.warnings;
  json models = json::array();
  for (const auto& m : r.models) {
    models.push_back({{"id", m.id},
                      {"mean", m.mean},
                      {"se", m.se},
                      {"rho", m.rho},
                      {"sigma_adj", m.sigma_adj},
                      {"sigma_diff", m.sigma_diff},
                      {"delta", m.delta},
                      {"complexity", m.complexity},
                      {"comparable", m.comparable}});
  }
  j["models"] = std::move(models);
  j["correlation"] = r.correlation;
  return j;
}

json to_json(const LambdaTuning& t) {
  json j;
  j["alpha"] = t.alpha;
  j["objective"] = to_string(t.objective);
  j["alpha_surrogate"] = t.alpha_surrogate;
  j["lambdas"] = t.lambdas;
  json curve = json::array();
  for (std::size_t l = 0; l < t.lambdas.size(); ++l) {
    curve.push_back({{"lambda", t.lambdas[l]},
                     {"mean", t.scores[l].mean},
                     {"se", t.scores[l].se},
                     {"sigma_diff", t.sigma_diff[l]},
                     {"nonzero", t.nonzero[l]}});
  }
  j["curve"] = std::move(curve);
  j["kind"] = t.scores.empty() ? "" : to_string(t.scores.front().kind);
  j["best"] = {{"index", t.best_index}, {"lambda", t.lambdas[t.best_index]}};
  j["one_se"] = {{"index", t.one_se_index}, {"lambda", t.lambdas[t.one_se_index]}};
  return j;
}

json to_json(const NestedResult& r) {
  json j;
  j["outer"] = to_json(r.outer);
  j["inner_k"] = r.inner_k;
  j["tune_threshold"] = r.tune_threshold;
  j["leakage_audited"] = r.leakage_audited;
  json choices = json::array();
  for (const auto& c : r.choices) {
    json cj = {{"split", c.split}, {"chosen", c.chosen_id}, {"inner_score", c.inner_score}, {"inner_rows", c.inner_rows.size()}};
    if (c.threshold) cj["threshold"] = *c.threshold;
    choices.push_back(std::move(cj));
  }
  j["choices"] = std::move(choices);
  return j;
}

json to_json(const ExperimentReport& r) {
  json j;
  j["experiment"] = r.experiment;
  j["config"] = to_json(r.config);
  json cells = json::array();
  for (const auto& c : r.cells) cells.push_back({{"cell", c.cell}, {"statistic", c.statistic}, {"mean", c.mean}, {"se", c.se}});
  j["cells"] = std::move(cells);
  if (!r.raw.empty()) j["raw"] = r.raw;
  return j;
}

namespace {
const char* const kKnown[] = {"schema_version", "toolkit_version", "config", "created", "plan_fingerprint", "payload_type", "payload"};
}

json to_json(const ReportEnvelope& env) {
  json j = env.extra.is_object() ? env.extra : json::object();
  j["schema_version"] = env.schema_version;
  j["toolkit_version"] = env.toolkit_version;
  j["config"] = env.config;
  j["created"] = env.created;
  j["plan_fingerprint"] = env.plan_fingerprint;
  j["payload_type"] = env.payload_type;
  j["payload"] = env.payload;
  return j;
}

ReportEnvelope envelope_from_json(const json& j) {
  if (!j.is_object()) throw DataError("report: top level must be a JSON object");
  if (!j.contains("schema_version") || !j.at("schema_version").is_number_integer()) throw DataError("report: missing schema_version");
  const int found = j.at("schema_version").get<int>();
  if (found != kSchemaVersion) {
    throw DataError("report: unsupported schema version (expected " + std::to_string(kSchemaVersion) + ", found " + std::to_string(found) + ")");
  }
  ReportEnvelope env;
  try {
    env.schema_version = found;
    env.toolkit_version = j.at("toolkit_version").get<std::string>();
    env.config = j.at("config");
    env.created = j.at("created").get<std::string>();
    env.plan_fingerprint = j.at("plan_fingerprint").get<std::string>();
    env.payload_type = j.at("payload_type").get<std::string>();
    env.payload = j.at("payload");
  } catch (const json::exception& e) {
    throw DataError(std::string("report: ") + e.what());
  }
  env.extra = json::object();
  for (const auto& [k, v] : j.items()) {
    if (std::find(std::begin(kKnown), std::end(kKnown), k) == std::end(kKnown)) env.extra[k] = v;
  }
  return env;
}

namespace {

void check_finite(const json& j, const std::string& path) {
  if (j.is_number_float()) {
    if (!std::isfinite(j.get<double>())) throw UsageError("report contains a non-finite number at " + (path.empty() ? "/" : path));
  } else if (j.is_object()) {
    for (const auto& [k, v] : j.items()) check_finite(v, path + "/" + k);
  } else if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i) check_finite(j[i], path + "/" + std::to_string(i));
  }
}

}  // namespace

void reject_non_finite(const json& j) { check_finite(j, ""); }

std::string serialize(const json& j) {
  reject_non_finite(j);
  return j.dump(2) + "\n";
}

std::string serialize_report(const ReportEnvelope& env) { return serialize(to_json(env)); }

void write_text(const std::string& text, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  out.flush();
  if (!out) throw DataError("write failed: " + path.string());
}

void write_report(const ReportEnvelope& env, const std::filesystem::path& path) { write_text(serialize_report(env), path); }

ReportEnvelope parse_report(std::string_view text) {
  json j;
  try {
    j = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw DataError("report parse error at byte " + std::to_string(e.byte) + ": " + e.what());
  }
  return envelope_from_json(j);
}

ReportEnvelope read_report(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_report(ss.str());
}

void write_pointwise_csv(const ScoreEstimate& est, std::ostream& out) {
  if (!est.pointwise) throw UsageError("score '" + est.model_id + "' has no pointwise losses");
  const auto old = out.precision(17);
  out << "index,loss\n";
  for (std::size_t j = 0; j < est.pointwise->size(); ++j) out << est.pointwise_index[j] << ',' << (*est.pointwise)[j] << '\n';
  out.precision(old);
}

}  // namespace cvselect
