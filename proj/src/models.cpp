#include <algorithm>
#include <atomic>
#include <numeric>
#include <set>

#include "cvselect/error.hpp"
#include "cvselect/models.hpp"

namespace cvselect {
namespace {

std::size_t resolve_feature(const nlohmann::json& j, std::span<const std::string> names) {
  if (j.is_number_unsigned() || j.is_number_integer()) {
    const auto v = j.get<long long>();
    if (v < 0) throw UsageError("negative feature index");
    return static_cast<std::size_t>(v);
  }
  if (j.is_string()) {
    const auto name = j.get<std::string>();
    const auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) throw UsageError("unknown feature: " + name);
    return static_cast<std::size_t>(it - names.begin());
  }
  throw UsageError("feature entries must be indices or names");
}

}  // namespace

std::string_view to_string(Family f) noexcept {
  switch (f) {
    case Family::ols:
      return "ols";
    case Family::logistic:
      return "logistic";
    case Family::elastic_net:
      return "elastic_net";
    case Family::growth:
      return "growth";
    case Family::custom:
      return "custom";
  }
  return "unknown";
}

std::string_view to_string(Objective o) noexcept { return o == Objective::linear ? "linear" : "logistic"; }

std::string_view to_string(GrowthFunction g) noexcept {
  switch (g) {
    case GrowthFunction::gompertz:
      return "gompertz";
    case GrowthFunction::logistic:
      return "logistic";
    case GrowthFunction::von_bertalanffy:
      return "von_bertalanffy";
  }
  return "unknown";
}

Family parse_family(std::string_view name) {
  if (name == "elastic-net") return Family::elastic_net;
  for (auto f : {Family::ols, Family::logistic, Family::elastic_net, Family::growth}) {
    if (to_string(f) == name) return f;
  }
  throw UsageError("unknown model family: " + std::string(name));
}

Objective parse_objective(std::string_view name) {
  if (name == "linear") return Objective::linear;
  if (name == "logistic") return Objective::logistic;
  throw UsageError("unknown objective: " + std::string(name));
}

GrowthFunction parse_growth_function(std::string_view name) {
  if (name == "gompertz" || name == "G") return GrowthFunction::gompertz;
  if (name == "logistic" || name == "log") return GrowthFunction::logistic;
  if (name == "von_bertalanffy" || name == "vB") return GrowthFunction::von_bertalanffy;
  throw UsageError("unknown growth function: " + std::string(name));
}

void ElasticNetConfig::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw UsageError("elastic net alpha must lie in [0, 1]");
  if (!(lambda >= 0.0)) throw UsageError("elastic net lambda must be >= 0");
  if (max_iter < 1) throw UsageError("elastic net max_iter must be positive");
  if (!(tol > 0.0)) throw UsageError("elastic net tol must be positive");
}

std::string GrowthSpec::label() const {
  std::string s;
  switch (function) {
    case GrowthFunction::gompertz:
      s = "G";
      break;
    case GrowthFunction::logistic:
      s = "log";
      break;
    case GrowthFunction::von_bertalanffy:
      s = "vB";
      break;
  }
  s += '|';
  if (!uses_sex()) return s + '0';
  if (sex_on_asymptote) s += 'L';
  if (sex_on_rate) s += 'K';
  if (sex_on_origin) s += 't';
  return s;
}

std::size_t ModelSpec::param_count() const {
  switch (family) {
    case Family::ols:
    case Family::logistic:
    case Family::elastic_net:
      return features.size() + 1;
    case Family::growth:
      return 3 + static_cast<std::size_t>(growth.sex_on_asymptote) + static_cast<std::size_t>(growth.sex_on_rate) +
             static_cast<std::size_t>(growth.sex_on_origin);
    case Family::custom:
      return learner ? learner->param_count() : 0;
  }
  return 0;
}

void ModelSpec::validate(std::size_t p) const {
  std::set<std::size_t> seen;
  for (auto f : features) {
    if (f >= p) throw UsageError("feature index " + std::to_string(f) + " out of range (p = " + std::to_string(p) + ")");
    if (!seen.insert(f).second) throw UsageError("duplicate feature index " + std::to_string(f));
  }
  if (family == Family::elastic_net) enet.validate();
  if (family == Family::growth) {
    if (growth.age_feature >= p) throw UsageError("growth age column out of range");
    if (growth.uses_sex() && growth.sex_feature >= p) throw UsageError("growth sex column out of range");
  }
  if (family == Family::custom && !learner) throw UsageError("custom family needs a learner");
  if (!(threshold > 0.0 && threshold < 1.0)) throw UsageError("threshold must lie in (0, 1)");
}

std::string ModelSpec::describe(std::span<const std::string> feature_names) const {
  if (family == Family::growth) return growth.label();
  if (family == Family::custom) return learner ? learner->name() : "custom";
  std::string s(to_string(family));
  s += '[';
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (i) s += ',';
    s += features[i] < feature_names.size() ? feature_names[features[i]] : std::to_string(features[i]);
  }
  s += ']';
  if (family == Family::elastic_net) {
    s += "(alpha=" + nlohmann::json(enet.alpha).dump() + ",lambda=" + nlohmann::json(enet.lambda).dump() + ")";
  }
  return s;
}

nlohmann::json to_json(const ModelSpec& spec) {
  using nlohmann::json;
  json hyper = json::object();
  switch (spec.family) {
    case Family::ols:
    case Family::custom:
      break;
    case Family::logistic:
      hyper = {{"max_iter", spec.max_iter}, {"tol", spec.tol}, {"threshold", spec.threshold}};
      break;
    case Family::elastic_net:
      hyper = {{"alpha", spec.enet.alpha},       {"lambda", spec.enet.lambda},     {"standardize", spec.enet.standardize},
               {"max_iter", spec.enet.max_iter}, {"tol", spec.enet.tol},           {"objective", to_string(spec.objective)},
               {"threshold", spec.threshold}};
      break;
    case Family::growth: {
      json sex = json::array();
      if (spec.growth.sex_on_asymptote) sex.push_back("L");
      if (spec.growth.sex_on_rate) sex.push_back("K");
      if (spec.growth.sex_on_origin) sex.push_back("t");
      hyper = {{"function", to_string(spec.growth.function)},
               {"sex_effect_on", sex},
               {"group_intercepts", spec.growth.group_intercepts},
               {"age_feature", spec.growth.age_feature},
               {"sex_feature", spec.growth.sex_feature}};
      break;
    }
  }
  json j{{"id", spec.id},
         {"family", to_string(spec.family)},
         {"features", spec.features},
         {"hyperparameters", hyper},
         {"complexity_rank", spec.rank()}};
  return j;
}

ModelSpec model_spec_from_json(const nlohmann::json& j, std::span<const std::string> feature_names) {
  try {
    ModelSpec spec;
    spec.family = parse_family(j.at("family").get<std::string>());
    spec.id = j.value("id", std::string{});
    if (j.contains("features")) {
      for (const auto& f : j.at("features")) spec.features.push_back(resolve_feature(f, feature_names));
    }
    if (j.contains("complexity_rank")) spec.complexity_rank = j.at("complexity_rank").get<int>();
    const auto hyper = j.value("hyperparameters", nlohmann::json::object());
    spec.max_iter = hyper.value("max_iter", spec.max_iter);
    spec.tol = hyper.value("tol", spec.tol);
    spec.threshold = hyper.value("threshold", spec.threshold);
    if (spec.family == Family::elastic_net) {
      spec.enet.alpha = hyper.value("alpha", spec.enet.alpha);
      spec.enet.lambda = hyper.value("lambda", spec.enet.lambda);
      spec.enet.standardize = hyper.value("standardize", spec.enet.standardize);
      spec.enet.max_iter = hyper.value("max_iter", spec.enet.max_iter);
      spec.enet.tol = hyper.value("tol", spec.enet.tol);
      spec.objective = parse_objective(hyper.value("objective", std::string("linear")));
    }
    if (spec.family == Family::growth) {
      spec.growth.function = parse_growth_function(hyper.value("function", std::string("von_bertalanffy")));
      for (const auto& s : hyper.value("sex_effect_on", nlohmann::json::array())) {
        const auto term = s.get<std::string>();
        if (term == "L") {
          spec.growth.sex_on_asymptote = true;
        } else if (term == "K") {
          spec.growth.sex_on_rate = true;
        } else if (term == "t") {
          spec.growth.sex_on_origin = true;
        } else {
          throw UsageError("sex_effect_on entries must be L, K or t");
        }
      }
      spec.growth.group_intercepts = hyper.value("group_intercepts", false);
      if (hyper.contains("age_feature")) spec.growth.age_feature = resolve_feature(hyper.at("age_feature"), feature_names);
      if (hyper.contains("sex_feature")) spec.growth.sex_feature = resolve_feature(hyper.at("sex_feature"), feature_names);
    }
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("malformed model spec: ") + e.what());
  }
}

namespace {
std::atomic<std::uint64_t> g_fits{0};
}

std::uint64_t fit_counter() noexcept { return g_fits.load(); }

std::unique_ptr<FittedModel> fit_model(const ModelSpec& spec, const Dataset& data, std::span<const std::size_t> rows) {
  g_fits.fetch_add(1, std::memory_order_relaxed);
  switch (spec.family) {
    case Family::ols:
      return std::make_unique<OlsModel>(fit_ols(data, rows, spec.features));
    case Family::logistic:
      return std::make_unique<LogisticModel>(fit_logistic(data, rows, spec.features, spec.max_iter, spec.tol, spec.threshold));
    case Family::elastic_net:
      return std::make_unique<ElasticNetModel>(fit_elastic_net(data, rows, spec.features, spec.enet, spec.objective, spec.threshold));
    case Family::growth:
      return std::make_unique<GrowthModel>(fit_growth(data, rows, spec.growth));
    case Family::custom:
      if (!spec.learner) throw UsageError("custom family needs a learner");
      return spec.learner->fit(data, rows);
  }
  throw UsageError("unknown model family");
}

Eigen::MatrixXd design_matrix(const Dataset& data, std::span<const std::size_t> rows, std::span<const std::size_t> features) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(features.size() + 1));
  x.col(0).setOnes();
  for (std::size_t j = 0; j < features.size(); ++j) {
    const auto src = static_cast<Eigen::Index>(features[j]);
    auto dst = x.col(static_cast<Eigen::Index>(j + 1));
    for (std::size_t r = 0; r < rows.size(); ++r) dst[static_cast<Eigen::Index>(r)] = data.features(static_cast<Eigen::Index>(rows[r]), src);
  }
  return x;
}

Eigen::VectorXd gather(const Eigen::VectorXd& v, std::span<const std::size_t> rows) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) out[static_cast<Eigen::Index>(r)] = v[static_cast<Eigen::Index>(rows[r])];
  return out;
}

std::vector<std::size_t> all_rows(std::size_t n) {
  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return rows;
}

}  // namespace cvselect
