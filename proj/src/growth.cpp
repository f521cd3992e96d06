#include <algorithm>
#include <cmath>
#include <map>

#include "cvselect/error.hpp"
#include "cvselect/models.hpp"

namespace cvselect {

double growth_curve(GrowthFunction f, double age, double asymptote, double rate, double origin) {
  const double u = std::exp(-rate * (age - origin));
  switch (f) {
    case GrowthFunction::gompertz:
      return asymptote * std::exp(-u);
    case GrowthFunction::logistic:
      return asymptote / (1.0 + u);
    case GrowthFunction::von_bertalanffy:
      return asymptote * (1.0 - u);
  }
  return 0.0;
}

Eigen::Vector3d growth_gradient(GrowthFunction f, double age, double asymptote, double rate, double origin) {
  const double dt = age - origin;
  const double u = std::exp(-rate * dt);
  // du/dK = -dt u, du/dt0 = K u
  switch (f) {
    case GrowthFunction::gompertz: {
      const double e = std::exp(-u);
      return {e, asymptote * e * u * dt, -asymptote * e * u * rate};
    }
    case GrowthFunction::logistic: {
      const double d = 1.0 + u;
      const double s = asymptote * u / (d * d);
      return {1.0 / d, s * dt, -s * rate};
    }
    case GrowthFunction::von_bertalanffy:
      return {1.0 - u, asymptote * dt * u, -asymptote * rate * u};
  }
  return Eigen::Vector3d::Zero();
}

namespace {

// Parameter layout: asymptote, rate, origin, then the active sex contrasts
// in (L, K, t) order, then G-1 free group offsets (the last group's offset
// is minus their sum).
struct Layout {
  Eigen::Index sex_l = -1, sex_k = -1, sex_t = -1, groups = -1;
  Eigen::Index n_groups = 0;
  Eigen::Index size = 3;

  explicit Layout(const GrowthSpec& spec, Eigen::Index group_count) {
    if (spec.sex_on_asymptote) sex_l = size++;
    if (spec.sex_on_rate) sex_k = size++;
    if (spec.sex_on_origin) sex_t = size++;
    if (spec.group_intercepts) {
      n_groups = group_count;
      groups = size;
      size += group_count - 1;
    }
  }
};

struct Rows {
  Eigen::VectorXd age, contrast, y;
  std::vector<Eigen::Index> group;  // -1 when not modelled
};

struct Curve {
  double asymptote, rate, origin;
};

double group_offset(const Eigen::VectorXd& theta, const Layout& lay, Eigen::Index g) {
  if (lay.groups < 0) return 0.0;
  if (g < lay.n_groups - 1) return theta[lay.groups + g];
  return -theta.segment(lay.groups, lay.n_groups - 1).sum();
}

Curve curve_for(const Eigen::VectorXd& theta, const Layout& lay, double c, Eigen::Index g) {
  Curve cv{theta[0], theta[1], theta[2]};
  if (lay.sex_l >= 0) cv.asymptote += c * theta[lay.sex_l];
  if (lay.sex_k >= 0) cv.rate += c * theta[lay.sex_k];
  if (lay.sex_t >= 0) cv.origin += c * theta[lay.sex_t];
  cv.asymptote += group_offset(theta, lay, g);
  return cv;
}

Eigen::VectorXd residuals(GrowthFunction f, const Rows& d, const Eigen::VectorXd& theta, const Layout& lay) {
  Eigen::VectorXd r(d.y.size());
  for (Eigen::Index i = 0; i < r.size(); ++i) {
    const Curve cv = curve_for(theta, lay, d.contrast[i], d.group[static_cast<std::size_t>(i)]);
    r[i] = d.y[i] - growth_curve(f, d.age[i], cv.asymptote, cv.rate, cv.origin);
  }
  return r;
}

Eigen::MatrixXd jacobian(GrowthFunction f, const Rows& d, const Eigen::VectorXd& theta, const Layout& lay) {
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(d.y.size(), lay.size);
  for (Eigen::Index i = 0; i < jac.rows(); ++i) {
    const double c = d.contrast[i];
    const Eigen::Index g = d.group[static_cast<std::size_t>(i)];
    const Curve cv = curve_for(theta, lay, c, g);
    const Eigen::Vector3d grad = growth_gradient(f, d.age[i], cv.asymptote, cv.rate, cv.origin);
    jac(i, 0) = grad[0];
    jac(i, 1) = grad[1];
    jac(i, 2) = grad[2];
    if (lay.sex_l >= 0) jac(i, lay.sex_l) = c * grad[0];
    if (lay.sex_k >= 0) jac(i, lay.sex_k) = c * grad[1];
    if (lay.sex_t >= 0) jac(i, lay.sex_t) = c * grad[2];
    if (lay.groups >= 0) {
      if (g < lay.n_groups - 1) {
        jac(i, lay.groups + g) = grad[0];
      } else {
        jac.block(i, lay.groups, 1, lay.n_groups - 1).setConstant(-grad[0]);
      }
    }
  }
  return jac;
}

std::string parameter_name(const Layout& lay, Eigen::Index k) {
  if (k == 0) return "asymptote";
  if (k == 1) return "rate";
  if (k == 2) return "origin";
  if (k == lay.sex_l) return "sex effect on asymptote";
  if (k == lay.sex_k) return "sex effect on rate";
  if (k == lay.sex_t) return "sex effect on origin";
  return "group offset " + std::to_string(k - lay.groups);
}

constexpr std::size_t kMaxIterations = 200;

}  // namespace

Prediction GrowthModel::predict(const Dataset& data, std::size_t row) const {
  const auto r = static_cast<Eigen::Index>(row);
  const double age = data.features(r, static_cast<Eigen::Index>(spec.age_feature));
  double a = asymptote, k = rate, t = origin;
  if (spec.uses_sex()) {
    const double c = 2.0 * data.features(r, static_cast<Eigen::Index>(spec.sex_feature)) - 1.0;
    a += c * sex_asymptote;
    k += c * sex_rate;
    t += c * sex_origin;
  }
  if (spec.group_intercepts && data.groups) {
    const auto it = group_offsets.find((*data.groups)[row]);
    if (it != group_offsets.end()) a += it->second;
  }
  return Prediction::regression(growth_curve(spec.function, age, a, k, t), sigma);
}

Eigen::VectorXd GrowthModel::coefficients() const {
  std::vector<double> c{asymptote, rate, origin};
  if (spec.sex_on_asymptote) c.push_back(sex_asymptote);
  if (spec.sex_on_rate) c.push_back(sex_rate);
  if (spec.sex_on_origin) c.push_back(sex_origin);
  for (const auto& [g, b] : group_offsets) c.push_back(b);
  return Eigen::Map<const Eigen::VectorXd>(c.data(), static_cast<Eigen::Index>(c.size()));
}

GrowthModel fit_growth(const Dataset& data, std::span<const std::size_t> rows, const GrowthSpec& spec, std::optional<GrowthStart> init) {
  if (rows.empty()) throw FitError("growth: no training rows");
  if (spec.age_feature >= data.p() || (spec.uses_sex() && spec.sex_feature >= data.p())) {
    throw UsageError("growth: age/sex column out of range");
  }
  if (spec.group_intercepts && !data.groups) throw UsageError("growth: group intercepts need a group column");

  const auto n = static_cast<Eigen::Index>(rows.size());
  Rows d;
  d.age.resize(n);
  d.contrast = Eigen::VectorXd::Zero(n);
  d.y = gather(data.response, rows);
  d.group.assign(rows.size(), -1);

  std::map<std::string, Eigen::Index> group_index;
  std::map<std::string, std::size_t> group_size;
  if (spec.group_intercepts) {
    for (auto r : rows) ++group_size[(*data.groups)[r]];
    for (const auto& [label, count] : group_size) {
      if (count < 2) throw FitError("growth: group '" + label + "' has a single observation; group intercepts need at least 2");
      const auto next = static_cast<Eigen::Index>(group_index.size());
      group_index.emplace(label, next);
    }
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)]);
    d.age[i] = data.features(r, static_cast<Eigen::Index>(spec.age_feature));
    if (!(d.age[i] > 0.0)) throw UsageError("growth: ages must be positive (row " + std::to_string(r) + ")");
    if (spec.uses_sex()) {
      const double s = data.features(r, static_cast<Eigen::Index>(spec.sex_feature));
      if (s != 0.0 && s != 1.0) throw UsageError("growth: sex must be coded 0/1 (row " + std::to_string(r) + ")");
      d.contrast[i] = 2.0 * s - 1.0;
    }
    if (spec.group_intercepts) d.group[static_cast<std::size_t>(i)] = group_index.at((*data.groups)[static_cast<std::size_t>(r)]);
  }

  const Layout lay(spec, static_cast<Eigen::Index>(group_index.size()));
  if (n < lay.size) throw FitError("growth: fewer observations than parameters");
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(lay.size);
  if (init) {
    theta[0] = init->asymptote;
    theta[1] = init->rate;
    theta[2] = init->origin;
  } else {
    const double lo = d.age.minCoeff();
    const double range = std::max(d.age.maxCoeff() - lo, 1e-6);
    theta[0] = d.y.maxCoeff();
    theta[1] = 1.0 / range;
    theta[2] = lo - 0.1 * range;
  }

  Eigen::VectorXd r = residuals(spec.function, d, theta, lay);
  double rss = r.squaredNorm();
  const double floor = 1e-28 * (1.0 + d.y.squaredNorm());
  double damping = 1e-3;
  std::size_t it = 0;
  for (; it < kMaxIterations && rss > floor; ++it) {
    const Eigen::MatrixXd jac = jacobian(spec.function, d, theta, lay);
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Eigen::VectorXd grad = jac.transpose() * r;
    const double max_diag = jtj.diagonal().maxCoeff();
    for (Eigen::Index k = 0; k < lay.size; ++k) {
      if (!(jtj(k, k) > 1e-14 * max_diag)) {
        throw FitError("growth: singular Jacobian (" + parameter_name(lay, k) + " has no influence on the fit)");
      }
    }
    bool accepted = false;
    double next_rss = rss;
    while (damping < 1e16) {
      Eigen::MatrixXd lhs = jtj;
      lhs.diagonal() += damping * jtj.diagonal();
      const Eigen::VectorXd step = lhs.ldlt().solve(grad);
      const Eigen::VectorXd cand = theta + step;
      if (!step.allFinite()) {
        damping *= 10.0;
        continue;
      }
      const Eigen::VectorXd cand_r = residuals(spec.function, d, cand, lay);
      const double cand_rss = cand_r.squaredNorm();
      if (std::isfinite(cand_rss) && cand_rss < rss) {
        theta = cand;
        r = cand_r;
        next_rss = cand_rss;
        damping /= 10.0;
        accepted = true;
        break;
      }
      damping *= 10.0;
    }
    if (!accepted) break;  // no further decrease possible at working precision
    const double rel = (rss - next_rss) / rss;
    rss = next_rss;
    if (rel < 1e-10) {
      ++it;
      break;
    }
  }
  if (!theta.allFinite() || !std::isfinite(rss)) throw FitError("growth: Levenberg-Marquardt diverged");

  GrowthModel m;
  m.spec = spec;
  m.asymptote = theta[0];
  m.rate = theta[1];
  m.origin = theta[2];
  if (lay.sex_l >= 0) m.sex_asymptote = theta[lay.sex_l];
  if (lay.sex_k >= 0) m.sex_rate = theta[lay.sex_k];
  if (lay.sex_t >= 0) m.sex_origin = theta[lay.sex_t];
  for (const auto& [label, g] : group_index) m.group_offsets[label] = group_offset(theta, lay, g);
  m.rss = rss;
  m.sigma = std::sqrt(rss / static_cast<double>(n));
  m.iterations = it;
  return m;
}

}  // namespace cvselect
