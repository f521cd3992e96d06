#include "cvselect/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "cvselect/error.hpp"
#include "cvselect/rng.hpp"

namespace cvselect {
namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

bool is_missing(const std::string& cell) {
  return cell.empty() || cell == "NA" || cell == "NaN" || cell == "nan" || cell == "NULL" || cell == "null";
}

std::optional<double> parse_number(const std::string& cell) {
  double v = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  if (first != last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) return std::nullopt;
  return v;
}

std::string quote_if_needed(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw DataError("missing column: " + name);
    return static_cast<std::size_t>(it - header.begin());
  }

  std::string at(std::size_t r, std::size_t c) const { return rows[r][c]; }

  [[noreturn]] void fail(const std::string& what, std::size_t r, std::size_t c) const {
    throw DataError(what + " at row " + std::to_string(r + 1) + ", column " + header[c]);
  }

  std::vector<double> numeric(std::size_t c) const {
    std::vector<double> out(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const auto v = parse_number(rows[r][c]);
      if (!v) fail("non-numeric cell '" + rows[r][c] + "'", r, c);
      if (!std::isfinite(*v)) fail("non-finite value", r, c);
      out[r] = *v;
    }
    return out;
  }

  std::vector<std::string> strings(std::size_t c) const {
    std::vector<std::string> out(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) out[r] = rows[r][c];
    return out;
  }

  bool all_non_numeric(std::size_t c) const {
    return std::none_of(rows.begin(), rows.end(), [c](const auto& row) { return parse_number(row[c]).has_value(); });
  }
};

Table read_table(std::istream& in) {
  Table t;
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty CSV: header row required");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  for (auto& h : split_csv_line(line)) t.header.push_back(trim(h));
  std::set<std::string> seen;
  for (const auto& h : t.header) {
    if (!seen.insert(h).second) throw DataError("duplicate column name: " + h);
  }
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    auto fields = split_csv_line(line);
    if (fields.size() != t.header.size()) {
      throw DataError("row " + std::to_string(t.rows.size() + 1) + " has " + std::to_string(fields.size()) +
                      " fields, expected " + std::to_string(t.header.size()));
    }
    for (auto& f : fields) f = trim(f);
    t.rows.push_back(std::move(fields));
  }
  return t;
}

}  // namespace

std::string_view to_string(Task task) noexcept {
  return task == Task::regression ? "regression" : "classification";
}

Task parse_task(std::string_view name) {
  if (name == "regression") return Task::regression;
  if (name == "classification") return Task::classification;
  throw UsageError("unknown task: " + std::string(name));
}

void Dataset::validate() const {
  const auto rows = static_cast<Eigen::Index>(n());
  if (features.rows() != rows) throw DataError("feature matrix has " + std::to_string(features.rows()) + " rows, expected " + std::to_string(rows));
  if (feature_names.size() != p()) throw DataError("feature_names length does not match p");
  if (!features.allFinite()) throw DataError("features contain non-finite values");
  if (!response.allFinite()) throw DataError("response contains non-finite values");
  if (task == Task::classification) {
    for (Eigen::Index i = 0; i < rows; ++i) {
      if (response[i] != 0.0 && response[i] != 1.0) throw DataError("classification response must be coded 0/1");
    }
  }
  if (groups && groups->size() != n()) throw DataError("groups length does not match n");
  if (strata && strata->size() != n()) throw DataError("strata length does not match n");
  if (coords) {
    if (coords->rows() != rows) throw DataError("coords row count does not match n");
    if (!coords->allFinite()) throw DataError("coords contain non-finite values");
  }
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  Dataset out;
  const auto m = static_cast<Eigen::Index>(rows.size());
  out.features.resize(m, features.cols());
  out.response.resize(m);
  for (Eigen::Index r = 0; r < m; ++r) {
    const auto src = static_cast<Eigen::Index>(rows[static_cast<std::size_t>(r)]);
    out.features.row(r) = features.row(src);
    out.response[r] = response[src];
  }
  out.task = task;
  out.feature_names = feature_names;
  out.response_name = response_name;
  out.class_labels = class_labels;
  out.coord_names = coord_names;
  auto pick = [&](const std::vector<std::string>& v) {
    std::vector<std::string> s;
    s.reserve(rows.size());
    for (auto r : rows) s.push_back(v[r]);
    return s;
  };
  if (groups) out.groups = pick(*groups);
  if (strata) out.strata = pick(*strata);
  if (coords) {
    Eigen::MatrixXd c(m, coords->cols());
    for (Eigen::Index r = 0; r < m; ++r) c.row(r) = coords->row(static_cast<Eigen::Index>(rows[static_cast<std::size_t>(r)]));
    out.coords = std::move(c);
  }
  return out;
}

bool Dataset::operator==(const Dataset& o) const {
  auto same_matrix = [](const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() && (a.size() == 0 || a == b);
  };
  if (coords.has_value() != o.coords.has_value()) return false;
  if (coords && !same_matrix(*coords, *o.coords)) return false;
  return task == o.task && same_matrix(features, o.features) && response.size() == o.response.size() &&
         (response.size() == 0 || response == o.response) && feature_names == o.feature_names && groups == o.groups &&
         strata == o.strata && coord_names == o.coord_names && response_name == o.response_name &&
         class_labels == o.class_labels;
}

void CsvSchema::validate() const {
  if (response_column.empty()) throw UsageError("schema: response column is required");
  std::set<std::string> names{response_column};
  auto claim = [&](const std::string& name) {
    if (!names.insert(name).second) throw UsageError("schema: column named twice: " + name);
  };
  for (const auto& f : feature_columns) claim(f);
  if (group_column) claim(*group_column);
  if (strata_column) claim(*strata_column);
  for (const auto& c : coord_columns) claim(c);
}

Dataset parse_csv(std::istream& in, const CsvSchema& schema) {
  schema.validate();
  const Table table = read_table(in);
  if (table.rows.empty()) throw DataError("CSV has no data rows");

  const std::size_t resp_col = table.column(schema.response_column);
  std::optional<std::size_t> group_col, strata_col;
  if (schema.group_column) group_col = table.column(*schema.group_column);
  if (schema.strata_column) strata_col = table.column(*schema.strata_column);
  std::vector<std::size_t> coord_cols;
  for (const auto& c : schema.coord_columns) coord_cols.push_back(table.column(c));

  std::vector<std::size_t> feature_cols;
  if (schema.feature_columns.empty()) {
    for (std::size_t c = 0; c < table.header.size(); ++c) {
      const bool claimed = c == resp_col || group_col == c || strata_col == c ||
                           std::find(coord_cols.begin(), coord_cols.end(), c) != coord_cols.end();
      if (!claimed) feature_cols.push_back(c);
    }
  } else {
    for (const auto& f : schema.feature_columns) feature_cols.push_back(table.column(f));
  }

  // Missing values are reported in file order across every used column.
  std::vector<bool> used(table.header.size(), false);
  used[resp_col] = true;
  for (auto c : feature_cols) used[c] = true;
  for (auto c : coord_cols) used[c] = true;
  if (group_col) used[*group_col] = true;
  if (strata_col) used[*strata_col] = true;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    for (std::size_t c = 0; c < table.header.size(); ++c) {
      if (used[c] && is_missing(table.rows[r][c])) table.fail("missing value", r, c);
    }
  }

  Dataset data;
  const auto n = static_cast<Eigen::Index>(table.rows.size());
  data.task = schema.task;
  data.response_name = schema.response_column;

  std::vector<std::vector<double>> columns;
  for (auto c : feature_cols) {
    if (table.all_non_numeric(c)) {
      const auto cells = table.strings(c);
      std::set<std::string> levels(cells.begin(), cells.end());
      for (auto it = std::next(levels.begin()); it != levels.end(); ++it) {
        std::vector<double> col(cells.size());
        for (std::size_t r = 0; r < cells.size(); ++r) col[r] = cells[r] == *it ? 1.0 : 0.0;
        columns.push_back(std::move(col));
        data.feature_names.push_back(table.header[c] + "=" + *it);
      }
    } else {
      columns.push_back(table.numeric(c));
      data.feature_names.push_back(table.header[c]);
    }
  }
  data.features.resize(n, static_cast<Eigen::Index>(columns.size()));
  for (std::size_t j = 0; j < columns.size(); ++j) {
    data.features.col(static_cast<Eigen::Index>(j)) = Eigen::Map<const Eigen::VectorXd>(columns[j].data(), n);
  }

  data.response.resize(n);
  if (schema.task == Task::regression) {
    const auto y = table.numeric(resp_col);
    data.response = Eigen::Map<const Eigen::VectorXd>(y.data(), n);
  } else {
    const auto labels = table.strings(resp_col);
    std::set<std::string> distinct(labels.begin(), labels.end());
    if (distinct.size() != 2) {
      throw DataError("classification response '" + schema.response_column + "' must have exactly two distinct labels, found " +
                      std::to_string(distinct.size()));
    }
    data.class_labels.assign(distinct.begin(), distinct.end());
    for (Eigen::Index i = 0; i < n; ++i) {
      data.response[i] = labels[static_cast<std::size_t>(i)] == data.class_labels[1] ? 1.0 : 0.0;
    }
  }

  if (group_col) data.groups = table.strings(*group_col);
  if (strata_col) data.strata = table.strings(*strata_col);
  if (!coord_cols.empty()) {
    Eigen::MatrixXd coords(n, static_cast<Eigen::Index>(coord_cols.size()));
    for (std::size_t j = 0; j < coord_cols.size(); ++j) {
      const auto v = table.numeric(coord_cols[j]);
      coords.col(static_cast<Eigen::Index>(j)) = Eigen::Map<const Eigen::VectorXd>(v.data(), n);
    }
    data.coords = std::move(coords);
    data.coord_names = schema.coord_columns;
  }
  data.validate();
  return data;
}

Dataset load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return parse_csv(in, schema);
}

CsvSchema schema_for(const Dataset& data) {
  CsvSchema s;
  s.response_column = data.response_name;
  s.feature_columns = data.feature_names;
  s.task = data.task;
  if (data.groups) s.group_column = "group";
  if (data.strata) s.strata_column = "stratum";
  s.coord_columns = data.coord_names;
  return s;
}

void write_csv(const Dataset& data, std::ostream& out) {
  data.validate();
  const auto schema = schema_for(data);
  std::vector<std::string> header{schema.response_column};
  header.insert(header.end(), data.feature_names.begin(), data.feature_names.end());
  if (data.groups) header.push_back(*schema.group_column);
  if (data.strata) header.push_back(*schema.strata_column);
  header.insert(header.end(), data.coord_names.begin(), data.coord_names.end());
  for (std::size_t j = 0; j < header.size(); ++j) out << (j ? "," : "") << quote_if_needed(header[j]);
  out << '\n';
  for (std::size_t i = 0; i < data.n(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    if (data.task == Task::classification) {
      out << quote_if_needed(data.class_labels[data.response[r] == 1.0 ? 1 : 0]);
    } else {
      out << format_double(data.response[r]);
    }
    for (Eigen::Index j = 0; j < data.features.cols(); ++j) out << ',' << format_double(data.features(r, j));
    if (data.groups) out << ',' << quote_if_needed((*data.groups)[i]);
    if (data.strata) out << ',' << quote_if_needed((*data.strata)[i]);
    if (data.coords) {
      for (Eigen::Index j = 0; j < data.coords->cols(); ++j) out << ',' << format_double((*data.coords)(r, j));
    }
    out << '\n';
  }
}

void write_csv(const Dataset& data, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  write_csv(data, out);
}

namespace {

Dataset normal_design(std::size_t n, std::size_t p, Rng& rng) {
  Dataset d;
  d.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  for (Eigen::Index i = 0; i < d.features.rows(); ++i) {
    for (Eigen::Index j = 0; j < d.features.cols(); ++j) d.features(i, j) = rng.normal();
  }
  for (std::size_t j = 0; j < p; ++j) d.feature_names.push_back("x" + std::to_string(j + 1));
  return d;
}

}  // namespace

Dataset simulate_linear_gaussian(std::size_t n, std::span<const double> beta, double sigma, std::uint64_t seed) {
  if (n < beta.size() + 2) throw UsageError("simulate_linear_gaussian: n must be at least length(beta) + 2");
  if (!(sigma > 0.0)) throw UsageError("simulate_linear_gaussian: sigma must be positive");
  Rng rng(seed);
  Dataset d = normal_design(n, beta.size(), rng);
  const Eigen::Map<const Eigen::VectorXd> b(beta.data(), static_cast<Eigen::Index>(beta.size()));
  d.response = d.features * b;
  for (Eigen::Index i = 0; i < d.response.size(); ++i) d.response[i] += sigma * rng.normal();
  return d;
}

Dataset simulate_logistic(std::size_t n, double intercept, std::span<const double> beta, std::uint64_t seed) {
  if (n < beta.size() + 2) throw UsageError("simulate_logistic: n must be at least length(beta) + 2");
  Rng rng(seed);
  Dataset d = normal_design(n, beta.size(), rng);
  const Eigen::Map<const Eigen::VectorXd> b(beta.data(), static_cast<Eigen::Index>(beta.size()));
  const Eigen::VectorXd eta = (d.features * b).array() + intercept;
  d.response.resize(eta.size());
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    const double prob = 1.0 / (1.0 + std::exp(-eta[i]));
    d.response[i] = rng.uniform() < prob ? 1.0 : 0.0;
  }
  d.task = Task::classification;
  d.class_labels = {"0", "1"};
  return d;
}

Dataset simulate_growth(const GrowthSimulation& sim, std::uint64_t seed) {
  if (sim.groups < 1 || sim.per_group < 1) throw UsageError("simulate_growth: need at least one group and one row per group");
  Rng rng(seed);
  const std::size_t n = sim.groups * sim.per_group;
  Dataset d;
  d.features.resize(static_cast<Eigen::Index>(n), 2);
  d.response.resize(static_cast<Eigen::Index>(n));
  d.feature_names = {"age", "sex"};
  d.response_name = "length";
  std::vector<std::string> groups;
  Eigen::Index row = 0;
  for (std::size_t g = 0; g < sim.groups; ++g) {
    const double shift = sim.group_sd * rng.normal();
    for (std::size_t k = 0; k < sim.per_group; ++k, ++row) {
      const double age = 0.2 + (sim.max_age - 0.2) * rng.uniform();
      const double sex = rng.uniform() < 0.5 ? 0.0 : 1.0;
      const double asymptote = sim.asymptote + shift + (2.0 * sex - 1.0) * sim.sex_offset;
      const double mean = asymptote * (1.0 - std::exp(-sim.rate * (age - sim.origin)));
      d.features(row, 0) = age;
      d.features(row, 1) = sex;
      d.response[row] = mean + sim.noise_sd * rng.normal();
      groups.push_back("g" + std::to_string(g));
    }
  }
  d.groups = std::move(groups);
  return d;
}

Dataset demo_dataset(std::string_view name) {
  if (name == "linear") {
    const double beta[] = {1.5, -1.0, 0.5, 0.0, 0.0, 0.0};
    return simulate_linear_gaussian(100, beta, 1.0, 20211);
  }
  if (name == "classification") {
    const double beta[] = {1.2, -0.8, 0.5, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0};
    Dataset d = simulate_logistic(200, -0.3, beta, 20212);
    d.class_labels = {"absent", "present"};
    return d;
  }
  if (name == "growth") {
    GrowthSimulation sim;
    sim.sex_offset = 3.0;
    return simulate_growth(sim, 20213);
  }
  throw UsageError("unknown demo dataset: " + std::string(name));
}

std::vector<std::string> demo_names() { return {"linear", "classification", "growth"}; }

}  // namespace cvselect
