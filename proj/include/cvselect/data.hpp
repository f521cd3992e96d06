#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cvselect {

enum class Task { regression, classification };

std::string_view to_string(Task task) noexcept;
Task parse_task(std::string_view name);

/// Complete-case tabular data: an n x p feature matrix, a response and the
/// optional grouping, stratification and coordinate columns used by the
/// structured splitting schemes. Row i here is row i of the source file.
struct Dataset {
  Eigen::MatrixXd features;
  Eigen::VectorXd response;
  Task task = Task::regression;
  std::vector<std::string> feature_names;
  std::optional<std::vector<std::string>> groups;
  std::optional<std::vector<std::string>> strata;
  std::optional<Eigen::MatrixXd> coords;
  std::vector<std::string> coord_names;
  std::string response_name = "y";
  /// Classification only: original labels of codes 0 and 1.
  std::vector<std::string> class_labels;

  std::size_t n() const noexcept { return static_cast<std::size_t>(response.size()); }
  std::size_t p() const noexcept { return static_cast<std::size_t>(features.cols()); }

  /// Throws DataError if any invariant is violated.
  void validate() const;

  /// Rows in the given order; group/strata/coords follow the rows.
  Dataset subset(std::span<const std::size_t> rows) const;

  bool operator==(const Dataset& other) const;
};

struct CsvSchema {
  std::string response_column;
  /// Empty means every column not claimed by another role.
  std::vector<std::string> feature_columns;
  std::optional<std::string> group_column;
  std::optional<std::string> strata_column;
  std::vector<std::string> coord_columns;
  Task task = Task::regression;

  void validate() const;
};

/// Reads a comma-separated file with a header row. Non-numeric feature
/// columns are one-hot encoded (levels sorted, first level dropped, columns
/// named "column=level"). A classification response must have exactly two
/// distinct labels; they are coded 0/1 in lexicographic order.
Dataset load_csv(const std::filesystem::path& path, const CsvSchema& schema);
Dataset parse_csv(std::istream& in, const CsvSchema& schema);

/// Writes a dataset that load_csv(path, schema_for(data)) reads back exactly.
void write_csv(const Dataset& data, const std::filesystem::path& path);
void write_csv(const Dataset& data, std::ostream& out);
CsvSchema schema_for(const Dataset& data);

/// Standard normal features, response = X beta + N(0, sigma^2).
Dataset simulate_linear_gaussian(std::size_t n, std::span<const double> beta, double sigma, std::uint64_t seed);

/// Standard normal features, P(y = 1) = logistic(intercept + X beta).
Dataset simulate_logistic(std::size_t n, double intercept, std::span<const double> beta, std::uint64_t seed);

/// Length-at-age data from a von Bertalanffy curve with per-group shifts of
/// the asymptote. Features are (age, sex) with sex coded 0/1; groups are
/// named "g0", "g1", ...
struct GrowthSimulation {
  std::size_t groups = 10;
  std::size_t per_group = 20;
  double asymptote = 100.0;
  double rate = 0.5;
  double origin = -0.1;
  double sex_offset = 0.0;
  double group_sd = 5.0;
  double noise_sd = 2.0;
  double max_age = 8.0;
};
Dataset simulate_growth(const GrowthSimulation& sim, std::uint64_t seed);

/// Bundled demo datasets, generated from fixed seeds: "linear",
/// "classification", "growth".
Dataset demo_dataset(std::string_view name);
std::vector<std::string> demo_names();

}  // namespace cvselect
