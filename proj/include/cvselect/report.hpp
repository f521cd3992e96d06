#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>

#include <json.hpp>

#include "cvselect/engine.hpp"
#include "cvselect/experiments.hpp"
#include "cvselect/selection.hpp"

namespace cvselect {

inline constexpr int kSchemaVersion = 1;
inline constexpr std::string_view kToolkitVersion = "0.1.0";

/// Top-level wrapper of every report file.
struct ReportEnvelope {
  int schema_version = kSchemaVersion;
  std::string toolkit_version{kToolkitVersion};
  nlohmann::json config = nlohmann::json::object();
  /// ISO 8601 UTC. Honors SOURCE_DATE_EPOCH when set.
  std::string created;
  std::string plan_fingerprint;
  /// One of: plan, score, selection, lambda_tuning, nested, experiment.
  std::string payload_type;
  nlohmann::json payload;
  /// Top-level keys this version does not know, kept for re-serialisation.
  nlohmann::json extra = nlohmann::json::object();

  bool operator==(const ReportEnvelope&) const = default;
};

std::string current_timestamp();

ReportEnvelope make_envelope(std::string payload_type, nlohmann::json payload, nlohmann::json config,
                             std::string plan_fingerprint = {});

nlohmann::json to_json(const ScoreEstimate& est);
ScoreEstimate score_estimate_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SelectionResult& res);
nlohmann::json to_json(const LambdaTuning& t);
nlohmann::json to_json(const NestedResult& r);
nlohmann::json to_json(const ExperimentReport& r);
nlohmann::json to_json(const ReportEnvelope& env);
ReportEnvelope envelope_from_json(const nlohmann::json& j);

/// Throws UsageError naming the JSON path of the first NaN or infinity.
void reject_non_finite(const nlohmann::json& j);

/// Canonical text: sorted keys, two-space indent, shortest round-trip
/// floats, trailing newline.
std::string serialize(const nlohmann::json& j);
std::string serialize_report(const ReportEnvelope& env);

void write_report(const ReportEnvelope& env, const std::filesystem::path& path);
void write_text(const std::string& text, const std::filesystem::path& path);
/// Parse errors report the byte offset; unsupported versions name the
/// expected and found values.
ReportEnvelope parse_report(std::string_view text);
ReportEnvelope read_report(const std::filesystem::path& path);

/// index,loss sidecar for a pointwise score.
void write_pointwise_csv(const ScoreEstimate& est, std::ostream& out);

}  // namespace cvselect
