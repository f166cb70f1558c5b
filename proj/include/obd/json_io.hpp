// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>

#include "json.hpp"

#include "obd/decision.hpp"
#include "obd/error.hpp"
#include "obd/estimand.hpp"
#include "obd/posterior.hpp"
#include "obd/sensitivity.hpp"
#include "obd/simulator.hpp"
#include "obd/trial_core.hpp"
#include "obd/trial_state.hpp"

namespace obd {

using json = nlohmann::json;

inline constexpr std::string_view kSchemaVersion = "v1";

void to_json(json& j, const UtilitySpec& v);
void from_json(const json& j, UtilitySpec& v);
void to_json(json& j, const DoseLevel& v);
void from_json(const json& j, DoseLevel& v);
void to_json(json& j, const DoseGrid& v);
void from_json(const json& j, DoseGrid& v);
void to_json(json& j, const DoseState& v);
void from_json(const json& j, DoseState& v);
void to_json(json& j, const DesignConfig& v);
void from_json(const json& j, DesignConfig& v);
void to_json(json& j, const StrategyTraceEntry& v);
void to_json(json& j, const DerivedOutcome& v);
void from_json(const json& j, DerivedOutcome& v);

void to_json(json& j, const Event& v);
void from_json(const json& j, Event& v);
void to_json(json& j, const PatientRecord& v);
void from_json(const json& j, PatientRecord& v);
void to_json(json& j, const StrategyMap& v);
void from_json(const json& j, StrategyMap& v);
void to_json(json& j, const Exclusion& v);
void to_json(json& j, const StrategyComparison& v);

void to_json(json& j, const PosteriorSummary& v);
void from_json(const json& j, PosteriorSummary& v);
void to_json(json& j, const BoinBoundaries& v);
void to_json(json& j, const AdmissibleSet& v);
void to_json(json& j, const ObdSelection& v);
void to_json(json& j, const Decision& v);
void from_json(const json& j, Decision& v);
void to_json(json& j, const RandomizationWeights& v);
void to_json(json& j, const DecisionTable& v);

void to_json(json& j, const Scenario& v);
void from_json(const json& j, Scenario& v);
void to_json(json& j, const TrialResult& v);
void to_json(json& j, const OperatingCharacteristics& v);

void to_json(json& j, const TippingReport& v);
void to_json(json& j, const PriorSensitivity& v);
void to_json(json& j, const StrategySensitivity& v);

void to_json(json& j, const TrialState& v);
void from_json(const json& j, TrialState& v);
void to_json(json& j, const Recommendation& v);

/// Serializes a value as a top-level document tagged with the schema version.
template <typename T>
json document(const T& value) {
  json j = value;
  if (j.is_object()) j["version"] = kSchemaVersion;
  return j;
}

/// Parses a document, turning schema and type errors into kValidation.
template <typename T>
T parse_document(const json& j) {
  try {
    if (j.is_object() && j.contains("version") && j.at("version") != kSchemaVersion) {
      throw Error(ErrorKind::kValidation, "unsupported schema version " + j.at("version").dump());
    }
    return j.get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kValidation, e.what());
  }
}

/// Parses JSON text; syntax errors become kValidation.
json parse_json(std::string_view text);
json read_json_file(const std::string& path);
/// One PatientRecord per non-empty line, or a single JSON array.
std::vector<PatientRecord> read_records_file(const std::string& path);

}  // namespace obd
