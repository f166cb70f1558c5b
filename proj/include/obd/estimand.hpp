// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "obd/decision.hpp"
#include "obd/posterior.hpp"
#include "obd/trial_core.hpp"

namespace obd {

enum class ResponseGrade { kCR, kPR, kSD, kPD, kNE };

enum class IceType {
  kToxDiscontinuation,
  kDeath,
  kAdditionalTherapy,
  kProgressionDiscontinuation,
  kAdaOccurrence,
  kDoseSwitch,
  kSurgery,
  kNonadherence,
  kSymptomaticDeterioration,
};

enum class SurgeryReason { kClinicianChoice, kTumorShrinkage, kExternalFactors };

enum class Strategy { kTreatmentPolicy, kComposite, kHypothetical, kWhileOnTreatment, kPrincipalStratum };

struct Assessment {
  ResponseGrade response = ResponseGrade::kNE;
};

struct Toxicity {
  int grade = 1;
  bool dlt = false;
};

struct Ice {
  IceType type = IceType::kToxDiscontinuation;
  std::optional<SurgeryReason> surgery_reason;
  std::optional<int> new_dose_index;

  /// Strategy-map key: "surgery:tumor_shrinkage" for surgery, the type name otherwise.
  std::string key() const;
};

struct Event {
  int day = 0;
  std::variant<Assessment, Toxicity, Ice> detail;
};

struct PatientRecord {
  std::string patient_id;
  int dose_index = 1;
  int first_dose_day = 0;
  std::vector<Event> events;
  std::optional<std::string> stratum_label;
  bool baseline_ok = true;
};

struct StrategyEntry {
  Strategy strategy = Strategy::kTreatmentPolicy;
  /// Composite handled as a success (Y_e = 1), e.g. surgery after tumor shrinkage.
  bool favorable = false;
};

enum class DoseSwitchAttribution { kStartingDose, kLastDose };

struct StrategyMap {
  std::string name;
  std::map<std::string, StrategyEntry> entries;
  std::set<ResponseGrade> efficacy_success_set{ResponseGrade::kCR, ResponseGrade::kPR};
  int dlt_window_days = 28;
  std::optional<std::string> analysis_stratum;
  DoseSwitchAttribution dose_switch_attribution = DoseSwitchAttribution::kStartingDose;

  /// Entry for an ICE; surgery looks up "surgery:<reason>" before "surgery".
  const StrategyEntry* find(const Ice& ice) const;

  /// Case-study defaults: one row per ICE of the estimand attribute table.
  static StrategyMap case_study();
  /// Every ICE type (and surgery reason) handled by the same strategy.
  static StrategyMap uniform(Strategy strategy, std::string name = {});
};

std::string to_string(ResponseGrade g);
std::string to_string(IceType t);
std::string to_string(SurgeryReason r);
std::string to_string(Strategy s);
ResponseGrade parse_response_grade(std::string_view s);
IceType parse_ice_type(std::string_view s);
SurgeryReason parse_surgery_reason(std::string_view s);
Strategy parse_strategy(std::string_view s);

/// Every ICE key a strategy map can carry.
std::vector<std::string> all_ice_keys();

/// The estimand question a strategy answers.
std::string clinical_question(Strategy s);

/// Death and toxicity discontinuation imply Y_t = 1 under the composite strategy.
bool toxicity_linked(IceType t);

ValidationReport validate_patient_record(const PatientRecord& record);

/// Hook mapping (Y_e, Y_t) to a category for specs beyond the canonical four.
using OutcomeClassifier = std::function<int(bool efficacy, bool toxicity, const PatientRecord& record)>;

/// Applies the ICE strategies in chronological order. The first terminal
/// strategy (composite or hypothetical) ends processing; while-on-treatment
/// truncates the timeline at the ICE day inclusive; treatment policy ignores
/// the ICE; principal stratum keeps the outcome but makes it non-evaluable
/// outside the declared analysis stratum.
/// Throws kUnmappedIce, kMissingStratumLabel, kValidation.
DerivedOutcome derive_outcome(const PatientRecord& record, const StrategyMap& map, const UtilitySpec& spec,
                              const OutcomeClassifier& classifier = {});

enum class AnalysisSetRule { kTreatedWithBaselineAndPostBaseline, kAllTreated, kCustom };

struct AnalysisSetSpec {
  AnalysisSetRule rule = AnalysisSetRule::kTreatedWithBaselineAndPostBaseline;
  std::function<bool(const PatientRecord&)> predicate;
};

struct Exclusion {
  std::string patient_id;
  int dose_index = 1;
  std::string reason;
};

struct AnalysisSet {
  std::vector<DerivedOutcome> outcomes;
  std::vector<Exclusion> excluded;
};

AnalysisSet build_analysis_set(std::span<const PatientRecord> records, const StrategyMap& map,
                               const UtilitySpec& spec, const AnalysisSetSpec& rule = {});

/// Per-dose states: counts from the analysis set, enrollment from every record.
std::vector<DoseState> tally(const AnalysisSet& set, int doses, int categories);

struct StrategyColumn {
  std::string name;
  std::string clinical_question;
  std::vector<DerivedOutcome> outcomes;
  std::vector<DoseState> states;
  std::vector<PosteriorSummary> summaries;
  ObdSelection selection;
};

struct StrategyComparison {
  std::vector<StrategyColumn> columns;
};

StrategyComparison compare_strategies(std::span<const PatientRecord> records, std::span<const StrategyMap> maps,
                                      const UtilitySpec& spec, const DesignConfig& config, int doses);

}  // namespace obd
