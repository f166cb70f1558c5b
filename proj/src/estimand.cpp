// SPDX-License-Identifier: Apache-2.0
#include "obd/estimand.hpp"

#include <algorithm>
#include <array>
#include <climits>
#include <utility>

#include "obd/error.hpp"

namespace obd {
namespace {

template <typename Enum, size_t N>
Enum parse_enum(std::string_view s, const std::array<std::pair<Enum, std::string_view>, N>& table, const char* what) {
  for (const auto& [value, name] : table) {
    if (name == s) return value;
  }
  throw Error(ErrorKind::kValidation, std::string("unknown ") + what + " '" + std::string(s) + "'");
}

template <typename Enum, size_t N>
std::string name_of(Enum e, const std::array<std::pair<Enum, std::string_view>, N>& table) {
  for (const auto& [value, name] : table) {
    if (value == e) return std::string(name);
  }
  return "unknown";
}

constexpr std::array<std::pair<ResponseGrade, std::string_view>, 5> kGrades{{
    {ResponseGrade::kCR, "CR"},
    {ResponseGrade::kPR, "PR"},
    {ResponseGrade::kSD, "SD"},
    {ResponseGrade::kPD, "PD"},
    {ResponseGrade::kNE, "NE"},
}};

constexpr std::array<std::pair<IceType, std::string_view>, 9> kIceTypes{{
    {IceType::kToxDiscontinuation, "tox_discontinuation"},
    {IceType::kDeath, "death"},
    {IceType::kAdditionalTherapy, "additional_therapy"},
    {IceType::kProgressionDiscontinuation, "progression_discontinuation"},
    {IceType::kAdaOccurrence, "ada_occurrence"},
    {IceType::kDoseSwitch, "dose_switch"},
    {IceType::kSurgery, "surgery"},
    {IceType::kNonadherence, "nonadherence"},
    {IceType::kSymptomaticDeterioration, "symptomatic_deterioration"},
}};

constexpr std::array<std::pair<SurgeryReason, std::string_view>, 3> kSurgeryReasons{{
    {SurgeryReason::kClinicianChoice, "clinician_choice"},
    {SurgeryReason::kTumorShrinkage, "tumor_shrinkage"},
    {SurgeryReason::kExternalFactors, "external_factors"},
}};

constexpr std::array<std::pair<Strategy, std::string_view>, 5> kStrategies{{
    {Strategy::kTreatmentPolicy, "treatment_policy"},
    {Strategy::kComposite, "composite"},
    {Strategy::kHypothetical, "hypothetical"},
    {Strategy::kWhileOnTreatment, "while_on_treatment"},
    {Strategy::kPrincipalStratum, "principal_stratum"},
}};

bool is_discontinuation(IceType t) {
  return t == IceType::kToxDiscontinuation || t == IceType::kProgressionDiscontinuation || t == IceType::kDeath ||
         t == IceType::kSymptomaticDeterioration;
}

}  // namespace

std::string to_string(ResponseGrade g) { return name_of(g, kGrades); }
std::string to_string(IceType t) { return name_of(t, kIceTypes); }
std::string to_string(SurgeryReason r) { return name_of(r, kSurgeryReasons); }
std::string to_string(Strategy s) { return name_of(s, kStrategies); }
ResponseGrade parse_response_grade(std::string_view s) { return parse_enum(s, kGrades, "response grade"); }
IceType parse_ice_type(std::string_view s) { return parse_enum(s, kIceTypes, "ICE type"); }
SurgeryReason parse_surgery_reason(std::string_view s) { return parse_enum(s, kSurgeryReasons, "surgery reason"); }
Strategy parse_strategy(std::string_view s) { return parse_enum(s, kStrategies, "strategy"); }

std::string Ice::key() const {
  if (type == IceType::kSurgery && surgery_reason) return "surgery:" + to_string(*surgery_reason);
  return to_string(type);
}

std::vector<std::string> all_ice_keys() {
  std::vector<std::string> keys;
  for (const auto& [type, name] : kIceTypes) {
    if (type == IceType::kSurgery) {
      for (const auto& [reason, rname] : kSurgeryReasons) keys.push_back("surgery:" + std::string(rname));
    } else {
      keys.emplace_back(name);
    }
  }
  return keys;
}

std::string clinical_question(Strategy s) {
  switch (s) {
    case Strategy::kTreatmentPolicy: return "utility score regardless of the ICE";
    case Strategy::kComposite: return "utility score counting the ICE as a failure event";
    case Strategy::kHypothetical: return "utility score had the ICE not occurred";
    case Strategy::kWhileOnTreatment: return "utility score prior to the ICE";
    case Strategy::kPrincipalStratum: return "utility score in the stratum not experiencing the ICE";
  }
  return {};
}

bool toxicity_linked(IceType t) { return t == IceType::kToxDiscontinuation || t == IceType::kDeath; }

const StrategyEntry* StrategyMap::find(const Ice& ice) const {
  if (auto it = entries.find(ice.key()); it != entries.end()) return &it->second;
  if (auto it = entries.find(to_string(ice.type)); it != entries.end()) return &it->second;
  return nullptr;
}

StrategyMap StrategyMap::case_study() {
  StrategyMap m;
  m.name = "case_study_default";
  m.entries = {
      {"tox_discontinuation", {Strategy::kComposite, false}},
      {"death", {Strategy::kComposite, false}},
      {"additional_therapy", {Strategy::kWhileOnTreatment, false}},
      {"progression_discontinuation", {Strategy::kComposite, false}},
      {"ada_occurrence", {Strategy::kTreatmentPolicy, false}},
      {"dose_switch", {Strategy::kTreatmentPolicy, false}},
      {"surgery:clinician_choice", {Strategy::kWhileOnTreatment, false}},
      {"surgery:tumor_shrinkage", {Strategy::kComposite, true}},
      {"surgery:external_factors", {Strategy::kHypothetical, false}},
      {"nonadherence", {Strategy::kTreatmentPolicy, false}},
      {"symptomatic_deterioration", {Strategy::kHypothetical, false}},
  };
  return m;
}

StrategyMap StrategyMap::uniform(Strategy strategy, std::string name) {
  StrategyMap m;
  m.name = name.empty() ? to_string(strategy) : std::move(name);
  for (const auto& key : all_ice_keys()) m.entries[key] = {strategy, false};
  return m;
}

ValidationReport validate_patient_record(const PatientRecord& record) {
  ValidationReport report;
  if (record.patient_id.empty()) report.push_back("patient_id must be non-empty");
  if (record.dose_index < 1) report.push_back("dose_index must be at least 1");
  if (record.first_dose_day < 0) report.push_back("first_dose_day must be non-negative");
  int deaths = 0;
  for (size_t i = 0; i < record.events.size(); ++i) {
    const auto& ev = record.events[i];
    if (i > 0 && ev.day < record.events[i - 1].day) report.push_back("events must be sorted by day");
    if (ev.day < record.first_dose_day) report.push_back("event before first dose");
    if (const auto* tox = std::get_if<Toxicity>(&ev.detail)) {
      if (tox->grade < 1 || tox->grade > 5) report.push_back("toxicity grade must be 1..5");
    }
    if (const auto* ice = std::get_if<Ice>(&ev.detail)) {
      if (ice->type == IceType::kDeath) ++deaths;
      if (ice->type == IceType::kSurgery && !ice->surgery_reason) report.push_back("surgery must carry a reason");
      if (ice->type == IceType::kDoseSwitch && (!ice->new_dose_index || *ice->new_dose_index < 1)) {
        report.push_back("dose_switch must carry a valid new_dose_index");
      }
    }
  }
  if (deaths > 1) report.push_back("at most one death event");
  return report;
}

DerivedOutcome derive_outcome(const PatientRecord& record, const StrategyMap& map, const UtilitySpec& spec,
                              const OutcomeClassifier& classifier) {
  if (const auto report = validate_patient_record(record); !report.empty()) {
    throw Error(ErrorKind::kValidation, "patient " + record.patient_id + ": " + report.front());
  }
  DerivedOutcome out;
  out.patient_id = record.patient_id;
  out.dose_index = record.dose_index;

  int cutoff = INT_MAX;
  struct Terminal {
    const Ice* ice;
    int day;
    StrategyEntry entry;
  };
  std::optional<Terminal> terminal;
  bool outside_stratum = false;

  for (const auto& ev : record.events) {
    const auto* ice = std::get_if<Ice>(&ev.detail);
    if (ice == nullptr) continue;
    const std::string type = ice->key();
    if (terminal || ev.day > cutoff) {
      out.strategy_trace.push_back({type, "none", "not applied: occurs after the outcome was fixed"});
      continue;
    }
    const StrategyEntry* entry = map.find(*ice);
    if (entry == nullptr) throw Error(ErrorKind::kUnmappedIce, "no strategy for ICE '" + type + "'");
    const std::string strategy = to_string(entry->strategy);
    switch (entry->strategy) {
      case Strategy::kTreatmentPolicy:
        if (ice->type == IceType::kDoseSwitch && ice->new_dose_index &&
            map.dose_switch_attribution == DoseSwitchAttribution::kLastDose) {
          out.dose_index = *ice->new_dose_index;
          out.strategy_trace.push_back({type, strategy, "outcome attributed to dose " + std::to_string(out.dose_index)});
        } else {
          out.strategy_trace.push_back({type, strategy, "ignored; data before and after day " +
                                                             std::to_string(ev.day) + " retained"});
        }
        break;
      case Strategy::kWhileOnTreatment:
        cutoff = ev.day;
        out.strategy_trace.push_back({type, strategy, "timeline truncated after day " + std::to_string(ev.day)});
        break;
      case Strategy::kComposite:
        terminal = Terminal{ice, ev.day, *entry};
        out.strategy_trace.push_back(
            {type, strategy, entry->favorable ? "ICE counted as efficacy success" : "ICE counted as efficacy failure"});
        break;
      case Strategy::kHypothetical:
        terminal = Terminal{ice, ev.day, *entry};
        out.strategy_trace.push_back({type, strategy, "outcome set missing; flagged for sensitivity analysis"});
        break;
      case Strategy::kPrincipalStratum:
        if (!record.stratum_label) {
          throw Error(ErrorKind::kMissingStratumLabel, "patient " + record.patient_id + " has no stratum label");
        }
        if (!map.analysis_stratum) {
          throw Error(ErrorKind::kMissingStratumLabel, "strategy map declares no analysis stratum");
        }
        if (*record.stratum_label != *map.analysis_stratum) {
          outside_stratum = true;
          out.strategy_trace.push_back({type, strategy, "outside analysis stratum '" + *map.analysis_stratum + "'"});
        } else {
          out.strategy_trace.push_back({type, strategy, "within analysis stratum '" + *map.analysis_stratum + "'"});
        }
        break;
    }
  }

  if (terminal && terminal->entry.strategy == Strategy::kHypothetical) {
    out.evaluable = false;
    out.flagged_for_sensitivity = true;
    return out;
  }

  const int window_end = terminal ? std::min(cutoff, terminal->day) : cutoff;
  const int dlt_end = record.first_dose_day + map.dlt_window_days;
  bool efficacy = false;
  bool toxicity = false;
  for (const auto& ev : record.events) {
    if (ev.day > window_end) break;
    if (const auto* a = std::get_if<Assessment>(&ev.detail)) {
      if (map.efficacy_success_set.contains(a->response)) efficacy = true;
    } else if (const auto* t = std::get_if<Toxicity>(&ev.detail)) {
      if (t->dlt && ev.day <= dlt_end) toxicity = true;
    }
  }
  if (terminal) {
    efficacy = terminal->entry.favorable;
    if (toxicity_linked(terminal->ice->type)) toxicity = true;
  }

  out.efficacy = efficacy;
  out.toxicity = toxicity;
  out.category = classifier ? classifier(efficacy, toxicity, record) : classify_outcome(efficacy, toxicity, spec);
  out.evaluable = !outside_stratum;
  return out;
}

AnalysisSet build_analysis_set(std::span<const PatientRecord> records, const StrategyMap& map,
                               const UtilitySpec& spec, const AnalysisSetSpec& rule) {
  AnalysisSet set;
  for (const auto& r : records) {
    std::optional<std::string> reason;
    switch (rule.rule) {
      case AnalysisSetRule::kAllTreated: break;
      case AnalysisSetRule::kCustom:
        if (rule.predicate && !rule.predicate(r)) reason = "excluded by custom predicate";
        break;
      case AnalysisSetRule::kTreatedWithBaselineAndPostBaseline: {
        if (!r.baseline_ok) {
          reason = "no baseline assessment";
          break;
        }
        std::optional<int> first_assessment;
        std::optional<int> first_discontinuation;
        for (const auto& ev : r.events) {
          if (!first_assessment && std::holds_alternative<Assessment>(ev.detail)) first_assessment = ev.day;
          if (const auto* ice = std::get_if<Ice>(&ev.detail);
              ice && !first_discontinuation && is_discontinuation(ice->type)) {
            first_discontinuation = ev.day;
          }
        }
        if (!first_assessment && !first_discontinuation) {
          reason = "no post-baseline response assessment and no discontinuation";
        }
        break;
      }
    }
    if (reason) {
      set.excluded.push_back({r.patient_id, r.dose_index, *reason});
    } else {
      set.outcomes.push_back(derive_outcome(r, map, spec));
    }
  }
  return set;
}

std::vector<DoseState> tally(const AnalysisSet& set, int doses, int categories) {
  std::vector<DoseState> states;
  states.reserve(static_cast<size_t>(doses));
  for (int j = 1; j <= doses; ++j) states.push_back(DoseState::empty(j, categories));
  for (const auto& o : set.outcomes) {
    if (o.dose_index < 1 || o.dose_index > doses) {
      throw Error(ErrorKind::kDoseMismatch, "outcome for patient " + o.patient_id + " outside the dose grid");
    }
    auto& s = states[static_cast<size_t>(o.dose_index - 1)];
    s = record_outcomes(s, std::span<const DerivedOutcome>(&o, 1));
  }
  for (const auto& e : set.excluded) {
    if (e.dose_index < 1 || e.dose_index > doses) {
      throw Error(ErrorKind::kDoseMismatch, "patient " + e.patient_id + " outside the dose grid");
    }
    ++states[static_cast<size_t>(e.dose_index - 1)].n_enrolled;
  }
  return states;
}

StrategyComparison compare_strategies(std::span<const PatientRecord> records, std::span<const StrategyMap> maps,
                                      const UtilitySpec& spec, const DesignConfig& config, int doses) {
  if (maps.empty()) throw Error(ErrorKind::kValidation, "compare_strategies needs at least one strategy map");
  StrategyComparison cmp;
  for (size_t i = 0; i < maps.size(); ++i) {
    const auto& map = maps[i];
    StrategyColumn col;
    col.name = map.name.empty() ? "map_" + std::to_string(i + 1) : map.name;
    std::set<Strategy> used;
    for (const auto& [key, entry] : map.entries) used.insert(entry.strategy);
    col.clinical_question = used.size() == 1 ? clinical_question(*used.begin()) : "mixed: per-ICE strategies";
    const auto set = build_analysis_set(records, map, spec);
    col.outcomes = set.outcomes;
    col.states = tally(set, doses, spec.size());
    col.summaries = summarize_all(col.states, spec, config);
    col.selection = select_obd(col.summaries, config);
    cmp.columns.push_back(std::move(col));
  }
  return cmp;
}

}  // namespace obd
