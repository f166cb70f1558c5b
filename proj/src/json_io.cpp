// SPDX-License-Identifier: Apache-2.0
#include "obd/json_io.hpp"

#include <array>
#include <fstream>
#include <sstream>
#include <utility>

namespace obd {

namespace {

template <typename Enum, size_t N>
using NameTable = std::array<std::pair<Enum, const char*>, N>;

constexpr NameTable<AssignmentMode, 3> kModes{{{AssignmentMode::kDeterministic, "deterministic"},
                                                {AssignmentMode::kAdaptiveRandomization, "adaptive_randomization"},
                                                {AssignmentMode::kEqualRandomization, "equal_randomization"}}};
constexpr NameTable<FutilityRule, 2> kFutility{{{FutilityRule::kLowerTail, "lower_tail"},
                                                {FutilityRule::kUpperTail, "upper_tail"}}};
constexpr NameTable<DesignVariant, 2> kDesigns{{{DesignVariant::kBoin12, "boin12"},
                                                {DesignVariant::kBoinToxicityOnly, "boin_toxicity_only"}}};
constexpr NameTable<DoseSwitchAttribution, 2> kAttribution{
    {{DoseSwitchAttribution::kStartingDose, "starting_dose"}, {DoseSwitchAttribution::kLastDose, "last_dose"}}};
constexpr NameTable<DecisionKind, 5> kKinds{{{DecisionKind::kEscalate, "escalate"},
                                             {DecisionKind::kStay, "stay"},
                                             {DecisionKind::kDeEscalate, "de_escalate"},
                                             {DecisionKind::kEliminateAndDeEscalate, "eliminate_and_de_escalate"},
                                             {DecisionKind::kTerminate, "terminate"}}};
constexpr NameTable<StopReason, 5> kStops{{{StopReason::kNone, "none"},
                                           {StopReason::kMaxSampleSize, "max_n_reached"},
                                           {StopReason::kPerDoseCap, "per_dose_cap_reached"},
                                           {StopReason::kLowestDoseToxic, "lowest_dose_toxic"},
                                           {StopReason::kNoAdmissibleDose, "no_admissible_dose"}}};

template <typename Enum, size_t N>
const char* name_of(Enum e, const NameTable<Enum, N>& table) {
  for (const auto& [v, name] : table) {
    if (v == e) return name;
  }
  return table.front().second;
}

template <typename Enum, size_t N>
Enum enum_of(const json& j, const NameTable<Enum, N>& table, const char* what) {
  const auto s = j.get<std::string>();
  for (const auto& [v, name] : table) {
    if (s == name) return v;
  }
  throw Error(ErrorKind::kValidation, std::string("unknown ") + what + " '" + s + "'");
}

template <typename T>
void put_optional(json& j, const char* key, const std::optional<T>& v) {
  j[key] = v ? json(*v) : json(nullptr);
}

template <typename T>
std::optional<T> get_optional(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

template <typename T>
void get_if_present(const json& j, const char* key, T& out) {
  if (j.contains(key) && !j.at(key).is_null()) out = j.at(key).get<T>();
}

}  // namespace

// ---- trial core ----

void to_json(json& j, const UtilitySpec& v) {
  j = json::object();
  json cats = json::array();
  for (const auto& c : v.categories) cats.push_back({{"efficacy", c.efficacy}, {"toxicity", c.toxicity}, {"psi", c.psi}});
  j["categories"] = std::move(cats);
}

void from_json(const json& j, UtilitySpec& v) {
  if (j.is_array()) {
    // Shorthand: four scores in canonical category order.
    const auto psi = j.get<std::vector<double>>();
    if (psi.size() != 4) throw Error(ErrorKind::kValidation, "psi shorthand needs four scores");
    v = UtilitySpec::canonical(psi[0], psi[1], psi[2], psi[3]);
    return;
  }
  if (j.contains("psi") && !j.contains("categories")) {
    from_json(j.at("psi"), v);
    return;
  }
  v.categories.clear();
  for (const auto& c : j.at("categories")) {
    v.categories.push_back({c.at("efficacy").get<bool>(), c.at("toxicity").get<bool>(), c.at("psi").get<double>()});
  }
}

void to_json(json& j, const DoseLevel& v) {
  j = {{"index", v.index}, {"label", v.label}, {"amount", v.amount}, {"unit", v.unit}};
}

void from_json(const json& j, DoseLevel& v) {
  v.index = j.at("index").get<int>();
  v.label = j.value("label", "");
  v.amount = j.value("amount", 0.0);
  v.unit = j.value("unit", "");
}

void to_json(json& j, const DoseGrid& v) { j = {{"doses", v.doses}}; }

void from_json(const json& j, DoseGrid& v) {
  if (j.is_number_integer()) {
    v = DoseGrid::numbered(j.get<int>());
  } else if (j.contains("levels")) {
    v = DoseGrid::numbered(j.at("levels").get<int>());
  } else {
    v.doses = j.at("doses").get<std::vector<DoseLevel>>();
  }
}

void to_json(json& j, const DoseState& v) {
  j = {{"dose_index", v.dose_index}, {"counts", v.counts}, {"n_enrolled", v.n_enrolled}};
}

void from_json(const json& j, DoseState& v) {
  v.dose_index = j.at("dose_index").get<int>();
  v.counts = j.at("counts").get<std::vector<int>>();
  int n = 0;
  for (int c : v.counts) n += c;
  v.n_enrolled = j.value("n_enrolled", n);
}

void to_json(json& j, const DesignConfig& v) {
  j = {{"prior_alpha", v.prior_alpha},
       {"phi_t", v.phi_t},
       {"phi_e", v.phi_e},
       {"delta_t", v.delta_t},
       {"delta_e", v.delta_e},
       {"lambda_e", v.lambda_e},
       {"lambda_d", v.lambda_d},
       {"target_phi", v.target_phi},
       {"cohort_size", v.cohort_size},
       {"max_n", v.max_n},
       {"per_dose_cap", v.per_dose_cap},
       {"start_dose", v.start_dose},
       {"assignment_mode", name_of(v.assignment_mode, kModes)},
       {"futility_rule", name_of(v.futility_rule, kFutility)},
       {"design", name_of(v.design, kDesigns)}};
  if (v.accelerated_titration) {
    j["accelerated_titration"] = {{"trigger_grade", v.accelerated_titration->trigger_grade},
                                  {"trigger_dose_index", v.accelerated_titration->trigger_dose_index}};
  } else {
    j["accelerated_titration"] = nullptr;
  }
}

void from_json(const json& j, DesignConfig& v) {
  // Absent fields keep the case-study defaults; absent boundaries are derived
  // from target_phi.
  v = DesignConfig::case_study();
  get_if_present(j, "prior_alpha", v.prior_alpha);
  get_if_present(j, "phi_t", v.phi_t);
  get_if_present(j, "phi_e", v.phi_e);
  get_if_present(j, "delta_t", v.delta_t);
  get_if_present(j, "delta_e", v.delta_e);
  get_if_present(j, "target_phi", v.target_phi);
  get_if_present(j, "cohort_size", v.cohort_size);
  get_if_present(j, "max_n", v.max_n);
  get_if_present(j, "per_dose_cap", v.per_dose_cap);
  get_if_present(j, "start_dose", v.start_dose);
  if (j.contains("assignment_mode")) v.assignment_mode = enum_of(j.at("assignment_mode"), kModes, "assignment mode");
  if (j.contains("futility_rule")) v.futility_rule = enum_of(j.at("futility_rule"), kFutility, "futility rule");
  if (j.contains("design")) v.design = enum_of(j.at("design"), kDesigns, "design");
  if (j.contains("accelerated_titration")) {
    const auto& t = j.at("accelerated_titration");
    if (t.is_null() || (t.is_boolean() && !t.get<bool>())) {
      v.accelerated_titration.reset();
    } else if (t.is_boolean()) {
      v.accelerated_titration = AcceleratedTitration{};
    } else {
      AcceleratedTitration at;
      get_if_present(t, "trigger_grade", at.trigger_grade);
      get_if_present(t, "trigger_dose_index", at.trigger_dose_index);
      v.accelerated_titration = at;
    }
  }
  const bool has_e = j.contains("lambda_e") && !j.at("lambda_e").is_null();
  const bool has_d = j.contains("lambda_d") && !j.at("lambda_d").is_null();
  if (has_e && has_d) {
    v.lambda_e = j.at("lambda_e").get<double>();
    v.lambda_d = j.at("lambda_d").get<double>();
  } else {
    const auto b = boin_boundaries(v.target_phi);
    v.lambda_e = has_e ? j.at("lambda_e").get<double>() : b.lambda_e;
    v.lambda_d = has_d ? j.at("lambda_d").get<double>() : b.lambda_d;
  }
}

void to_json(json& j, const StrategyTraceEntry& v) {
  j = {{"ice_type", v.ice_type}, {"strategy", v.strategy}, {"effect", v.effect}};
}

void to_json(json& j, const DerivedOutcome& v) {
  j = {{"patient_id", v.patient_id},
       {"dose_index", v.dose_index},
       {"evaluable", v.evaluable},
       {"flagged_for_sensitivity", v.flagged_for_sensitivity},
       {"strategy_trace", v.strategy_trace}};
  put_optional(j, "category", v.category);
  put_optional(j, "efficacy", v.efficacy);
  put_optional(j, "toxicity", v.toxicity);
}

void from_json(const json& j, DerivedOutcome& v) {
  v.patient_id = j.at("patient_id").get<std::string>();
  v.dose_index = j.at("dose_index").get<int>();
  v.category = get_optional<int>(j, "category");
  v.evaluable = j.value("evaluable", v.category.has_value());
  v.flagged_for_sensitivity = j.value("flagged_for_sensitivity", false);
  v.efficacy = get_optional<bool>(j, "efficacy");
  v.toxicity = get_optional<bool>(j, "toxicity");
  v.strategy_trace.clear();
  if (j.contains("strategy_trace")) {
    for (const auto& t : j.at("strategy_trace")) {
      v.strategy_trace.push_back(
          {t.at("ice_type").get<std::string>(), t.at("strategy").get<std::string>(), t.value("effect", "")});
    }
  }
}

// ---- estimand ----

void to_json(json& j, const Event& v) {
  j = {{"day", v.day}};
  std::visit(
      [&](const auto& d) {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, Assessment>) {
          j["kind"] = "assessment";
          j["response"] = to_string(d.response);
        } else if constexpr (std::is_same_v<T, Toxicity>) {
          j["kind"] = "toxicity";
          j["grade"] = d.grade;
          j["dlt"] = d.dlt;
        } else {
          j["kind"] = "ice";
          j["ice_type"] = to_string(d.type);
          if (d.surgery_reason) j["reason"] = to_string(*d.surgery_reason);
          if (d.new_dose_index) j["new_dose_index"] = *d.new_dose_index;
        }
      },
      v.detail);
}

void from_json(const json& j, Event& v) {
  v.day = j.at("day").get<int>();
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "assessment") {
    v.detail = Assessment{parse_response_grade(j.at("response").get<std::string>())};
  } else if (kind == "toxicity") {
    v.detail = Toxicity{j.at("grade").get<int>(), j.value("dlt", false)};
  } else if (kind == "ice") {
    Ice ice;
    ice.type = parse_ice_type(j.at("ice_type").get<std::string>());
    if (const auto r = get_optional<std::string>(j, "reason")) ice.surgery_reason = parse_surgery_reason(*r);
    ice.new_dose_index = get_optional<int>(j, "new_dose_index");
    v.detail = ice;
  } else {
    throw Error(ErrorKind::kValidation, "unknown event kind '" + kind + "'");
  }
}

void to_json(json& j, const PatientRecord& v) {
  j = {{"patient_id", v.patient_id},
       {"dose_index", v.dose_index},
       {"first_dose_day", v.first_dose_day},
       {"baseline_ok", v.baseline_ok},
       {"events", v.events}};
  put_optional(j, "stratum_label", v.stratum_label);
}

void from_json(const json& j, PatientRecord& v) {
  v.patient_id = j.at("patient_id").get<std::string>();
  v.dose_index = j.at("dose_index").get<int>();
  v.first_dose_day = j.value("first_dose_day", 0);
  v.baseline_ok = j.value("baseline_ok", true);
  v.events = j.value("events", std::vector<Event>{});
  v.stratum_label = get_optional<std::string>(j, "stratum_label");
}

void to_json(json& j, const StrategyMap& v) {
  json entries = json::object();
  for (const auto& [key, e] : v.entries) {
    if (e.favorable) {
      entries[key] = {{"strategy", to_string(e.strategy)}, {"favorable", true}};
    } else {
      entries[key] = to_string(e.strategy);
    }
  }
  json success = json::array();
  for (auto g : v.efficacy_success_set) success.push_back(to_string(g));
  j = {{"name", v.name},
       {"entries", std::move(entries)},
       {"efficacy_success_set", std::move(success)},
       {"dlt_window_days", v.dlt_window_days},
       {"dose_switch_attribution", name_of(v.dose_switch_attribution, kAttribution)}};
  put_optional(j, "analysis_stratum", v.analysis_stratum);
}

void from_json(const json& j, StrategyMap& v) {
  v = StrategyMap{};
  v.name = j.value("name", "");
  for (const auto& [key, e] : j.at("entries").items()) {
    StrategyEntry entry;
    if (e.is_string()) {
      entry.strategy = parse_strategy(e.get<std::string>());
    } else {
      entry.strategy = parse_strategy(e.at("strategy").get<std::string>());
      entry.favorable = e.value("favorable", false);
    }
    v.entries[key] = entry;
  }
  if (j.contains("efficacy_success_set")) {
    v.efficacy_success_set.clear();
    for (const auto& g : j.at("efficacy_success_set")) v.efficacy_success_set.insert(parse_response_grade(g.get<std::string>()));
  }
  get_if_present(j, "dlt_window_days", v.dlt_window_days);
  v.analysis_stratum = get_optional<std::string>(j, "analysis_stratum");
  if (j.contains("dose_switch_attribution")) {
    v.dose_switch_attribution = enum_of(j.at("dose_switch_attribution"), kAttribution, "dose switch attribution");
  }
}

void to_json(json& j, const Exclusion& v) {
  j = {{"patient_id", v.patient_id}, {"dose_index", v.dose_index}, {"reason", v.reason}};
}

void to_json(json& j, const StrategyComparison& v) {
  j = json::object();
  json cols = json::array();
  for (const auto& c : v.columns) {
    cols.push_back({{"name", c.name},
                    {"clinical_question", c.clinical_question},
                    {"outcomes", c.outcomes},
                    {"states", c.states},
                    {"summaries", c.summaries},
                    {"selection", c.selection}});
  }
  j["columns"] = std::move(cols);
}

// ---- posterior and decisions ----

void to_json(json& j, const PosteriorSummary& v) {
  j = {{"dose_index", v.dose_index}, {"mean_utility", v.mean_utility}, {"mean_tox", v.mean_tox},
       {"mean_eff", v.mean_eff},     {"prob_toxic", v.prob_toxic},     {"prob_futile", v.prob_futile},
       {"n", v.n},                   {"n_tox", v.n_tox},               {"n_eff", v.n_eff},
       {"n_enrolled", v.n_enrolled}};
}

void from_json(const json& j, PosteriorSummary& v) {
  v.dose_index = j.at("dose_index").get<int>();
  v.mean_utility = j.at("mean_utility").get<double>();
  v.mean_tox = j.at("mean_tox").get<double>();
  v.mean_eff = j.at("mean_eff").get<double>();
  v.prob_toxic = j.at("prob_toxic").get<double>();
  v.prob_futile = j.at("prob_futile").get<double>();
  v.n = j.at("n").get<int>();
  v.n_tox = j.at("n_tox").get<int>();
  v.n_eff = j.at("n_eff").get<int>();
  v.n_enrolled = j.value("n_enrolled", v.n);
}

void to_json(json& j, const BoinBoundaries& v) { j = {{"lambda_e", v.lambda_e}, {"lambda_d", v.lambda_d}}; }

void to_json(json& j, const AdmissibleSet& v) {
  json flags = json::array();
  for (const auto& f : v.flags) {
    flags.push_back({{"dose_index", f.dose_index}, {"toxic", f.toxic}, {"futile", f.futile}, {"untested", f.untested}});
  }
  j = {{"dose_indices", v.dose_indices}, {"flags", std::move(flags)}};
}

void to_json(json& j, const ObdSelection& v) {
  json tested = json::array();
  for (const auto& t : v.tested) tested.push_back({{"dose_index", t.dose_index}, {"n_tox", t.n_tox}, {"n", t.n}});
  j = {{"tested", std::move(tested)},
       {"isotonic", v.isotonic},
       {"admissible", v.admissible},
       {"rationale", v.rationale}};
  put_optional(j, "obd", v.obd);
  put_optional(j, "mtd", v.mtd);
}

void to_json(json& j, const Decision& v) {
  j = {{"kind", name_of(v.kind, kKinds)},
       {"cohort_size", v.cohort_size},
       {"stop_reason", name_of(v.stop_reason, kStops)},
       {"rationale", v.rationale}};
  put_optional(j, "next_dose", v.next_dose);
}

void from_json(const json& j, Decision& v) {
  v.kind = enum_of(j.at("kind"), kKinds, "decision kind");
  v.next_dose = get_optional<int>(j, "next_dose");
  v.cohort_size = j.value("cohort_size", 0);
  v.stop_reason = j.contains("stop_reason") ? enum_of(j.at("stop_reason"), kStops, "stop reason") : StopReason::kNone;
  v.rationale = j.value("rationale", std::vector<std::string>{});
}

void to_json(json& j, const RandomizationWeights& v) {
  j = {{"dose_indices", v.dose_indices}, {"weights", v.weights}};
}

void to_json(json& j, const DecisionTable& v) {
  json rows = json::array();
  for (const auto& r : v.rows) {
    json row = {{"counts", r.counts},         {"n", r.n},
                {"n_tox", r.n_tox},           {"n_eff", r.n_eff},
                {"prob_toxic", r.prob_toxic}, {"prob_futile", r.prob_futile},
                {"toxic", r.toxic},           {"futile", r.futile},
                {"mean_utility", r.mean_utility}, {"qbb_alpha", r.qbb_alpha},
                {"qbb_beta", r.qbb_beta},     {"qbb_mean", r.qbb_mean}};
    row["toxicity_decision"] = r.toxicity_decision ? json(to_string(*r.toxicity_decision)) : json(nullptr);
    rows.push_back(std::move(row));
  }
  j = {{"categories", v.categories}, {"max_per_dose", v.max_per_dose}, {"rows", std::move(rows)}};
}

// ---- simulation ----

void to_json(json& j, const Scenario& v) {
  json ice = json::object();
  for (const auto& [key, p] : v.ice_probabilities) {
    ice[key] = p.values.size() == 1 ? json(p.values.front()) : json(p.values);
  }
  j = {{"name", v.name},
       {"description", v.description},
       {"grid", v.grid},
       {"true_tox", v.true_tox},
       {"true_eff", v.true_eff},
       {"eff_tox_odds_ratio", v.eff_tox_odds_ratio},
       {"ice_probabilities", std::move(ice)},
       {"stratum_fraction", v.stratum_fraction},
       {"grade2_ae_probability", v.grade2_ae_probability},
       {"post_ice_response_probability", v.post_ice_response_probability},
       {"evaluation_day", v.evaluation_day},
       {"dlt_window_days", v.dlt_window_days}};
}

void from_json(const json& j, Scenario& v) {
  v = Scenario{};
  v.name = j.value("name", "");
  v.description = j.value("description", "");
  v.true_tox = j.at("true_tox").get<std::vector<double>>();
  v.true_eff = j.at("true_eff").get<std::vector<double>>();
  if (j.contains("grid")) {
    v.grid = j.at("grid").get<DoseGrid>();
  } else {
    v.grid = DoseGrid::numbered(static_cast<int>(v.true_tox.size()));
  }
  get_if_present(j, "eff_tox_odds_ratio", v.eff_tox_odds_ratio);
  if (j.contains("ice_probabilities")) {
    for (const auto& [key, p] : j.at("ice_probabilities").items()) {
      v.ice_probabilities[key] =
          IceProbability{p.is_array() ? p.get<std::vector<double>>() : std::vector<double>{p.get<double>()}};
    }
  }
  get_if_present(j, "stratum_fraction", v.stratum_fraction);
  get_if_present(j, "grade2_ae_probability", v.grade2_ae_probability);
  get_if_present(j, "post_ice_response_probability", v.post_ice_response_probability);
  get_if_present(j, "evaluation_day", v.evaluation_day);
  get_if_present(j, "dlt_window_days", v.dlt_window_days);
}

void to_json(json& j, const TrialResult& v) {
  json audit = json::array();
  for (const auto& a : v.audit) {
    audit.push_back({{"cohort", a.cohort},
                     {"dose_index", a.dose_index},
                     {"cohort_size", a.cohort_size},
                     {"patient_ids", a.patient_ids},
                     {"counts_at_dose", a.counts_at_dose},
                     {"decision", a.decision}});
  }
  j = {{"seed", v.seed},
       {"stream", v.stream},
       {"enrolled_per_dose", v.enrolled_per_dose},
       {"final_states", v.final_states},
       {"total_enrolled", v.total_enrolled},
       {"dlt_count", v.dlt_count},
       {"early_termination", v.early_termination},
       {"stop_reason", name_of(v.stop_reason, kStops)},
       {"audit", std::move(audit)}};
  put_optional(j, "obd", v.obd);
  put_optional(j, "mtd", v.mtd);
}

void to_json(json& j, const OperatingCharacteristics& v) {
  j = {{"reps", v.reps},
       {"master_seed", v.master_seed},
       {"rng", v.rng},
       {"selection_pct", v.selection_pct},
       {"selection_counts", v.selection_counts},
       {"mean_patients", v.mean_patients},
       {"mean_total_n", v.mean_total_n},
       {"early_termination_pct", v.early_termination_pct},
       {"mean_dlt_count", v.mean_dlt_count},
       {"correct_selection_pct", v.correct_selection_pct}};
  put_optional(j, "true_optimal_dose", v.true_optimal_dose);
}

// ---- sensitivity ----

void to_json(json& j, const TippingReport& v) {
  json scan = json::array();
  for (const auto& r : v.scan) {
    json row = {{"num_flipped", r.num_flipped},
                {"flip_target_category", r.flip_target_category},
                {"utilities", r.utilities},
                {"flipped_patient_ids", r.flipped_patient_ids}};
    put_optional(row, "resulting_obd", r.resulting_obd);
    scan.push_back(std::move(row));
  }
  j = {{"flip_target_category", v.flip_target_category},
       {"scope", to_string(v.scope)},
       {"flaggable", v.flaggable},
       {"exact", v.exact},
       {"scan", std::move(scan)}};
  put_optional(j, "baseline_obd", v.baseline_obd);
  put_optional(j, "tipping_point", v.tipping_point);
}

void to_json(json& j, const PriorSensitivity& v) {
  json rows = json::array();
  for (const auto& r : v.rows) {
    rows.push_back({{"dose_index", r.dose_index},
                    {"design", r.design},
                    {"alternative", r.alternative},
                    {"utility_shift", r.utility_shift}});
  }
  j = {{"design_prior", v.design_prior},
       {"alternative_prior", v.alternative_prior},
       {"rows", std::move(rows)},
       {"obd_disagrees", v.obd_disagrees},
       {"max_abs_utility_shift", v.max_abs_utility_shift}};
  put_optional(j, "design_obd", v.design_obd);
  put_optional(j, "alternative_obd", v.alternative_obd);
}

void to_json(json& j, const StrategySensitivity& v) {
  json obds = json::array();
  for (const auto& o : v.obd_by_map) obds.push_back(o ? json(*o) : json(nullptr));
  j = {{"comparison", v.comparison}, {"obd_by_map", std::move(obds)}, {"all_agree", v.all_agree}};
}

// ---- trial state ----

void to_json(json& j, const TrialState& v) {
  j = {{"config", v.config},
       {"utility", v.spec},
       {"grid", v.grid},
       {"strategy_map", v.map},
       {"current_dose", v.current_dose},
       {"records", v.records},
       {"titration_triggered", v.titration_triggered},
       {"rng_seed", v.rng_seed},
       {"decisions_issued", v.decisions_issued}};
  if (v.dose_states) j["dose_states"] = *v.dose_states;
}

void from_json(const json& j, TrialState& v) {
  v = TrialState{};
  if (j.contains("config")) v.config = j.at("config").get<DesignConfig>();
  if (j.contains("utility")) v.spec = j.at("utility").get<UtilitySpec>();
  if (j.contains("strategy_map")) v.map = j.at("strategy_map").get<StrategyMap>();
  v.records = j.value("records", std::vector<PatientRecord>{});
  if (j.contains("dose_states") && !j.at("dose_states").is_null()) {
    v.dose_states = j.at("dose_states").get<std::vector<DoseState>>();
  }
  if (j.contains("grid")) {
    v.grid = j.at("grid").get<DoseGrid>();
  } else if (v.dose_states) {
    v.grid = DoseGrid::numbered(static_cast<int>(v.dose_states->size()));
  } else {
    throw Error(ErrorKind::kValidation, "trial state needs a grid");
  }
  v.current_dose = j.value("current_dose", v.config.start_dose);
  v.titration_triggered = j.value("titration_triggered", false);
  v.rng_seed = j.value("rng_seed", std::uint64_t{0});
  v.decisions_issued = j.value("decisions_issued", std::uint64_t{0});
}

void to_json(json& j, const Recommendation& v) {
  j = {{"decision", v.decision},
       {"summaries", v.summaries},
       {"admissible", v.admissible},
       {"weights", v.weights},
       {"selection", v.selection},
       {"states", v.states},
       {"outcomes", v.outcomes},
       {"excluded", v.excluded},
       {"titration_triggered", v.titration_triggered}};
}

json parse_json(std::string_view text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::kValidation, std::string("malformed JSON: ") + e.what());
  }
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kNotFound, "cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_json(buf.str());
}

std::vector<PatientRecord> read_records_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kNotFound, "cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '[') {
    return parse_document<std::vector<PatientRecord>>(parse_json(text));
  }
  std::vector<PatientRecord> records;
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    records.push_back(parse_document<PatientRecord>(parse_json(line)));
  }
  return records;
}

}  // namespace obd
