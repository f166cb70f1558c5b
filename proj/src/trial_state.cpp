// SPDX-License-Identifier: Apache-2.0
#include "obd/trial_state.hpp"

#include "obd/error.hpp"
#include "obd/rng.hpp"

namespace obd {

ValidationReport validate_trial_state(const TrialState& state) {
  ValidationReport report = validate_utility_spec(state.spec);
  for (auto& m : validate_design_config(state.config, state.spec.size())) report.push_back(std::move(m));
  for (auto& m : validate_dose_grid(state.grid)) report.push_back(std::move(m));
  const int doses = state.grid.size();
  if (state.current_dose < 1 || state.current_dose > doses) report.push_back("current_dose outside the dose grid");
  for (const auto& r : state.records) {
    for (auto& m : validate_patient_record(r)) report.push_back(r.patient_id + ": " + m);
    if (r.dose_index < 1 || r.dose_index > doses) report.push_back(r.patient_id + ": dose outside the dose grid");
  }
  if (state.dose_states) {
    if (static_cast<int>(state.dose_states->size()) != doses) report.push_back("dose_states needs one entry per dose");
    for (const auto& s : *state.dose_states) {
      if (static_cast<int>(s.counts.size()) != state.spec.size()) {
        report.push_back("dose_states counts need one value per category");
      }
    }
  }
  return report;
}

bool titration_triggered(const TrialState& state) {
  if (state.titration_triggered) return true;
  if (!state.config.accelerated_titration) return false;
  const int grade = state.config.accelerated_titration->trigger_grade;
  for (const auto& r : state.records) {
    for (const auto& e : r.events) {
      if (const auto* t = std::get_if<Toxicity>(&e.detail); t && t->grade >= grade) return true;
    }
  }
  return false;
}

Recommendation recommend(const TrialState& state) {
  if (const auto report = validate_trial_state(state); !report.empty()) {
    throw Error(ErrorKind::kValidation, report.front());
  }
  const int doses = state.grid.size();
  Recommendation rec;
  if (state.dose_states) {
    rec.states = *state.dose_states;
  } else {
    auto set = build_analysis_set(state.records, state.map, state.spec);
    rec.states = tally(set, doses, state.spec.size());
    rec.outcomes = std::move(set.outcomes);
    rec.excluded = std::move(set.excluded);
  }
  rec.summaries = summarize_all(rec.states, state.spec, state.config);
  rec.admissible = admissible_set(rec.summaries, state.config);
  try {
    rec.weights = randomization_weights(rec.summaries, rec.admissible, state.config.assignment_mode);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::kEmptyAdmissibleSet) throw;
  }
  rec.titration_triggered = titration_triggered(state);
  TrialSnapshot snapshot{state.current_dose, rec.states, rec.titration_triggered};
  CounterRng rng(state.rng_seed, state.decisions_issued);
  rec.decision = next_dose(snapshot, rec.summaries, state.config, &rng);
  rec.selection = state.config.design == DesignVariant::kBoin12 ? select_obd(rec.summaries, state.config)
                                                                 : select_mtd_boin(rec.summaries, state.config);
  return rec;
}

}  // namespace obd
