// Deterministic cohorts for driving the service through a trial.
#pragma once

#include <string>
#include <vector>

#include "obd/simulator.hpp"

namespace fixture {

inline obd::Scenario scripted_scenario() {
  obd::Scenario s;
  s.name = "scripted";
  s.grid = obd::DoseGrid::numbered(8);
  s.true_tox = {0.02, 0.05, 0.08, 0.12, 0.18, 0.25, 0.35, 0.45};
  s.true_eff = {0.05, 0.15, 0.3, 0.5, 0.55, 0.55, 0.5, 0.45};
  s.grade2_ae_probability = 0.3;
  s.ice_probabilities["tox_discontinuation"] = {{0.05}};
  s.ice_probabilities["surgery:external_factors"] = {{0.08}};
  s.ice_probabilities["additional_therapy"] = {{0.05}};
  return s;
}

// Cohort `cohort` of `size` patients at `dose`; identical on every call.
inline std::vector<obd::PatientRecord> scripted_cohort(int cohort, int dose, int size) {
  const auto s = scripted_scenario();
  obd::CounterRng rng(2024, static_cast<std::uint64_t>(cohort));
  std::vector<obd::PatientRecord> out;
  for (int i = 0; i < size; ++i) {
    out.push_back(obd::simulate_patient(s, dose, "c" + std::to_string(cohort) + "-p" + std::to_string(i + 1), rng));
  }
  return out;
}

}  // namespace fixture
