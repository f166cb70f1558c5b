// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "obd/decision.hpp"
#include "obd/estimand.hpp"
#include "obd/posterior.hpp"
#include "obd/trial_core.hpp"

namespace obd {

/// Everything needed to issue a recommendation: the design, the patients seen
/// so far and the current dose. `dose_states` replaces the records when the
/// derived counts are supplied directly.
struct TrialState {
  DesignConfig config = DesignConfig::case_study();
  UtilitySpec spec = UtilitySpec::canonical();
  DoseGrid grid;
  StrategyMap map = StrategyMap::case_study();
  int current_dose = 1;
  std::vector<PatientRecord> records;
  std::optional<std::vector<DoseState>> dose_states;
  bool titration_triggered = false;
  /// Randomized assignment draws from stream (rng_seed, decisions_issued).
  std::uint64_t rng_seed = 0;
  std::uint64_t decisions_issued = 0;
};

ValidationReport validate_trial_state(const TrialState& state);

struct Recommendation {
  std::vector<DerivedOutcome> outcomes;
  std::vector<Exclusion> excluded;
  std::vector<DoseState> states;
  std::vector<PosteriorSummary> summaries;
  AdmissibleSet admissible;
  /// Empty when no tested dose is admissible.
  RandomizationWeights weights;
  Decision decision;
  ObdSelection selection;
  bool titration_triggered = false;
};

/// Throws kValidation on an invalid state.
Recommendation recommend(const TrialState& state);

/// True once any recorded toxicity reaches the titration trigger grade.
bool titration_triggered(const TrialState& state);

}  // namespace obd
