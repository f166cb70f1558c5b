// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "obd/decision.hpp"
#include "obd/estimand.hpp"
#include "obd/rng.hpp"
#include "obd/trial_core.hpp"

namespace obd {

/// Per-patient probability of an ICE, either a single value or one per dose.
struct IceProbability {
  std::vector<double> values;

  double at(int dose_index) const;
};

struct Scenario {
  std::string name;
  std::string description;
  DoseGrid grid;
  std::vector<double> true_tox;
  std::vector<double> true_eff;
  /// Odds ratio between efficacy and toxicity; 1 means independent.
  double eff_tox_odds_ratio = 1.0;
  /// Keyed like strategy-map entries ("death", "surgery:tumor_shrinkage", ...).
  std::map<std::string, IceProbability> ice_probabilities;
  double stratum_fraction = 1.0;
  /// Chance that a patient without a DLT still reports a grade-2 adverse event.
  double grade2_ae_probability = 0.0;
  /// Chance that the follow-up assessment after a discontinuation shows the
  /// patient's underlying response (the SD-then-CR pattern).
  double post_ice_response_probability = 1.0;
  int evaluation_day = 56;
  int dlt_window_days = 28;
};

ValidationReport validate_scenario(const Scenario& scenario);

/// Cells (p1, p2, p3, p4) over Y=1 (e0,t1), Y=2 (e0,t0), Y=3 (e1,t1),
/// Y=4 (e1,t0) with the given marginals and odds ratio.
/// Throws kInfeasibleAssociation.
std::array<double, 4> joint_outcome_table(double pe, double pt, double odds_ratio);

PatientRecord simulate_patient(const Scenario& scenario, int dose_index, const std::string& patient_id,
                               CounterRng& rng);

struct AuditEntry {
  int cohort = 0;
  int dose_index = 1;
  int cohort_size = 0;
  std::vector<std::string> patient_ids;
  std::vector<int> counts_at_dose;
  Decision decision;
};

struct TrialResult {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  std::optional<int> obd;
  std::optional<int> mtd;
  std::vector<int> enrolled_per_dose;
  std::vector<DoseState> final_states;
  int total_enrolled = 0;
  int dlt_count = 0;
  bool early_termination = false;
  StopReason stop_reason = StopReason::kNone;
  std::vector<AuditEntry> audit;
};

/// One virtual trial. The RNG stream is (seed, stream).
TrialResult run_trial(const Scenario& scenario, const DesignConfig& config, const StrategyMap& map,
                      const UtilitySpec& spec, std::uint64_t seed, std::uint64_t stream = 0);

struct OperatingCharacteristics {
  int reps = 0;
  std::uint64_t master_seed = 0;
  std::string rng = std::string(Philox4x32::kName);
  /// Index 0 is "no dose selected", index j is dose j.
  std::vector<double> selection_pct;
  std::vector<double> mean_patients;
  double mean_total_n = 0.0;
  double early_termination_pct = 0.0;
  double mean_dlt_count = 0.0;
  double correct_selection_pct = 0.0;
  std::optional<int> true_optimal_dose;
  std::vector<int> selection_counts;
};

/// True utility argmax among doses with pi_t <= phi_t and pi_e >= phi_e.
std::optional<int> true_optimal_dose(const Scenario& scenario, const DesignConfig& config, const UtilitySpec& spec);

/// Replication r runs on stream (master_seed, r); results are aggregated in
/// replication order, so the output does not depend on `parallelism`.
OperatingCharacteristics operating_characteristics(const Scenario& scenario, const DesignConfig& config,
                                                   const StrategyMap& map, const UtilitySpec& spec, int reps,
                                                   std::uint64_t master_seed, int parallelism = 1);

}  // namespace obd
