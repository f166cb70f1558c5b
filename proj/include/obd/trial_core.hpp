// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace obd {

/// One joint outcome category Y = k. Categories are 1-based in every public
/// interface; index k-1 into the vectors below.
struct OutcomeCategory {
  bool efficacy = false;
  bool toxicity = false;
  double psi = 0.0;
};

/// Elicited utility scores over the K joint outcome categories.
struct UtilitySpec {
  std::vector<OutcomeCategory> categories;

  int size() const { return static_cast<int>(categories.size()); }
  double psi(int category) const { return categories.at(category - 1).psi; }

  /// Canonical binary x binary layout: Y=1 (e0,t1), Y=2 (e0,t0), Y=3 (e1,t1),
  /// Y=4 (e1,t0) with the given scores.
  static UtilitySpec canonical(double psi1, double psi2, double psi3, double psi4);
  static UtilitySpec canonical() { return canonical(0, 10, 60, 100); }
};

struct DoseLevel {
  int index = 1;
  std::string label;
  double amount = 0.0;
  std::string unit;
};

struct DoseGrid {
  std::vector<DoseLevel> doses;

  int size() const { return static_cast<int>(doses.size()); }
  static DoseGrid numbered(int levels);
};

/// Outcome counts n_jk at one dose plus enrollment bookkeeping. Patients whose
/// outcome is not yet derivable count toward enrollment only.
struct DoseState {
  int dose_index = 1;
  std::vector<int> counts;
  int n_enrolled = 0;

  int n() const;
  static DoseState empty(int dose_index, int categories);
};

enum class AssignmentMode { kDeterministic, kAdaptiveRandomization, kEqualRandomization };

/// kLowerTail declares a dose futile when Pr(pi_e < phi_e) > delta_e. kUpperTail
/// evaluates Pr(pi_e > phi_e) > delta_e literally and exists for fidelity runs.
enum class FutilityRule { kLowerTail, kUpperTail };

/// kBoin12 is the utility design; kBoinToxicityOnly ignores efficacy and
/// targets the MTD, used as a comparator in simulations.
enum class DesignVariant { kBoin12, kBoinToxicityOnly };

struct AcceleratedTitration {
  int trigger_grade = 2;
  int trigger_dose_index = 5;
};

struct DesignConfig {
  std::vector<double> prior_alpha{0.25, 0.25, 0.25, 0.25};
  double phi_t = 0.35;
  double phi_e = 0.25;
  double delta_t = 0.95;
  double delta_e = 0.90;
  double lambda_e = 0.0;
  double lambda_d = 0.0;
  double target_phi = 0.3;
  int cohort_size = 3;
  int max_n = 27;
  int per_dose_cap = 12;
  int start_dose = 1;
  AssignmentMode assignment_mode = AssignmentMode::kDeterministic;
  std::optional<AcceleratedTitration> accelerated_titration;
  FutilityRule futility_rule = FutilityRule::kLowerTail;
  DesignVariant design = DesignVariant::kBoin12;

  /// Reference setup: phi = 0.3, N = 27, 12 per dose, 1-patient
  /// titration until a grade 2 event or dose level 5.
  static DesignConfig case_study();
};

/// Violated invariants, one message each. Empty means valid.
using ValidationReport = std::vector<std::string>;

struct StrategyTraceEntry {
  std::string ice_type;
  std::string strategy;
  std::string effect;
};

/// Per-patient outcome after intercurrent-event handling. `category` is empty
/// when the outcome is missing (hypothetical strategy or not yet observed).
struct DerivedOutcome {
  std::string patient_id;
  int dose_index = 1;
  std::optional<int> category;
  bool evaluable = false;
  bool flagged_for_sensitivity = false;
  std::optional<bool> efficacy;
  std::optional<bool> toxicity;
  std::vector<StrategyTraceEntry> strategy_trace;
};

/// Category index Y whose flags equal (e, t). Throws kUnknownOutcomePair.
int classify_outcome(bool efficacy, bool toxicity, const UtilitySpec& spec);

ValidationReport validate_utility_spec(const UtilitySpec& spec);

/// Affine rescale of psi so that min -> 0 and max -> 100.
UtilitySpec normalize_utility(const UtilitySpec& spec);

ValidationReport validate_design_config(const DesignConfig& config, int categories);
ValidationReport validate_dose_grid(const DoseGrid& grid);

/// Pure update. Evaluable outcomes with a category increment counts; every
/// outcome increments enrollment. Throws kDoseMismatch.
DoseState record_outcomes(const DoseState& state, std::span<const DerivedOutcome> outcomes);

int toxicity_count(const DoseState& state, const UtilitySpec& spec);
int efficacy_count(const DoseState& state, const UtilitySpec& spec);

}  // namespace obd
