// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "obd/posterior.hpp"
#include "obd/rng.hpp"
#include "obd/trial_core.hpp"

namespace obd {

struct BoinBoundaries {
  double lambda_e = 0.0;
  double lambda_d = 0.0;
};

/// BOIN escalation / de-escalation boundaries for target DLT rate phi.
/// phi1 and phi2 default to 0.6 phi and 1.4 phi. Throws kDomainError unless
/// 0 < phi1 < phi < phi2 < 1.
BoinBoundaries boin_boundaries(double target_phi, std::optional<double> phi1 = std::nullopt,
                               std::optional<double> phi2 = std::nullopt);

enum class ToxicityDecision { kEscalate, kStay, kDeEscalate };

/// rate <= lambda_e escalates, rate >= lambda_d de-escalates, anything
/// strictly between stays.
ToxicityDecision boin_toxicity_decision(int n_tox, int n, double lambda_e, double lambda_d);

struct DoseAdmissibility {
  int dose_index = 1;
  bool toxic = false;
  bool futile = false;
  bool untested = false;
};

struct AdmissibleSet {
  std::vector<int> dose_indices;
  std::vector<DoseAdmissibility> flags;

  bool contains(int dose_index) const;
};

/// A dose is admissible iff it is neither toxic nor futile. Untested doses
/// carry no evidence: they stay in the set, flagged untested.
AdmissibleSet admissible_set(std::span<const PosteriorSummary> summaries, const DesignConfig& config);

struct ToxicityData {
  int dose_index = 1;
  int n_tox = 0;
  int n = 0;
};

/// Weighted (by n) monotone least-squares fit of n_tox/n by pool-adjacent-violators.
std::vector<double> isotonic_tox_estimates(std::span<const ToxicityData> tested);

/// Dose whose isotonic estimate is closest to phi_t. Equidistant doses resolve
/// to the highest one at or below phi_t, else to the lowest above it.
/// Throws kNoTestedDoses.
int estimate_mtd(std::span<const ToxicityData> tested, double phi_t);

struct ObdSelection {
  std::optional<int> obd;
  std::optional<int> mtd;
  std::vector<ToxicityData> tested;
  std::vector<double> isotonic;
  AdmissibleSet admissible;
  std::vector<std::string> rationale;
};

/// Admissible tested dose with the highest mean utility, capped at the MTD.
ObdSelection select_obd(std::span<const PosteriorSummary> summaries, const DesignConfig& config);

/// Toxicity-only BOIN selection: isotonic estimate closest to target_phi among
/// tested doses that are not eliminated for toxicity.
ObdSelection select_mtd_boin(std::span<const PosteriorSummary> summaries, const DesignConfig& config);

enum class DecisionKind { kEscalate, kStay, kDeEscalate, kEliminateAndDeEscalate, kTerminate };

enum class StopReason { kNone, kMaxSampleSize, kPerDoseCap, kLowestDoseToxic, kNoAdmissibleDose };

struct Decision {
  DecisionKind kind = DecisionKind::kStay;
  std::optional<int> next_dose;
  int cohort_size = 0;
  StopReason stop_reason = StopReason::kNone;
  std::vector<std::string> rationale;

  bool terminated() const { return kind == DecisionKind::kTerminate; }
  /// Stopped for safety or futility rather than by exhausting the sample size.
  bool early_termination() const {
    return stop_reason == StopReason::kLowestDoseToxic || stop_reason == StopReason::kNoAdmissibleDose;
  }
};

/// Materialized trial position used by the dose-assignment rules.
struct TrialSnapshot {
  int current_dose = 1;
  std::vector<DoseState> states;
  bool titration_triggered = false;

  int total_enrolled() const;
};

/// First cohort of a trial: the start dose, one patient when titrating.
Decision initial_decision(const DesignConfig& config, int doses);

/// Next-cohort assignment. Randomized assignment modes draw from `rng`, which
/// must then be non-null.
Decision next_dose(const TrialSnapshot& snapshot, std::span<const PosteriorSummary> summaries,
                   const DesignConfig& config, CounterRng* rng = nullptr);

struct RandomizationWeights {
  std::vector<int> dose_indices;
  std::vector<double> weights;
};

/// omega_j = U_j / sum U over the tested admissible doses (uniform in equal
/// mode, or when every utility is zero). Throws kEmptyAdmissibleSet.
RandomizationWeights randomization_weights(std::span<const PosteriorSummary> summaries,
                                           const AdmissibleSet& admissible,
                                           AssignmentMode mode = AssignmentMode::kAdaptiveRandomization);

struct DecisionTableRow {
  std::vector<int> counts;
  int n = 0;
  int n_tox = 0;
  int n_eff = 0;
  std::optional<ToxicityDecision> toxicity_decision;
  double prob_toxic = 0.0;
  double prob_futile = 0.0;
  bool toxic = false;
  bool futile = false;
  double mean_utility = 0.0;
  double qbb_alpha = 0.0;
  double qbb_beta = 0.0;
  double qbb_mean = 0.0;
};

struct DecisionTable {
  int categories = 0;
  int max_per_dose = 0;
  std::vector<DecisionTableRow> rows;
};

/// Every count vector with n_j <= max_per_dose, ordered by n and then
/// lexicographically by (n_1, ..., n_K) descending.
DecisionTable decision_table(const DesignConfig& config, const UtilitySpec& spec, int max_per_dose);

std::string to_string(ToxicityDecision d);
std::string to_string(DecisionKind k);
std::string to_string(StopReason r);

}  // namespace obd
