// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "obd/decision.hpp"
#include "obd/estimand.hpp"
#include "obd/posterior.hpp"
#include "obd/trial_core.hpp"

namespace obd {

/// Which patients a tipping scan may flip.
enum class TippingScope {
  kMissing,           // flagged patients with a missing category
  kFavorableAtObd,    // missing patients plus better-than-target outcomes at the baseline OBD
  kAllObserved,       // missing patients plus every better-than-target outcome
};

std::string to_string(TippingScope s);
TippingScope parse_tipping_scope(std::string_view s);

struct FlipClass {
  int dose_index = 1;
  /// Empty for patients whose category is missing.
  std::optional<int> category;
  std::vector<std::string> patient_ids;
};

struct TippingRow {
  int num_flipped = 0;
  int flip_target_category = 1;
  std::optional<int> resulting_obd;
  std::vector<double> utilities;
  std::vector<std::string> flipped_patient_ids;
};

struct TippingReport {
  std::optional<int> baseline_obd;
  int flip_target_category = 1;
  TippingScope scope = TippingScope::kFavorableAtObd;
  int flaggable = 0;
  std::vector<TippingRow> scan;
  std::optional<int> tipping_point;
  /// False only when the composition search was too large and the scan fell
  /// back to worst-first selection alone.
  bool exact = true;
};

struct TippingOptions {
  int flip_to = 1;
  TippingScope scope = TippingScope::kFavorableAtObd;
  AnalysisSetSpec analysis_set{};
  /// Upper bound on flip compositions examined before falling back.
  long long max_compositions = 2'000'000;
};

/// For m = 0..M, flips m flaggable patients to `flip_to` and recomputes the
/// OBD. Patients sharing a dose and category are interchangeable, so every
/// composition of flips across those classes is examined; the reported
/// tipping point is the smallest m for which some choice of m patients
/// changes the OBD. Rows list the first changing composition in worst-first
/// order (highest psi flipped first), or the worst-first choice if none does.
TippingReport tipping_scan(std::span<const PatientRecord> records, const StrategyMap& map, const UtilitySpec& spec,
                           const DesignConfig& config, int doses, const TippingOptions& options = {});

/// Brute force over every subset of flaggable patients. Limited to 20.
TippingReport tipping_scan_exhaustive(std::span<const PatientRecord> records, const StrategyMap& map,
                                      const UtilitySpec& spec, const DesignConfig& config, int doses,
                                      const TippingOptions& options = {});

/// Flaggable classes for the given scope, in worst-first flip order.
std::vector<FlipClass> flip_classes(const AnalysisSet& set, const UtilitySpec& spec, std::optional<int> baseline_obd,
                                    const TippingOptions& options);

struct PriorComparisonRow {
  int dose_index = 1;
  PosteriorSummary design;
  PosteriorSummary alternative;
  double utility_shift = 0.0;
};

struct PriorSensitivity {
  std::vector<double> design_prior;
  std::vector<double> alternative_prior;
  std::vector<PriorComparisonRow> rows;
  std::optional<int> design_obd;
  std::optional<int> alternative_obd;
  bool obd_disagrees = false;
  double max_abs_utility_shift = 0.0;
};

/// Side-by-side summaries under two priors for every dose with enrollment.
/// A dose with enrollment but no evaluable outcome throws kEmptyDose.
PriorSensitivity compare_priors(std::span<const DoseState> states, const UtilitySpec& spec,
                                const DesignConfig& config, std::span<const double> alternative_prior);

/// Design prior against the Haldane prior with every alpha_k = epsilon.
PriorSensitivity prior_sensitivity(std::span<const DoseState> states, const UtilitySpec& spec,
                                   const DesignConfig& config, double epsilon = 1e-6);
PriorSensitivity prior_sensitivity(std::span<const PatientRecord> records, const StrategyMap& map,
                                   const UtilitySpec& spec, const DesignConfig& config, int doses,
                                   double epsilon = 1e-6);

struct StrategySensitivity {
  StrategyComparison comparison;
  std::vector<std::optional<int>> obd_by_map;
  bool all_agree = true;
};

/// Requires at least two maps.
StrategySensitivity strategy_sensitivity(std::span<const PatientRecord> records, std::span<const StrategyMap> maps,
                                         const UtilitySpec& spec, const DesignConfig& config, int doses);

}  // namespace obd
