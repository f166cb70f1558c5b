// Tipping point by brute force over every subset of flaggable patients.
#pragma once

#include <bit>
#include <optional>
#include <stdexcept>
#include <vector>

#include "obd/estimand.hpp"
#include "obd/sensitivity.hpp"

namespace oracle {

using namespace obd;

inline std::optional<int> obd_of(const std::vector<DoseState>& states, const DesignConfig& config) {
  return select_obd(summarize_all(states, UtilitySpec::canonical(), config), config).obd;
}

// Smallest number of flaggable patients whose flip to `flip_to` changes the
// OBD, by trying every subset. Flaggable patients are re-derived here from the
// scope definition rather than taken from the library.
inline std::optional<int> tipping_point_by_subsets(const std::vector<PatientRecord>& records,
                                                   const DesignConfig& config, int doses, int flip_to,
                                                   TippingScope scope, int* flaggable_out = nullptr) {
  const auto spec = UtilitySpec::canonical();
  const auto set = build_analysis_set(records, StrategyMap::case_study(), spec);
  const auto base = tally(set, doses, spec.size());
  const auto base_obd = obd_of(base, config);
  struct Flip {
    int dose;
    std::optional<int> from;
  };
  std::vector<Flip> flips;
  for (const auto& o : set.outcomes) {
    if (!o.category) {
      if (o.flagged_for_sensitivity) flips.push_back({o.dose_index, std::nullopt});
      continue;
    }
    if (!o.evaluable || spec.psi(*o.category) <= spec.psi(flip_to)) continue;
    const bool in_scope = scope == TippingScope::kAllObserved ||
                          (scope == TippingScope::kFavorableAtObd && base_obd && o.dose_index == *base_obd);
    if (in_scope) flips.push_back({o.dose_index, o.category});
  }
  if (flaggable_out) *flaggable_out = static_cast<int>(flips.size());
  if (flips.size() > 16) throw std::length_error("too many flaggable patients for the subset oracle");
  std::optional<int> best;
  for (std::uint32_t mask = 1; mask < (1u << flips.size()); ++mask) {
    const int m = std::popcount(mask);
    if (best && m >= *best) continue;
    auto states = base;
    for (size_t i = 0; i < flips.size(); ++i) {
      if (!((mask >> i) & 1u)) continue;
      auto& counts = states[static_cast<size_t>(flips[i].dose - 1)].counts;
      ++counts[static_cast<size_t>(flip_to - 1)];
      if (flips[i].from) --counts[static_cast<size_t>(*flips[i].from - 1)];
    }
    if (obd_of(states, config) != base_obd) best = m;
  }
  return best;
}

}  // namespace oracle
