// SPDX-License-Identifier: Apache-2.0
#include "obd/sensitivity.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>

#include "obd/error.hpp"

namespace obd {

std::string to_string(TippingScope s) {
  switch (s) {
    case TippingScope::kMissing: return "missing";
    case TippingScope::kFavorableAtObd: return "favorable_at_obd";
    case TippingScope::kAllObserved: return "all_observed";
  }
  return "unknown";
}

TippingScope parse_tipping_scope(std::string_view s) {
  if (s == "missing") return TippingScope::kMissing;
  if (s == "favorable_at_obd") return TippingScope::kFavorableAtObd;
  if (s == "all_observed") return TippingScope::kAllObserved;
  throw Error(ErrorKind::kValidation, "unknown tipping scope '" + std::string(s) + "'");
}

std::vector<FlipClass> flip_classes(const AnalysisSet& set, const UtilitySpec& spec, std::optional<int> baseline_obd,
                                    const TippingOptions& options) {
  const double target_psi = spec.psi(options.flip_to);
  std::vector<FlipClass> classes;
  auto add = [&](int dose, std::optional<int> category, const std::string& id) {
    auto it = std::find_if(classes.begin(), classes.end(), [&](const FlipClass& c) {
      return c.dose_index == dose && c.category == category;
    });
    if (it == classes.end()) {
      classes.push_back({dose, category, {}});
      it = std::prev(classes.end());
    }
    it->patient_ids.push_back(id);
  };
  for (const auto& o : set.outcomes) {
    if (!o.category) {
      if (o.flagged_for_sensitivity) add(o.dose_index, std::nullopt, o.patient_id);
      continue;
    }
    if (!o.evaluable || options.scope == TippingScope::kMissing) continue;
    if (spec.psi(*o.category) <= target_psi) continue;
    if (options.scope == TippingScope::kFavorableAtObd && o.dose_index != baseline_obd) continue;
    add(o.dose_index, o.category, o.patient_id);
  }
  // Worst-first: the most valuable observed outcomes go first, missing outcomes last.
  std::stable_sort(classes.begin(), classes.end(), [&](const FlipClass& a, const FlipClass& b) {
    if (a.category.has_value() != b.category.has_value()) return a.category.has_value();
    if (a.category && spec.psi(*a.category) != spec.psi(*b.category)) {
      return spec.psi(*a.category) > spec.psi(*b.category);
    }
    return a.dose_index < b.dose_index;
  });
  return classes;
}

namespace {

struct Baseline {
  AnalysisSet set;
  std::vector<DoseState> states;
  std::optional<int> obd;
  std::vector<double> utilities;
};

std::vector<double> utilities_of(const std::vector<PosteriorSummary>& summaries) {
  std::vector<double> u;
  u.reserve(summaries.size());
  for (const auto& s : summaries) u.push_back(s.mean_utility);
  return u;
}

Baseline baseline(std::span<const PatientRecord> records, const StrategyMap& map, const UtilitySpec& spec,
                  const DesignConfig& config, int doses, const TippingOptions& options) {
  if (options.flip_to < 1 || options.flip_to > spec.size()) {
    throw Error(ErrorKind::kValidation, "flip_to must name a category in 1.." + std::to_string(spec.size()));
  }
  Baseline b;
  b.set = build_analysis_set(records, map, spec, options.analysis_set);
  b.states = tally(b.set, doses, spec.size());
  const auto summaries = summarize_all(b.states, spec, config);
  b.obd = select_obd(summaries, config).obd;
  b.utilities = utilities_of(summaries);
  return b;
}

struct Evaluation {
  std::optional<int> obd;
  std::vector<double> utilities;
};

// Applies per-class flip counts to the baseline states.
Evaluation evaluate(const Baseline& b, const std::vector<FlipClass>& classes, const std::vector<int>& counts,
                    const UtilitySpec& spec, const DesignConfig& config, int flip_to) {
  auto states = b.states;
  for (size_t i = 0; i < classes.size(); ++i) {
    if (counts[i] == 0) continue;
    auto& st = states[static_cast<size_t>(classes[i].dose_index - 1)];
    st.counts[static_cast<size_t>(flip_to - 1)] += counts[i];
    if (classes[i].category) st.counts[static_cast<size_t>(*classes[i].category - 1)] -= counts[i];
  }
  const auto summaries = summarize_all(states, spec, config);
  return {select_obd(summaries, config).obd, utilities_of(summaries)};
}

std::vector<std::string> ids_for(const std::vector<FlipClass>& classes, const std::vector<int>& counts) {
  std::vector<std::string> ids;
  for (size_t i = 0; i < classes.size(); ++i) {
    for (int k = 0; k < counts[i]; ++k) ids.push_back(classes[i].patient_ids[static_cast<size_t>(k)]);
  }
  return ids;
}

}  // namespace

TippingReport tipping_scan(std::span<const PatientRecord> records, const StrategyMap& map, const UtilitySpec& spec,
                           const DesignConfig& config, int doses, const TippingOptions& options) {
  const Baseline base = baseline(records, map, spec, config, doses, options);
  const auto classes = flip_classes(base.set, spec, base.obd, options);

  TippingReport report;
  report.baseline_obd = base.obd;
  report.flip_target_category = options.flip_to;
  report.scope = options.scope;
  std::vector<int> capacity_after(classes.size() + 1, 0);
  for (size_t i = classes.size(); i-- > 0;) {
    capacity_after[i] = capacity_after[i + 1] + static_cast<int>(classes[i].patient_ids.size());
  }
  report.flaggable = capacity_after.front();
  report.scan.push_back({0, options.flip_to, base.obd, base.utilities, {}});

  long long examined = 0;
  for (int m = 1; m <= report.flaggable; ++m) {
    std::vector<int> counts(classes.size(), 0);
    std::optional<std::vector<int>> first;
    std::optional<std::vector<int>> changing;
    // Compositions in lexicographically descending order, so the first one is
    // the worst-first choice.
    std::function<bool(size_t, int)> walk = [&](size_t i, int remaining) -> bool {
      if (i == classes.size()) {
        if (remaining != 0) return false;
        if (!first) first = counts;
        if (++examined > options.max_compositions) {
          report.exact = false;
          return true;
        }
        if (evaluate(base, classes, counts, spec, config, options.flip_to).obd != base.obd) {
          changing = counts;
          return true;
        }
        return false;
      }
      const int size = static_cast<int>(classes[i].patient_ids.size());
      const int hi = std::min(size, remaining);
      const int lo = std::max(0, remaining - capacity_after[i + 1]);
      for (int x = hi; x >= lo; --x) {
        counts[i] = x;
        if (walk(i + 1, remaining - x)) return true;
      }
      counts[i] = 0;
      return false;
    };

    if (!report.tipping_point && report.exact) walk(0, m);
    if (!first) {
      // Past the tipping point or over budget: worst-first choice only.
      first = std::vector<int>(classes.size(), 0);
      int remaining = m;
      for (size_t i = 0; i < classes.size(); ++i) {
        (*first)[i] = std::min(remaining, static_cast<int>(classes[i].patient_ids.size()));
        remaining -= (*first)[i];
      }
    }
    const auto& chosen = changing ? *changing : *first;
    const auto eval = evaluate(base, classes, chosen, spec, config, options.flip_to);
    report.scan.push_back({m, options.flip_to, eval.obd, eval.utilities, ids_for(classes, chosen)});
    if (!report.tipping_point && eval.obd != base.obd) report.tipping_point = m;
  }
  return report;
}

TippingReport tipping_scan_exhaustive(std::span<const PatientRecord> records, const StrategyMap& map,
                                      const UtilitySpec& spec, const DesignConfig& config, int doses,
                                      const TippingOptions& options) {
  const Baseline base = baseline(records, map, spec, config, doses, options);
  const auto classes = flip_classes(base.set, spec, base.obd, options);

  // One singleton class per patient so subsets map onto 0/1 counts.
  std::vector<FlipClass> patients;
  for (const auto& c : classes) {
    for (const auto& id : c.patient_ids) patients.push_back({c.dose_index, c.category, {id}});
  }
  const int m_max = static_cast<int>(patients.size());
  if (m_max > 20) throw Error(ErrorKind::kValidation, "exhaustive tipping scan is limited to 20 patients");

  TippingReport report;
  report.baseline_obd = base.obd;
  report.flip_target_category = options.flip_to;
  report.scope = options.scope;
  report.flaggable = m_max;
  report.scan.push_back({0, options.flip_to, base.obd, base.utilities, {}});

  std::vector<std::optional<std::uint32_t>> first(static_cast<size_t>(m_max + 1));
  std::vector<std::optional<std::uint32_t>> changing(static_cast<size_t>(m_max + 1));
  const std::uint32_t total = std::uint32_t{1} << m_max;
  for (std::uint32_t mask = 1; mask < total; ++mask) {
    const auto m = static_cast<size_t>(std::popcount(mask));
    if (!first[m]) first[m] = mask;
    if (changing[m]) continue;
    std::vector<int> counts(patients.size());
    for (size_t i = 0; i < patients.size(); ++i) counts[i] = (mask >> i) & 1U;
    if (evaluate(base, patients, counts, spec, config, options.flip_to).obd != base.obd) changing[m] = mask;
  }
  for (int m = 1; m <= m_max; ++m) {
    const auto mask = changing[static_cast<size_t>(m)] ? *changing[static_cast<size_t>(m)] : *first[static_cast<size_t>(m)];
    std::vector<int> counts(patients.size());
    for (size_t i = 0; i < patients.size(); ++i) counts[i] = (mask >> i) & 1U;
    const auto eval = evaluate(base, patients, counts, spec, config, options.flip_to);
    report.scan.push_back({m, options.flip_to, eval.obd, eval.utilities, ids_for(patients, counts)});
    if (!report.tipping_point && changing[static_cast<size_t>(m)]) report.tipping_point = m;
  }
  return report;
}

PriorSensitivity compare_priors(std::span<const DoseState> states, const UtilitySpec& spec,
                                const DesignConfig& config, std::span<const double> alternative_prior) {
  if (alternative_prior.size() != static_cast<size_t>(spec.size())) {
    throw Error(ErrorKind::kDimensionMismatch, "alternative prior needs one value per category");
  }
  PriorSensitivity out;
  out.design_prior = config.prior_alpha;
  out.alternative_prior.assign(alternative_prior.begin(), alternative_prior.end());
  std::vector<PosteriorSummary> design;
  std::vector<PosteriorSummary> alternative;
  for (const auto& st : states) {
    design.push_back(summarize(st, spec, config));
    alternative.push_back(summarize(st, spec, config, alternative_prior));
    if (st.n_enrolled == 0 && st.n() == 0) continue;
    if (st.n() == 0) {
      throw Error(ErrorKind::kEmptyDose, "dose " + std::to_string(st.dose_index) + " has no evaluable patients");
    }
    PriorComparisonRow row{st.dose_index, design.back(), alternative.back(),
                           alternative.back().mean_utility - design.back().mean_utility};
    out.max_abs_utility_shift = std::max(out.max_abs_utility_shift, std::abs(row.utility_shift));
    out.rows.push_back(std::move(row));
  }
  out.design_obd = select_obd(design, config).obd;
  out.alternative_obd = select_obd(alternative, config).obd;
  out.obd_disagrees = out.design_obd != out.alternative_obd;
  return out;
}

PriorSensitivity prior_sensitivity(std::span<const DoseState> states, const UtilitySpec& spec,
                                   const DesignConfig& config, double epsilon) {
  if (!(epsilon > 0.0)) throw Error(ErrorKind::kDomainError, "epsilon must be positive");
  const std::vector<double> haldane(static_cast<size_t>(spec.size()), epsilon);
  return compare_priors(states, spec, config, haldane);
}

PriorSensitivity prior_sensitivity(std::span<const PatientRecord> records, const StrategyMap& map,
                                   const UtilitySpec& spec, const DesignConfig& config, int doses, double epsilon) {
  const auto states = tally(build_analysis_set(records, map, spec), doses, spec.size());
  return prior_sensitivity(states, spec, config, epsilon);
}

StrategySensitivity strategy_sensitivity(std::span<const PatientRecord> records, std::span<const StrategyMap> maps,
                                         const UtilitySpec& spec, const DesignConfig& config, int doses) {
  if (maps.size() < 2) throw Error(ErrorKind::kValidation, "strategy sensitivity needs at least two maps");
  StrategySensitivity out;
  out.comparison = compare_strategies(records, maps, spec, config, doses);
  for (const auto& col : out.comparison.columns) out.obd_by_map.push_back(col.selection.obd);
  out.all_agree = std::adjacent_find(out.obd_by_map.begin(), out.obd_by_map.end(), std::not_equal_to<>()) ==
                  out.obd_by_map.end();
  return out;
}

}  // namespace obd
