// SPDX-License-Identifier: Apache-2.0
#include "obd/decision.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>

#include "obd/error.hpp"
#include "obd/special_functions.hpp"

namespace obd {

std::string to_string(ToxicityDecision d) {
  switch (d) {
    case ToxicityDecision::kEscalate: return "escalate";
    case ToxicityDecision::kStay: return "stay";
    case ToxicityDecision::kDeEscalate: return "de_escalate";
  }
  return "stay";
}

std::string to_string(DecisionKind k) {
  switch (k) {
    case DecisionKind::kEscalate: return "escalate";
    case DecisionKind::kStay: return "stay";
    case DecisionKind::kDeEscalate: return "de_escalate";
    case DecisionKind::kEliminateAndDeEscalate: return "eliminate_and_de_escalate";
    case DecisionKind::kTerminate: return "terminate";
  }
  return "stay";
}

std::string to_string(StopReason r) {
  switch (r) {
    case StopReason::kNone: return "none";
    case StopReason::kMaxSampleSize: return "max_n_reached";
    case StopReason::kPerDoseCap: return "per_dose_cap_reached";
    case StopReason::kLowestDoseToxic: return "lowest_dose_toxic";
    case StopReason::kNoAdmissibleDose: return "no_admissible_dose";
  }
  return "none";
}

BoinBoundaries boin_boundaries(double target_phi, std::optional<double> phi1, std::optional<double> phi2) {
  const double p = target_phi;
  const double p1 = phi1.value_or(0.6 * p);
  const double p2 = phi2.value_or(1.4 * p);
  if (!(0.0 < p1 && p1 < p && p < p2 && p2 < 1.0)) {
    throw Error(ErrorKind::kDomainError, "BOIN boundaries need 0 < phi1 < phi < phi2 < 1");
  }
  BoinBoundaries b;
  b.lambda_e = std::log((1.0 - p1) / (1.0 - p)) / std::log(p * (1.0 - p1) / (p1 * (1.0 - p)));
  b.lambda_d = std::log((1.0 - p) / (1.0 - p2)) / std::log(p2 * (1.0 - p) / (p * (1.0 - p2)));
  return b;
}

ToxicityDecision boin_toxicity_decision(int n_tox, int n, double lambda_e, double lambda_d) {
  if (n < 1 || n_tox < 0 || n_tox > n) {
    throw Error(ErrorKind::kDomainError, "toxicity decision needs 0 <= n_tox <= n and n >= 1");
  }
  const double rate = static_cast<double>(n_tox) / n;
  if (rate <= lambda_e) return ToxicityDecision::kEscalate;
  if (rate >= lambda_d) return ToxicityDecision::kDeEscalate;
  return ToxicityDecision::kStay;
}

bool AdmissibleSet::contains(int dose_index) const {
  return std::find(dose_indices.begin(), dose_indices.end(), dose_index) != dose_indices.end();
}

AdmissibleSet admissible_set(std::span<const PosteriorSummary> summaries, const DesignConfig& config) {
  AdmissibleSet set;
  for (const auto& s : summaries) {
    DoseAdmissibility flags;
    flags.dose_index = s.dose_index;
    flags.untested = s.n == 0;
    if (!flags.untested) {
      flags.toxic = s.prob_toxic > config.delta_t;
      flags.futile = s.prob_futile > config.delta_e;
    }
    if (!flags.toxic && !flags.futile) set.dose_indices.push_back(s.dose_index);
    set.flags.push_back(flags);
  }
  return set;
}

std::vector<double> isotonic_tox_estimates(std::span<const ToxicityData> tested) {
  struct Block {
    double value;
    double weight;
    size_t size;
  };
  std::vector<Block> blocks;
  blocks.reserve(tested.size());
  for (const auto& d : tested) {
    if (d.n < 1) throw Error(ErrorKind::kDomainError, "isotonic regression needs n >= 1 per dose");
    blocks.push_back({static_cast<double>(d.n_tox) / d.n, static_cast<double>(d.n), 1});
    while (blocks.size() > 1 && blocks[blocks.size() - 2].value > blocks.back().value) {
      const Block top = blocks.back();
      blocks.pop_back();
      Block& prev = blocks.back();
      const double w = prev.weight + top.weight;
      prev.value = (prev.value * prev.weight + top.value * top.weight) / w;
      prev.weight = w;
      prev.size += top.size;
    }
  }
  std::vector<double> fitted;
  fitted.reserve(tested.size());
  for (const auto& b : blocks) fitted.insert(fitted.end(), b.size, b.value);
  return fitted;
}

int estimate_mtd(std::span<const ToxicityData> tested, double phi_t) {
  if (tested.empty()) throw Error(ErrorKind::kNoTestedDoses, "MTD needs at least one tested dose");
  const auto fitted = isotonic_tox_estimates(tested);
  constexpr double kTieTolerance = 1e-12;
  double best_distance = std::abs(fitted[0] - phi_t);
  for (double f : fitted) best_distance = std::min(best_distance, std::abs(f - phi_t));

  std::optional<size_t> highest_below;
  std::optional<size_t> lowest_above;
  for (size_t i = 0; i < fitted.size(); ++i) {
    if (std::abs(fitted[i] - phi_t) > best_distance + kTieTolerance) continue;
    if (fitted[i] <= phi_t) {
      highest_below = i;
    } else if (!lowest_above) {
      lowest_above = i;
    }
  }
  return tested[highest_below ? *highest_below : *lowest_above].dose_index;
}

namespace {

std::vector<ToxicityData> tested_doses(std::span<const PosteriorSummary> summaries) {
  std::vector<ToxicityData> tested;
  for (const auto& s : summaries) {
    if (s.n >= 1) tested.push_back({s.dose_index, s.n_tox, s.n});
  }
  return tested;
}

// Lowest tested dose failing the toxic rule; it and every higher dose are
// eliminated.
std::optional<int> lowest_toxic_dose(std::span<const PosteriorSummary> summaries, const DesignConfig& config) {
  for (const auto& s : summaries) {
    if (s.n >= 1 && s.prob_toxic > config.delta_t) return s.dose_index;
  }
  return std::nullopt;
}

// Toxicity-only BOIN safety rule: Beta(1,1) prior on the DLT rate, applied
// once at least three patients are evaluable.
bool boin_overdose(const PosteriorSummary& s, const DesignConfig& config) {
  if (s.n < 3) return false;
  const double tail = 1.0 - regularized_incomplete_beta(config.target_phi, 1.0 + s.n_tox, 1.0 + s.n - s.n_tox);
  return tail > config.delta_t;
}

std::optional<int> lowest_overdosed_dose(std::span<const PosteriorSummary> summaries, const DesignConfig& config) {
  for (const auto& s : summaries) {
    if (boin_overdose(s, config)) return s.dose_index;
  }
  return std::nullopt;
}

std::string fmt4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

}  // namespace

ObdSelection select_obd(std::span<const PosteriorSummary> summaries, const DesignConfig& config) {
  ObdSelection sel;
  sel.tested = tested_doses(summaries);
  sel.admissible = admissible_set(summaries, config);
  if (sel.tested.empty()) {
    sel.rationale.push_back("no dose has evaluable patients");
    return sel;
  }
  sel.isotonic = isotonic_tox_estimates(sel.tested);
  sel.mtd = estimate_mtd(sel.tested, config.phi_t);
  sel.rationale.push_back("MTD = dose " + std::to_string(*sel.mtd) + " (isotonic estimate closest to phi_t=" +
                          fmt4(config.phi_t) + ")");
  const auto toxic_floor = lowest_toxic_dose(summaries, config);
  if (toxic_floor) {
    sel.rationale.push_back("doses >= " + std::to_string(*toxic_floor) + " eliminated by the toxic rule");
  }

  std::optional<double> best_u;
  for (const auto& s : summaries) {
    if (s.n < 1 || !sel.admissible.contains(s.dose_index)) continue;
    if (s.dose_index > *sel.mtd) continue;
    if (toxic_floor && s.dose_index >= *toxic_floor) continue;
    if (!best_u || s.mean_utility > *best_u) {
      best_u = s.mean_utility;
      sel.obd = s.dose_index;
    }
  }
  if (sel.obd) {
    sel.rationale.push_back("OBD = dose " + std::to_string(*sel.obd) + " (highest mean utility " + fmt4(*best_u) +
                            " among admissible tested doses <= MTD)");
  } else {
    sel.rationale.push_back("no admissible tested dose at or below the MTD");
  }
  return sel;
}

ObdSelection select_mtd_boin(std::span<const PosteriorSummary> summaries, const DesignConfig& config) {
  ObdSelection sel;
  const auto floor = lowest_overdosed_dose(summaries, config);
  for (const auto& t : tested_doses(summaries)) {
    if (!floor || t.dose_index < *floor) sel.tested.push_back(t);
  }
  if (sel.tested.empty()) {
    sel.rationale.push_back("no tested dose below the overdose-control boundary");
    return sel;
  }
  sel.isotonic = isotonic_tox_estimates(sel.tested);
  sel.mtd = estimate_mtd(sel.tested, config.target_phi);
  sel.obd = sel.mtd;
  sel.rationale.push_back("MTD = dose " + std::to_string(*sel.mtd) + " (isotonic estimate closest to target " +
                          fmt4(config.target_phi) + ")");
  return sel;
}

int TrialSnapshot::total_enrolled() const {
  int total = 0;
  for (const auto& s : states) total += s.n_enrolled;
  return total;
}

Decision initial_decision(const DesignConfig& config, int doses) {
  Decision d;
  const int start = std::clamp(config.start_dose, 1, doses);
  d.kind = DecisionKind::kStay;
  d.next_dose = start;
  const auto& at = config.accelerated_titration;
  d.cohort_size = (at && start < at->trigger_dose_index) ? 1 : config.cohort_size;
  d.cohort_size = std::min({d.cohort_size, config.max_n, config.per_dose_cap});
  d.rationale.push_back("trial start at dose " + std::to_string(start));
  return d;
}

RandomizationWeights randomization_weights(std::span<const PosteriorSummary> summaries,
                                           const AdmissibleSet& admissible, AssignmentMode mode) {
  RandomizationWeights rw;
  double total = 0.0;
  for (const auto& s : summaries) {
    if (s.n < 1 || !admissible.contains(s.dose_index)) continue;
    rw.dose_indices.push_back(s.dose_index);
    rw.weights.push_back(std::max(0.0, s.mean_utility));
    total += rw.weights.back();
  }
  if (rw.dose_indices.empty()) throw Error(ErrorKind::kEmptyAdmissibleSet, "no tested admissible dose");
  const bool uniform = mode == AssignmentMode::kEqualRandomization || !(total > 0.0);
  for (auto& w : rw.weights) w = uniform ? 1.0 / static_cast<double>(rw.weights.size()) : w / total;
  return rw;
}

namespace {

Decision terminate(StopReason reason, std::vector<std::string> rationale, std::string why) {
  Decision d;
  d.kind = DecisionKind::kTerminate;
  d.stop_reason = reason;
  d.rationale = std::move(rationale);
  d.rationale.push_back(std::move(why));
  return d;
}

}  // namespace

Decision next_dose(const TrialSnapshot& snapshot, std::span<const PosteriorSummary> summaries,
                   const DesignConfig& config, CounterRng* rng) {
  const int doses = static_cast<int>(summaries.size());
  const int c = snapshot.current_dose;
  if (doses < 1 || c < 1 || c > doses || static_cast<int>(snapshot.states.size()) != doses) {
    throw Error(ErrorKind::kDimensionMismatch, "snapshot, summaries and current dose are inconsistent");
  }
  auto summary = [&](int j) -> const PosteriorSummary& { return summaries[static_cast<size_t>(j - 1)]; };
  std::vector<std::string> why;

  const int remaining = config.max_n - snapshot.total_enrolled();
  if (remaining <= 0) {
    return terminate(StopReason::kMaxSampleSize, std::move(why),
                     "maximum sample size " + std::to_string(config.max_n) + " reached");
  }

  const bool boin12 = config.design == DesignVariant::kBoin12;
  const auto floor = boin12 ? lowest_toxic_dose(summaries, config) : lowest_overdosed_dose(summaries, config);
  auto eliminated = [&](int j) { return floor && j >= *floor; };
  if (floor) {
    why.push_back("dose " + std::to_string(*floor) + " fails the toxic rule; it and all higher doses are eliminated");
    if (*floor == 1) return terminate(StopReason::kLowestDoseToxic, std::move(why), "lowest dose is toxic");
  }

  const auto& at = config.accelerated_titration;
  auto titrating = [&](int j) {
    return at && !snapshot.titration_triggered && j < at->trigger_dose_index;
  };
  auto cohort_for = [&](int j) {
    const int base = titrating(j) ? 1 : config.cohort_size;
    const int room = config.per_dose_cap - summary(j).n_enrolled;
    return std::max(1, std::min({base, remaining, room}));
  };
  auto finish = [&](int j, std::vector<std::string> rationale) -> Decision {
    if (summary(j).n_enrolled >= config.per_dose_cap) {
      return terminate(StopReason::kPerDoseCap, std::move(rationale),
                       "dose " + std::to_string(j) + " reached the per-dose cap of " +
                           std::to_string(config.per_dose_cap));
    }
    Decision d;
    d.next_dose = j;
    d.cohort_size = cohort_for(j);
    if (j > c) {
      d.kind = DecisionKind::kEscalate;
    } else if (j == c) {
      d.kind = DecisionKind::kStay;
    } else {
      d.kind = eliminated(c) ? DecisionKind::kEliminateAndDeEscalate : DecisionKind::kDeEscalate;
    }
    d.rationale = std::move(rationale);
    return d;
  };

  const auto& cur = summary(c);
  if (eliminated(c)) {
    if (eliminated(c - 1)) {
      return terminate(StopReason::kNoAdmissibleDose, std::move(why), "no non-eliminated dose within one level");
    }
    return finish(c - 1, std::move(why));
  }

  if (titrating(c)) {
    if (cur.n_tox == 0) {
      if (cur.n == 0) {
        why.push_back("accelerated titration: awaiting an evaluable outcome at the current dose");
        return finish(c, std::move(why));
      }
      why.push_back("accelerated titration: no trigger event at dose " + std::to_string(c));
      return finish(c < doses ? c + 1 : c, std::move(why));
    }
    why.push_back("accelerated titration ended by a DLT below the trigger grade");
  }

  std::optional<ToxicityDecision> gate;
  if (cur.n >= 1) {
    gate = boin_toxicity_decision(cur.n_tox, cur.n, config.lambda_e, config.lambda_d);
    why.push_back("observed DLT rate " + std::to_string(cur.n_tox) + "/" + std::to_string(cur.n) + " -> " +
                  to_string(*gate) + " (lambda_e=" + fmt4(config.lambda_e) + ", lambda_d=" + fmt4(config.lambda_d) +
                  ")");
  } else {
    why.push_back("no evaluable outcome at the current dose; holding");
    return finish(c, std::move(why));
  }

  // After titration each visited dose is filled to a full cohort before the
  // design moves on, unless the current dose is already over the boundary.
  if (at && !titrating(c) && cur.n_enrolled < config.cohort_size && *gate != ToxicityDecision::kDeEscalate) {
    why.push_back("filling dose " + std::to_string(c) + " to a cohort of " + std::to_string(config.cohort_size));
    Decision d = finish(c, std::move(why));
    if (!d.terminated()) {
      d.cohort_size = std::max(1, std::min({config.cohort_size - cur.n_enrolled, remaining,
                                            config.per_dose_cap - cur.n_enrolled}));
    }
    return d;
  }

  if (!boin12) {
    int j = c;
    if (*gate == ToxicityDecision::kEscalate && c < doses && !eliminated(c + 1)) j = c + 1;
    if (*gate == ToxicityDecision::kDeEscalate && c > 1) j = c - 1;
    return finish(j, std::move(why));
  }

  // BOIN12: safety window from the toxicity gate, then utility among the
  // admissible tested doses in it.
  std::vector<int> window;
  switch (*gate) {
    case ToxicityDecision::kEscalate: window = {c - 1, c, c + 1}; break;
    case ToxicityDecision::kStay: window = {c - 1, c}; break;
    case ToxicityDecision::kDeEscalate: window = {c > 1 ? c - 1 : c}; break;
  }
  std::erase_if(window, [&](int j) { return j < 1 || j > doses || eliminated(j); });

  if (*gate == ToxicityDecision::kEscalate && c < doses && !eliminated(c + 1) && summary(c + 1).n_enrolled == 0) {
    why.push_back("dose " + std::to_string(c + 1) + " untested; escalating without skipping");
    return finish(c + 1, std::move(why));
  }

  const auto admissible = admissible_set(summaries, config);
  std::vector<int> candidates;
  for (int j : window) {
    if (summary(j).n >= 1 && admissible.contains(j)) candidates.push_back(j);
  }

  if (candidates.empty()) {
    std::optional<int> nearest;
    for (int j = 1; j <= doses; ++j) {
      if (eliminated(j)) continue;
      if (summary(j).n >= 1 && !admissible.contains(j)) continue;
      if (!nearest || std::abs(j - c) < std::abs(*nearest - c)) nearest = j;
    }
    if (!nearest) {
      return terminate(StopReason::kNoAdmissibleDose, std::move(why), "all doses are inadmissible");
    }
    why.push_back("no admissible dose in the safety window; nearest eligible dose is " + std::to_string(*nearest));
    if (*nearest > c) {
      if (*gate == ToxicityDecision::kEscalate) return finish(c + 1, std::move(why));
      if (*gate == ToxicityDecision::kDeEscalate && c > 1) return finish(c - 1, std::move(why));
      return finish(c, std::move(why));
    }
    if (*nearest < c) return finish(c - 1, std::move(why));
    return finish(c, std::move(why));
  }

  int chosen = candidates.front();
  if (config.assignment_mode == AssignmentMode::kDeterministic) {
    for (int j : candidates) {
      if (summary(j).mean_utility > summary(chosen).mean_utility) chosen = j;
    }
    why.push_back("highest posterior mean utility among admissible doses in the window: dose " +
                  std::to_string(chosen) + " (U=" + fmt4(summary(chosen).mean_utility) + ")");
  } else {
    if (rng == nullptr) throw Error(ErrorKind::kValidation, "randomized assignment requires an RNG");
    AdmissibleSet local;
    local.dose_indices = candidates;
    const auto rw = randomization_weights(summaries, local, config.assignment_mode);
    chosen = rw.dose_indices[rng->categorical(rw.weights)];
    why.push_back(std::string(config.assignment_mode == AssignmentMode::kEqualRandomization ? "equal" : "adaptive") +
                  " randomization over the admissible doses in the window: dose " + std::to_string(chosen));
  }
  return finish(chosen, std::move(why));
}

DecisionTable decision_table(const DesignConfig& config, const UtilitySpec& spec, int max_per_dose) {
  if (max_per_dose < 0) throw Error(ErrorKind::kDomainError, "max_per_dose must be non-negative");
  const int k = spec.size();
  DecisionTable table;
  table.categories = k;
  table.max_per_dose = max_per_dose;

  std::vector<int> counts(static_cast<size_t>(k), 0);
  std::function<void(int, int)> fill = [&](int pos, int left) {
    if (pos == k - 1) {
      counts[static_cast<size_t>(pos)] = left;
      DoseState state{1, counts, 0};
      state.n_enrolled = state.n();
      const auto s = summarize(state, spec, config);
      const auto q = qbb_posterior(state, spec, config.prior_alpha);
      DecisionTableRow row;
      row.counts = counts;
      row.n = s.n;
      row.n_tox = s.n_tox;
      row.n_eff = s.n_eff;
      if (s.n >= 1) row.toxicity_decision = boin_toxicity_decision(s.n_tox, s.n, config.lambda_e, config.lambda_d);
      row.prob_toxic = s.prob_toxic;
      row.prob_futile = s.prob_futile;
      row.toxic = s.n >= 1 && s.prob_toxic > config.delta_t;
      row.futile = s.n >= 1 && s.prob_futile > config.delta_e;
      row.mean_utility = s.mean_utility;
      row.qbb_alpha = q.alpha;
      row.qbb_beta = q.beta;
      row.qbb_mean = q.mean();
      table.rows.push_back(std::move(row));
      return;
    }
    for (int v = left; v >= 0; --v) {
      counts[static_cast<size_t>(pos)] = v;
      fill(pos + 1, left - v);
    }
  };
  for (int n = 0; n <= max_per_dose; ++n) fill(0, n);
  return table;
}

}  // namespace obd
