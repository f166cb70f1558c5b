// SPDX-License-Identifier: Apache-2.0
#include "obd/simulator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "obd/error.hpp"
#include "obd/posterior.hpp"

namespace obd {

double IceProbability::at(int dose_index) const {
  if (values.empty()) return 0.0;
  if (values.size() == 1) return values.front();
  return values.at(static_cast<size_t>(dose_index - 1));
}

ValidationReport validate_scenario(const Scenario& s) {
  ValidationReport report = validate_dose_grid(s.grid);
  const auto j = static_cast<size_t>(s.grid.size());
  if (s.true_tox.size() != j) report.push_back("true_tox needs one value per dose");
  if (s.true_eff.size() != j) report.push_back("true_eff needs one value per dose");
  auto prob = [&](double p, const std::string& what) {
    if (!(p >= 0.0 && p <= 1.0)) report.push_back(what + " must lie in [0,1]");
  };
  for (double p : s.true_tox) prob(p, "true_tox");
  for (double p : s.true_eff) prob(p, "true_eff");
  const auto keys = all_ice_keys();
  for (const auto& [key, p] : s.ice_probabilities) {
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) report.push_back("unknown ICE key '" + key + "'");
    if (p.values.size() != 1 && p.values.size() != j) report.push_back("ICE probability '" + key + "' has bad length");
    for (double v : p.values) prob(v, "ICE probability '" + key + "'");
  }
  prob(s.stratum_fraction, "stratum_fraction");
  prob(s.grade2_ae_probability, "grade2_ae_probability");
  prob(s.post_ice_response_probability, "post_ice_response_probability");
  if (!(s.eff_tox_odds_ratio > 0.0) || !std::isfinite(s.eff_tox_odds_ratio)) {
    report.push_back("eff_tox_odds_ratio must be positive and finite");
  }
  if (s.evaluation_day < 2) report.push_back("evaluation_day must be at least 2");
  if (s.dlt_window_days < 1) report.push_back("dlt_window_days must be positive");
  return report;
}

std::array<double, 4> joint_outcome_table(double pe, double pt, double odds_ratio) {
  if (!(pe >= 0.0 && pe <= 1.0 && pt >= 0.0 && pt <= 1.0)) {
    throw Error(ErrorKind::kInfeasibleAssociation, "marginals must lie in [0,1]");
  }
  if (!(odds_ratio > 0.0) || !std::isfinite(odds_ratio)) {
    throw Error(ErrorKind::kInfeasibleAssociation, "odds ratio must be positive and finite");
  }
  // p11 = P(e=1, t=1) solves p11 (1 - pe - pt + p11) = OR (pe - p11)(pt - p11).
  const double lo = std::max(0.0, pe + pt - 1.0);
  const double hi = std::min(pe, pt);
  double p11;
  if (std::abs(odds_ratio - 1.0) < 1e-12) {
    p11 = pe * pt;
  } else {
    const double a = 1.0 - odds_ratio;
    const double b = 1.0 - pe - pt + odds_ratio * (pe + pt);
    const double c = -odds_ratio * pe * pt;
    const double disc = std::sqrt(std::max(0.0, b * b - 4.0 * a * c));
    // Numerically stable root that lands in [lo, hi].
    const double q = -0.5 * (b + std::copysign(disc, b));
    const double r1 = q / a;
    const double r2 = q != 0.0 ? c / q : r1;
    p11 = (r1 >= lo - 1e-12 && r1 <= hi + 1e-12) ? r1 : r2;
  }
  p11 = std::clamp(p11, lo, hi);
  std::array<double, 4> cells{pt - p11, 1.0 - pe - pt + p11, p11, pe - p11};
  for (double& v : cells) {
    if (v < -1e-12) throw Error(ErrorKind::kInfeasibleAssociation, "joint table has a negative cell");
    v = std::max(0.0, v);
  }
  return cells;
}

namespace {

bool stops_treatment(IceType t) {
  return t == IceType::kToxDiscontinuation || t == IceType::kProgressionDiscontinuation ||
         t == IceType::kSymptomaticDeterioration || t == IceType::kAdditionalTherapy || t == IceType::kSurgery;
}

Ice ice_from_key(const std::string& key) {
  Ice ice;
  if (const auto colon = key.find(':'); colon != std::string::npos) {
    ice.type = parse_ice_type(key.substr(0, colon));
    ice.surgery_reason = parse_surgery_reason(key.substr(colon + 1));
  } else {
    ice.type = parse_ice_type(key);
    if (ice.type == IceType::kSurgery) ice.surgery_reason = SurgeryReason::kClinicianChoice;
  }
  return ice;
}

}  // namespace

PatientRecord simulate_patient(const Scenario& scenario, int dose_index, const std::string& patient_id,
                               CounterRng& rng) {
  const auto idx = static_cast<size_t>(dose_index - 1);
  const auto cells = joint_outcome_table(scenario.true_eff.at(idx), scenario.true_tox.at(idx),
                                         scenario.eff_tox_odds_ratio);
  const size_t y = rng.categorical(cells);
  const bool efficacy = y >= 2;
  const bool toxicity = y == 0 || y == 2;

  PatientRecord rec;
  rec.patient_id = patient_id;
  rec.dose_index = dose_index;
  rec.first_dose_day = 0;
  rec.baseline_ok = true;
  rec.stratum_label = rng.bernoulli(scenario.stratum_fraction) ? "tolerator" : "non_tolerator";

  const int last_day = scenario.evaluation_day - 1;
  const int dlt_days = std::max(1, std::min(scenario.dlt_window_days, last_day));
  std::vector<Event> events;
  if (toxicity) {
    const int day = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(dlt_days)));
    events.push_back({day, Toxicity{3 + static_cast<int>(rng.below(2)), true}});
  } else if (rng.bernoulli(scenario.grade2_ae_probability)) {
    const int day = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(dlt_days)));
    events.push_back({day, Toxicity{2, false}});
  }

  std::optional<int> death_day;
  std::optional<std::pair<int, IceType>> stop;
  for (const auto& [key, prob] : scenario.ice_probabilities) {
    if (!rng.bernoulli(prob.at(dose_index))) continue;
    Ice ice = ice_from_key(key);
    const int day = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(last_day)));
    if (ice.type == IceType::kDoseSwitch) {
      const int up = dose_index < scenario.grid.size() ? dose_index + 1 : dose_index - 1;
      ice.new_dose_index = std::max(1, up);
    }
    if (ice.type == IceType::kDeath) {
      death_day = death_day ? std::min(*death_day, day) : day;
      continue;
    }
    if (stops_treatment(ice.type) && (!stop || day < stop->first)) stop = {day, ice.type};
    events.push_back({day, ice});
  }

  const ResponseGrade success = rng.bernoulli(0.5) ? ResponseGrade::kCR : ResponseGrade::kPR;
  const ResponseGrade failure = rng.bernoulli(0.5) ? ResponseGrade::kSD : ResponseGrade::kPD;
  const bool follow_up_shows_response = rng.bernoulli(scenario.post_ice_response_probability);
  const ResponseGrade underlying = efficacy ? success : failure;

  if (stop) {
    const ResponseGrade at_stop =
        stop->second == IceType::kProgressionDiscontinuation ? ResponseGrade::kPD : ResponseGrade::kSD;
    events.push_back({stop->first, Assessment{at_stop}});
    events.push_back({scenario.evaluation_day,
                      Assessment{follow_up_shows_response ? underlying : ResponseGrade::kSD}});
  } else {
    events.push_back({scenario.evaluation_day, Assessment{underlying}});
  }

  if (death_day) {
    std::erase_if(events, [&](const Event& e) { return e.day >= *death_day; });
    events.push_back({*death_day, Ice{IceType::kDeath, std::nullopt, std::nullopt}});
  }
  std::stable_sort(events.begin(), events.end(), [](const Event& a, const Event& b) { return a.day < b.day; });
  rec.events = std::move(events);
  return rec;
}

TrialResult run_trial(const Scenario& scenario, const DesignConfig& config, const StrategyMap& map,
                      const UtilitySpec& spec, std::uint64_t seed, std::uint64_t stream) {
  const int doses = scenario.grid.size();
  CounterRng rng(seed, stream);
  TrialResult result;
  result.seed = seed;
  result.stream = stream;

  std::vector<PatientRecord> records;
  TrialSnapshot snapshot;
  Decision decision = initial_decision(config, doses);
  snapshot.current_dose = *decision.next_dose;
  int cohort_size = decision.cohort_size;
  const int trigger_grade = config.accelerated_titration ? config.accelerated_titration->trigger_grade : 0;

  for (int cohort = 1;; ++cohort) {
    AuditEntry entry;
    entry.cohort = cohort;
    entry.dose_index = snapshot.current_dose;
    entry.cohort_size = cohort_size;
    for (int i = 0; i < cohort_size; ++i) {
      const std::string id = "p" + std::to_string(records.size() + 1);
      records.push_back(simulate_patient(scenario, snapshot.current_dose, id, rng));
      entry.patient_ids.push_back(id);
      for (const auto& ev : records.back().events) {
        if (const auto* t = std::get_if<Toxicity>(&ev.detail); t && trigger_grade > 0 && t->grade >= trigger_grade) {
          snapshot.titration_triggered = true;
        }
      }
    }
    const auto set = build_analysis_set(records, map, spec);
    snapshot.states = tally(set, doses, spec.size());
    const auto summaries = summarize_all(snapshot.states, spec, config);
    decision = next_dose(snapshot, summaries, config, &rng);
    entry.counts_at_dose = snapshot.states[static_cast<size_t>(entry.dose_index - 1)].counts;
    entry.decision = decision;
    result.audit.push_back(std::move(entry));

    if (decision.terminated()) {
      const auto selection = config.design == DesignVariant::kBoin12 ? select_obd(summaries, config)
                                                                     : select_mtd_boin(summaries, config);
      result.mtd = selection.mtd;
      result.early_termination = decision.early_termination();
      if (!result.early_termination) result.obd = selection.obd;
      result.stop_reason = decision.stop_reason;
      break;
    }
    snapshot.current_dose = *decision.next_dose;
    cohort_size = decision.cohort_size;
  }

  result.enrolled_per_dose.assign(static_cast<size_t>(doses), 0);
  for (const auto& r : records) {
    ++result.enrolled_per_dose[static_cast<size_t>(r.dose_index - 1)];
    for (const auto& ev : r.events) {
      if (const auto* t = std::get_if<Toxicity>(&ev.detail); t && t->dlt) {
        ++result.dlt_count;
        break;
      }
    }
  }
  result.final_states = snapshot.states;
  result.total_enrolled = static_cast<int>(records.size());
  return result;
}

std::optional<int> true_optimal_dose(const Scenario& scenario, const DesignConfig& config, const UtilitySpec& spec) {
  std::optional<int> best;
  double best_u = 0.0;
  for (int j = 1; j <= scenario.grid.size(); ++j) {
    const auto idx = static_cast<size_t>(j - 1);
    const double pt = scenario.true_tox[idx];
    const double pe = scenario.true_eff[idx];
    if (pt > config.phi_t || pe < config.phi_e) continue;
    const auto cells = joint_outcome_table(pe, pt, scenario.eff_tox_odds_ratio);
    double u = 0.0;
    for (int k = 0; k < 4; ++k) {
      const bool e = k >= 2;
      const bool t = k == 0 || k == 2;
      u += cells[static_cast<size_t>(k)] * spec.psi(classify_outcome(e, t, spec));
    }
    if (!best || u > best_u) {
      best = j;
      best_u = u;
    }
  }
  return best;
}

OperatingCharacteristics operating_characteristics(const Scenario& scenario, const DesignConfig& config,
                                                   const StrategyMap& map, const UtilitySpec& spec, int reps,
                                                   std::uint64_t master_seed, int parallelism) {
  if (reps < 1) throw Error(ErrorKind::kValidation, "reps must be at least 1");
  if (const auto report = validate_scenario(scenario); !report.empty()) {
    throw Error(ErrorKind::kValidation, "scenario: " + report.front());
  }
  const int doses = scenario.grid.size();
  std::vector<TrialResult> results(static_cast<size_t>(reps));
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int r = next++; r < reps; r = next++) {
      results[static_cast<size_t>(r)] =
          run_trial(scenario, config, map, spec, master_seed, static_cast<std::uint64_t>(r));
      results[static_cast<size_t>(r)].audit.clear();
    }
  };
  const int threads = std::clamp(parallelism, 1, reps);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(static_cast<size_t>(threads));
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  OperatingCharacteristics oc;
  oc.reps = reps;
  oc.master_seed = master_seed;
  oc.true_optimal_dose = true_optimal_dose(scenario, config, spec);
  oc.selection_counts.assign(static_cast<size_t>(doses + 1), 0);
  oc.mean_patients.assign(static_cast<size_t>(doses), 0.0);
  int correct = 0;
  int early = 0;
  double total_n = 0.0;
  double dlts = 0.0;
  for (const auto& r : results) {
    ++oc.selection_counts[static_cast<size_t>(r.obd.value_or(0))];
    for (int j = 0; j < doses; ++j) oc.mean_patients[static_cast<size_t>(j)] += r.enrolled_per_dose[static_cast<size_t>(j)];
    total_n += r.total_enrolled;
    dlts += r.dlt_count;
    if (r.early_termination) ++early;
    if (r.obd == oc.true_optimal_dose) ++correct;
  }
  for (int c : oc.selection_counts) oc.selection_pct.push_back(100.0 * c / reps);
  for (auto& m : oc.mean_patients) m /= reps;
  oc.mean_total_n = total_n / reps;
  oc.mean_dlt_count = dlts / reps;
  oc.early_termination_pct = 100.0 * early / reps;
  oc.correct_selection_pct = 100.0 * correct / reps;
  return oc;
}

}  // namespace obd
