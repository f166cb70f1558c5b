#include <cmath>
#include <random>
#include <set>

#include "doctest.h"
#include "obd/decision.hpp"
#include "obd/error.hpp"
#include "oracles.hpp"

using namespace obd;

namespace {

std::vector<DoseState> states_of(const std::vector<std::vector<int>>& counts) {
  std::vector<DoseState> out;
  for (size_t j = 0; j < counts.size(); ++j) {
    DoseState s{static_cast<int>(j + 1), counts[j], 0};
    s.n_enrolled = s.n();
    out.push_back(s);
  }
  return out;
}

DesignConfig plain_config() {
  auto c = DesignConfig::case_study();
  c.accelerated_titration.reset();
  return c;
}

Decision decide(const std::vector<std::vector<int>>& counts, int current, const DesignConfig& config,
                bool triggered = true) {
  const auto states = states_of(counts);
  const auto summaries = summarize_all(states, UtilitySpec::canonical(), config);
  return next_dose(TrialSnapshot{current, states, triggered}, summaries, config);
}

}  // namespace

TEST_CASE("BOIN boundaries match the likelihood-ratio root") {
  for (double phi : {0.15, 0.2, 0.25, 0.3, 0.33, 0.4}) {
    const auto b = boin_boundaries(phi);
    CHECK(b.lambda_e == doctest::Approx(oracle::likelihood_ratio_boundary(0.6 * phi, phi)).epsilon(1e-12));
    CHECK(b.lambda_d == doctest::Approx(oracle::likelihood_ratio_boundary(phi, 1.4 * phi)).epsilon(1e-12));
    CHECK(b.lambda_e < phi);
    CHECK(phi < b.lambda_d);
  }
  const auto b = boin_boundaries(0.3);
  CHECK(std::abs(b.lambda_e - 0.2364) <= 0.0005);
  CHECK(std::abs(b.lambda_d - 0.3586) <= 0.0005);
  CHECK_THROWS_AS(boin_boundaries(0.3, 0.35), Error);
  CHECK_THROWS_AS(boin_boundaries(0.8), Error);
}

TEST_CASE("toxicity gate") {
  const auto b = boin_boundaries(0.3);
  CHECK(boin_toxicity_decision(0, 3, b.lambda_e, b.lambda_d) == ToxicityDecision::kEscalate);
  CHECK(boin_toxicity_decision(1, 3, b.lambda_e, b.lambda_d) == ToxicityDecision::kStay);
  CHECK(boin_toxicity_decision(2, 6, b.lambda_e, b.lambda_d) == ToxicityDecision::kStay);
  CHECK(boin_toxicity_decision(1, 6, b.lambda_e, b.lambda_d) == ToxicityDecision::kEscalate);
  CHECK(boin_toxicity_decision(3, 6, b.lambda_e, b.lambda_d) == ToxicityDecision::kDeEscalate);
  CHECK(boin_toxicity_decision(1, 2, b.lambda_e, b.lambda_d) == ToxicityDecision::kDeEscalate);
  // Exactly on a boundary: rate <= lambda_e escalates, rate >= lambda_d de-escalates.
  CHECK(boin_toxicity_decision(1, 4, 0.25, 0.35) == ToxicityDecision::kEscalate);
  CHECK(boin_toxicity_decision(7, 20, 0.25, 0.35) == ToxicityDecision::kDeEscalate);
  CHECK_THROWS_AS(boin_toxicity_decision(0, 0, b.lambda_e, b.lambda_d), Error);
}

TEST_CASE("admissible set flags toxic, futile and untested doses") {
  const auto config = DesignConfig::case_study();
  const auto summaries =
      summarize_all(states_of({{0, 0, 0, 6}, {6, 0, 0, 0}, {0, 9, 0, 0}, {0, 0, 0, 0}}), UtilitySpec::canonical(), config);
  const auto set = admissible_set(summaries, config);
  CHECK(set.dose_indices == std::vector<int>{1, 4});
  CHECK(set.flags[1].toxic);
  CHECK(set.flags[2].futile);
  CHECK(set.flags[3].untested);
  CHECK_FALSE(set.flags[0].toxic);
}

TEST_CASE("PAVA equals the brute-force monotone projection with unequal weights") {
  std::mt19937_64 gen(21);
  std::uniform_int_distribution<int> n_dist(1, 9);
  for (int trial = 0; trial < 3000; ++trial) {
    const int doses = 1 + trial % 7;
    std::vector<ToxicityData> data;
    std::vector<double> y;
    std::vector<double> w;
    for (int j = 0; j < doses; ++j) {
      const int n = n_dist(gen);
      const int t = std::uniform_int_distribution<int>(0, n)(gen);
      data.push_back({j + 1, t, n});
      y.push_back(static_cast<double>(t) / n);
      w.push_back(n);
    }
    const auto got = isotonic_tox_estimates(data);
    const auto want = oracle::isotonic_brute_force(y, w);
    REQUIRE(got.size() == want.size());
    for (size_t i = 0; i < got.size(); ++i) CHECK(std::abs(got[i] - want[i]) < 1e-12);
  }
}

TEST_CASE("MTD is the isotonic estimate closest to phi_t") {
  const std::vector<ToxicityData> data{{1, 0, 3}, {2, 1, 6}, {3, 2, 6}, {4, 3, 3}};
  // Estimates 0, 1/6, 1/3, 1.
  CHECK(estimate_mtd(data, 0.35) == 3);
  CHECK(estimate_mtd(data, 0.2) == 2);
  SUBCASE("ties prefer the highest dose at or below phi_t") {
    const std::vector<ToxicityData> tie{{1, 1, 5}, {2, 2, 5}};
    // 0.2 and 0.4 are equidistant from 0.3.
    CHECK(estimate_mtd(tie, 0.3) == 1);
  }
  SUBCASE("pooled doses share an estimate") {
    const std::vector<ToxicityData> pooled{{1, 2, 6}, {2, 1, 6}, {3, 6, 6}};
    // Doses 1 and 2 pool to 0.25; the highest of them wins.
    CHECK(estimate_mtd(pooled, 0.3) == 2);
  }
  CHECK_THROWS_AS(estimate_mtd(std::vector<ToxicityData>{}, 0.3), Error);
}

TEST_CASE("OBD selection is capped at the MTD and skips inadmissible doses") {
  const auto config = DesignConfig::case_study();
  const auto spec = UtilitySpec::canonical();
  SUBCASE("utility argmax below the MTD") {
    const auto summaries = summarize_all(states_of({{0, 3, 0, 0}, {0, 1, 0, 2}, {1, 0, 1, 4}, {1, 1, 1, 0}}), spec, config);
    const auto sel = select_obd(summaries, config);
    REQUIRE(sel.obd);
    CHECK(*sel.obd == 3);
    CHECK_FALSE(sel.rationale.empty());
  }
  SUBCASE("utility peak above the MTD is not selectable") {
    // Isotonic toxicity 0, 1/3, 1/2: the MTD is dose 2 while dose 3 has the
    // highest utility and is not eliminated.
    const auto summaries = summarize_all(states_of({{0, 1, 0, 2}, {1, 2, 0, 0}, {0, 0, 3, 3}}), spec, config);
    CHECK(summaries[2].mean_utility > summaries[0].mean_utility);
    const auto sel = select_obd(summaries, config);
    REQUIRE(sel.mtd);
    CHECK(*sel.mtd == 2);
    REQUIRE(sel.obd);
    CHECK(*sel.obd <= *sel.mtd);
  }
  SUBCASE("every dose futile") {
    const auto summaries = summarize_all(states_of({{0, 9, 0, 0}, {0, 9, 0, 0}}), spec, config);
    CHECK_FALSE(select_obd(summaries, config).obd.has_value());
  }
  SUBCASE("nothing tested") {
    const auto summaries = summarize_all(states_of({{0, 0, 0, 0}, {0, 0, 0, 0}}), spec, config);
    const auto sel = select_obd(summaries, config);
    CHECK_FALSE(sel.obd.has_value());
    CHECK_FALSE(sel.mtd.has_value());
  }
}

TEST_CASE("next dose follows the safety window") {
  const auto config = plain_config();
  SUBCASE("escalate to an untested next dose") {
    const auto d = decide({{0, 1, 0, 2}, {0, 0, 0, 0}, {0, 0, 0, 0}}, 1, config);
    CHECK(d.kind == DecisionKind::kEscalate);
    CHECK(d.next_dose == 2);
    CHECK(d.cohort_size == 3);
  }
  SUBCASE("stay window picks the better of c-1 and c") {
    const auto d = decide({{0, 0, 0, 3}, {1, 2, 0, 0}, {0, 0, 0, 0}}, 2, config);
    CHECK(d.next_dose == 1);
    CHECK(d.kind == DecisionKind::kDeEscalate);
  }
  SUBCASE("de-escalate on high toxicity") {
    const auto d = decide({{0, 1, 0, 2}, {2, 0, 1, 0}, {0, 0, 0, 0}}, 2, config);
    CHECK(d.next_dose == 1);
  }
  SUBCASE("de-escalate at the lowest dose stays") {
    const auto d = decide({{1, 1, 1, 0}, {0, 0, 0, 0}}, 1, config);
    CHECK(d.next_dose == 1);
    CHECK(d.kind == DecisionKind::kStay);
  }
  SUBCASE("escalation window never skips a dose") {
    const auto d = decide({{0, 1, 0, 2}, {0, 0, 0, 3}, {0, 0, 0, 0}, {0, 0, 0, 0}}, 1, config);
    CHECK(d.next_dose == 2);
    const auto tie = decide({{0, 0, 0, 3}, {0, 0, 0, 3}, {0, 0, 0, 0}}, 1, config);
    CHECK(tie.next_dose == 1);
  }
}

TEST_CASE("termination rules") {
  auto config = plain_config();
  SUBCASE("lowest dose toxic") {
    const auto d = decide({{6, 0, 0, 0}, {0, 0, 0, 0}}, 1, config);
    CHECK(d.terminated());
    CHECK(d.stop_reason == StopReason::kLowestDoseToxic);
    CHECK(d.early_termination());
  }
  SUBCASE("maximum sample size") {
    config.max_n = 6;
    config.per_dose_cap = 6;
    const auto d = decide({{0, 1, 0, 2}, {0, 1, 0, 2}}, 2, config);
    CHECK(d.terminated());
    CHECK(d.stop_reason == StopReason::kMaxSampleSize);
    CHECK_FALSE(d.early_termination());
  }
  SUBCASE("per-dose cap") {
    const auto d = decide({{3, 3, 0, 6}, {0, 0, 0, 0}}, 1, config);
    CHECK(d.terminated());
    CHECK(d.stop_reason == StopReason::kPerDoseCap);
    const auto up = decide({{0, 4, 0, 8}, {0, 0, 0, 0}}, 1, config);
    CHECK(up.next_dose == 2);
  }
  SUBCASE("eliminated current dose moves down") {
    const auto d = decide({{0, 1, 0, 2}, {5, 0, 1, 0}}, 2, config);
    CHECK(d.kind == DecisionKind::kEliminateAndDeEscalate);
    CHECK(d.next_dose == 1);
  }
  SUBCASE("all tested doses futile") {
    const auto d = decide({{0, 9, 0, 0}, {0, 9, 0, 0}}, 2, config);
    CHECK(d.terminated());
    CHECK(d.stop_reason == StopReason::kNoAdmissibleDose);
  }
}

TEST_CASE("accelerated titration") {
  const auto config = DesignConfig::case_study();
  const auto init = initial_decision(config, 8);
  CHECK(init.next_dose == 1);
  CHECK(init.cohort_size == 1);
  SUBCASE("single patients escalate without a trigger event") {
    const auto d = decide({{0, 1, 0, 0}, {0, 0, 0, 0}, {0, 0, 0, 0}}, 1, config, false);
    CHECK(d.next_dose == 2);
    CHECK(d.cohort_size == 1);
  }
  SUBCASE("reaching the trigger dose switches to full cohorts") {
    const auto d = decide({{0, 1, 0, 0}, {0, 1, 0, 0}, {0, 1, 0, 0}, {0, 1, 0, 0}, {0, 0, 0, 0}}, 4, config, false);
    CHECK(d.next_dose == 5);
    CHECK(d.cohort_size == 3);
  }
  SUBCASE("a trigger event fills the current dose to a cohort") {
    const auto d = decide({{0, 1, 0, 0}, {0, 1, 0, 0}, {0, 0, 0, 0}}, 2, config, true);
    CHECK(d.next_dose == 2);
    CHECK(d.cohort_size == 2);
  }
}

TEST_CASE("comparator design moves by the toxicity gate only") {
  auto config = plain_config();
  config.design = DesignVariant::kBoinToxicityOnly;
  const auto d = decide({{0, 3, 0, 0}, {0, 0, 0, 0}}, 1, config);
  CHECK(d.next_dose == 2);
  const auto spec = UtilitySpec::canonical();
  const auto sel = select_mtd_boin(summarize_all(states_of({{0, 3, 0, 0}, {1, 2, 0, 0}, {3, 0, 0, 0}}), spec, config), config);
  REQUIRE(sel.obd);
  CHECK(*sel.obd == 2);
}

TEST_CASE("randomization weights") {
  const auto config = DesignConfig::case_study();
  const auto summaries =
      summarize_all(states_of({{0, 1, 0, 2}, {0, 0, 0, 3}, {0, 9, 0, 0}, {0, 0, 0, 0}}), UtilitySpec::canonical(), config);
  const auto adm = admissible_set(summaries, config);
  const auto w = randomization_weights(summaries, adm);
  CHECK(w.dose_indices == std::vector<int>{1, 2});
  CHECK(w.weights[0] + w.weights[1] == doctest::Approx(1.0));
  CHECK(w.weights[0] / w.weights[1] == doctest::Approx(summaries[0].mean_utility / summaries[1].mean_utility));
  const auto eq = randomization_weights(summaries, adm, AssignmentMode::kEqualRandomization);
  CHECK(eq.weights == std::vector<double>{0.5, 0.5});
  AdmissibleSet none;
  CHECK_THROWS_AS(randomization_weights(summaries, none), Error);
}

TEST_CASE("randomized assignment needs an rng and stays in the window") {
  auto config = plain_config();
  config.assignment_mode = AssignmentMode::kAdaptiveRandomization;
  const auto states = states_of({{0, 1, 0, 2}, {0, 1, 0, 2}, {0, 0, 0, 3}});
  const auto summaries = summarize_all(states, UtilitySpec::canonical(), config);
  CHECK_THROWS_AS(next_dose(TrialSnapshot{2, states, true}, summaries, config), Error);
  CounterRng rng(1, 0);
  std::set<int> seen;
  for (int i = 0; i < 200; ++i) seen.insert(*next_dose(TrialSnapshot{2, states, true}, summaries, config, &rng).next_dose);
  CHECK(seen == std::set<int>{1, 2, 3});
}

TEST_CASE("decision table enumerates every count vector in order") {
  const auto config = DesignConfig::case_study();
  const auto table = decision_table(config, UtilitySpec::canonical(), 3);
  // Compositions of n into 4 parts for n = 0..3: 1 + 4 + 10 + 20.
  CHECK(table.rows.size() == 35);
  CHECK(table.rows[0].n == 0);
  CHECK_FALSE(table.rows[0].toxicity_decision.has_value());
  CHECK(table.rows[1].counts == std::vector<int>{1, 0, 0, 0});
  CHECK(table.rows[4].counts == std::vector<int>{0, 0, 0, 1});
  CHECK(table.rows[5].counts == std::vector<int>{2, 0, 0, 0});
  for (const auto& r : table.rows) {
    CHECK(100.0 * r.qbb_mean == doctest::Approx(r.mean_utility).epsilon(1e-12));
  }
}
