// Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any failure.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "httplib.h"
#include "obd/decision.hpp"
#include "obd/estimand.hpp"
#include "obd/json_io.hpp"
#include "obd/posterior.hpp"
#include "obd/sensitivity.hpp"
#include "obd/service.hpp"
#include "obd/simulator.hpp"
#include "obd/special_functions.hpp"
#include "oracles.hpp"
#include "scripted_trial.hpp"
#include "tipping_oracle.hpp"

using namespace obd;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void criterion(const char* name, double budget_s, const std::function<Outcome()>& body) {
  const auto t0 = Clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
  if (budget_s > 0 && secs > budget_s) {
    o.pass = false;
    o.detail += " [over time budget " + std::to_string(budget_s) + " s]";
  }
  failures += !o.pass;
  std::printf("%s  %-28s %s (%.3f s)\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str(), secs);
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

DoseState state_of(int dose, std::vector<int> counts) {
  DoseState s{dose, std::move(counts), 0};
  s.n_enrolled = s.n();
  return s;
}

// Upper-tail one-sided two-proportion z statistic for p_a > p_b.
double z_two_proportion(int xa, int na, int xb, int nb) {
  const double pa = static_cast<double>(xa) / na;
  const double pb = static_cast<double>(xb) / nb;
  const double p = static_cast<double>(xa + xb) / (na + nb);
  const double se = std::sqrt(p * (1 - p) * (1.0 / na + 1.0 / nb));
  return se > 0 ? (pa - pb) / se : (pa > pb ? INFINITY : 0.0);
}

constexpr double kZ01 = 2.3263478740408408;  // one-sided 0.01 critical value

Outcome boundary_anchor() {
  const auto t0 = Clock::now();
  const auto b = boin_boundaries(0.3);
  const double us = std::chrono::duration<double, std::micro>(Clock::now() - t0).count();
  const bool ok = std::abs(b.lambda_e - 0.2364) <= 0.0005 && std::abs(b.lambda_d - 0.3586) <= 0.0005 && us < 1000.0;
  return {ok, fmt("lambda_e=%.4f lambda_d=%.4f in %.1f us", b.lambda_e, b.lambda_d, us)};
}

Outcome utility_anchor() {
  const auto spec = UtilitySpec::canonical();
  if (!validate_utility_spec(spec).empty()) return {false, "canonical psi does not validate"};
  const std::vector<double> prior(4, 0.25);
  const auto post = dirichlet_posterior(state_of(1, {1, 2, 0, 3}), prior);
  const double u = mean_utility(post, spec);
  const auto mc = oracle::dirichlet_utility_mc(post.alpha, {0, 10, 60, 100}, 1'000'000, 20240601);
  const double z = (mc.mean - u) / mc.se;
  const bool ok = std::abs(u - 51.7857) <= 1e-4 && std::abs(u - 362.5 / 7.0) <= 1e-9 && std::abs(z) <= 3.0;
  return {ok, fmt("U=%.10f MC=%.4f (%.2f SE)", u, mc.mean, z)};
}

Outcome qbb_identity() {
  std::mt19937_64 gen(31);
  const auto spec = UtilitySpec::canonical();
  const std::vector<double> prior(4, 0.25);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const int n = std::uniform_int_distribution<int>(0, 100)(gen);
    std::vector<int> counts(4, 0);
    for (int p = 0; p < n; ++p) ++counts[std::uniform_int_distribution<int>(0, 3)(gen)];
    const auto s = state_of(1, counts);
    const double gap =
        std::abs(100.0 * qbb_posterior(s, spec, prior).mean() - mean_utility(dirichlet_posterior(s, prior), spec));
    worst = std::max(worst, gap);
  }
  return {worst <= 1e-10, fmt("1000 vectors, max gap %.2e", worst)};
}

Outcome theorem1() {
  std::mt19937_64 gen(77);
  const auto config = DesignConfig::case_study();
  int mismatches = 0;
  for (int inst = 0; inst < 100; ++inst) {
    const double w = std::uniform_real_distribution<double>(0.05, 2.0)(gen);
    const int doses = std::uniform_int_distribution<int>(2, 8)(gen);
    const auto psi = theorem1_psi(w);
    std::vector<double> um;
    std::vector<double> u;
    for (int j = 1; j <= doses; ++j) {
      std::vector<int> c(4);
      for (int& v : c) v = std::uniform_int_distribution<int>(0, 12)(gen);
      const auto s = state_of(j, c);
      // Marginal trade-off computed directly from the Dirichlet means.
      std::vector<double> a(4);
      double total = 0.0;
      for (size_t k = 0; k < 4; ++k) total += a[k] = config.prior_alpha[k] + c[k];
      const double pe = (a[2] + a[3]) / total;
      const double pt = (a[0] + a[2]) / total;
      um.push_back(pe - w * pt);
      u.push_back(mean_utility(dirichlet_posterior(s, config.prior_alpha), psi));
    }
    const size_t best_um = std::max_element(um.begin(), um.end()) - um.begin();
    const size_t best_u = std::max_element(u.begin(), u.end()) - u.begin();
    if (best_um != best_u && std::abs(um[best_um] - um[best_u]) > 1e-12) ++mismatches;
  }
  return {mismatches == 0, fmt("100 instances, %d mismatches", mismatches)};
}

Outcome tail_oracle() {
  const auto spec = UtilitySpec::canonical();
  const std::vector<double> prior(4, 0.25);
  std::mt19937_64 gen(4242);
  double worst_quad = 0.0;
  double worst_mc = 0.0;
  for (int i = 0; i < 50; ++i) {
    std::vector<int> c(4);
    for (int& v : c) v = std::uniform_int_distribution<int>(0, 8)(gen);
    const auto post = dirichlet_posterior(state_of(1, c), prior);
    const bool tox = i < 25;
    const double cut = tox ? 0.35 : 0.25;
    // Aggregated Dirichlet mass of the flagged categories is Beta(a, b).
    const double a = tox ? post.alpha[0] + post.alpha[2] : post.alpha[2] + post.alpha[3];
    const double b = post.total() - a;
    const double got = tox ? prob_tox_exceeds(post, spec, cut) : prob_eff_below(post, spec, cut);
    const double upper_quad = 1.0 - oracle::beta_cdf_quadrature(cut, a, b);
    const double upper_mc = oracle::beta_upper_tail_mc(cut, a, b, 10'000'000, 1000 + i);
    const double want_quad = tox ? upper_quad : 1.0 - upper_quad;
    const double want_mc = tox ? upper_mc : 1.0 - upper_mc;
    worst_quad = std::max(worst_quad, std::abs(got - want_quad));
    worst_mc = std::max(worst_mc, std::abs(got - want_mc));
  }
  double worst_reflect = 0.0;
  for (int i = 0; i < 2000; ++i) {
    const double x = std::uniform_real_distribution<double>(0.0, 1.0)(gen);
    const double a = std::uniform_real_distribution<double>(0.05, 60.0)(gen);
    const double b = std::uniform_real_distribution<double>(0.05, 60.0)(gen);
    worst_reflect = std::max(worst_reflect, std::abs(regularized_incomplete_beta(x, a, b) +
                                                     regularized_incomplete_beta(1.0 - x, b, a) - 1.0));
  }
  const bool ok = worst_quad <= 0.002 && worst_mc <= 0.002 && worst_reflect <= 1e-12;
  return {ok, fmt("50 cases, max |quad| %.1e, max |MC| %.1e, reflection %.1e", worst_quad, worst_mc, worst_reflect)};
}

Outcome isotonic() {
  constexpr int kN = 12;
  long long instances = 0;
  long long mismatches = 0;
  for (int doses = 1; doses <= 6; ++doses) {
    std::vector<int> tox(doses, 0);
    std::vector<ToxicityData> data(doses);
    std::vector<double> y(doses);
    const std::vector<double> w(doses, kN);
    while (true) {
      for (int j = 0; j < doses; ++j) {
        data[j] = {j + 1, tox[j], kN};
        y[j] = static_cast<double>(tox[j]) / kN;
      }
      const auto got = isotonic_tox_estimates(data);
      const auto want = oracle::isotonic_brute_force(y, w);
      for (int j = 0; j < doses; ++j) {
        if (std::abs(got[j] - want[j]) > 1e-12) {
          ++mismatches;
          break;
        }
      }
      ++instances;
      int k = 0;
      while (k < doses && ++tox[k] > kN) tox[k++] = 0;
      if (k == doses) break;
    }
  }
  return {mismatches == 0, fmt("%lld vectors, %lld mismatches", instances, mismatches)};
}

Outcome estimand_semantics() {
  using namespace fixture;
  const auto spec = UtilitySpec::canonical();
  std::vector<std::string> bad;
  const auto expect = [&](const char* what, bool ok) {
    if (!ok) bad.push_back(what);
  };
  const auto fig = patient("fig", 1,
                           {assess(28, ResponseGrade::kSD), ice(30, IceType::kToxDiscontinuation),
                            assess(56, ResponseGrade::kCR)});
  expect("treatment policy", derive_outcome(fig, StrategyMap::uniform(Strategy::kTreatmentPolicy), spec).efficacy == true);
  expect("while on treatment",
         derive_outcome(fig, StrategyMap::uniform(Strategy::kWhileOnTreatment), spec).efficacy == false);
  const auto composite = StrategyMap::uniform(Strategy::kComposite);
  const auto tox = derive_outcome(
      patient("t", 1, {assess(28, ResponseGrade::kPR), ice(30, IceType::kToxDiscontinuation)}), composite, spec);
  const auto death = derive_outcome(patient("d", 1, {assess(28, ResponseGrade::kCR), ice(40, IceType::kDeath)}), composite, spec);
  expect("composite toxicity", tox.category && spec.psi(*tox.category) == 0.0);
  expect("composite death", death.category && spec.psi(*death.category) == 0.0);

  // Nine patients, one per ICE row: stable disease before, CR after.
  const auto map = StrategyMap::case_study();
  const auto row = [&](Event ev) {
    return derive_outcome(patient("r", 2, {assess(28, ResponseGrade::kSD), ev, assess(56, ResponseGrade::kCR)}), map, spec);
  };
  const auto r1 = row(ice(30, IceType::kToxDiscontinuation));
  const auto r2 = row(ice(30, IceType::kDeath));
  const auto r3 = row(ice(30, IceType::kAdditionalTherapy));
  const auto r4 = row(ice(30, IceType::kProgressionDiscontinuation));
  const auto r5 = row(ice(30, IceType::kAdaOccurrence));
  const auto r6 = row(dose_switch(30, 3));
  const auto r7 = row(surgery(30, SurgeryReason::kClinicianChoice));
  const auto r8 = row(surgery(30, SurgeryReason::kTumorShrinkage));
  const auto r9 = row(surgery(30, SurgeryReason::kExternalFactors));
  expect("tox discontinuation row", r1.category == 1);
  expect("death row", r2.category == 1);
  expect("additional therapy row", r3.category == 2);
  expect("progression row", r4.category == 2);
  expect("ADA row", r5.category == 4);
  expect("dose switch row", r6.category == 4 && r6.dose_index == 2);
  expect("clinician surgery row", r7.category == 2);
  expect("tumor shrinkage surgery row", r8.category == 4);
  expect("external surgery row", !r9.evaluable && r9.flagged_for_sensitivity && !r9.category);
  std::string detail = bad.empty() ? "fig-2 fixture, composite fixtures and 9 strategy rows" : "failed:";
  for (const auto& b : bad) detail += " " + b + ";";
  return {bad.empty(), detail};
}

Scenario plateau_scenario() {
  Scenario s;
  s.name = "plateau";
  s.grid = DoseGrid::numbered(8);
  s.true_tox = {0.02, 0.03, 0.05, 0.07, 0.09, 0.12, 0.15, 0.18};
  s.true_eff = {0.05, 0.10, 0.25, 0.5, 0.5, 0.5, 0.5, 0.5};
  return s;
}

Outcome parallel_invariance() {
  const auto s = plateau_scenario();
  const auto config = DesignConfig::case_study();
  const auto one = operating_characteristics(s, config, StrategyMap::case_study(), UtilitySpec::canonical(), 1000, 42, 1);
  const auto eight = operating_characteristics(s, config, StrategyMap::case_study(), UtilitySpec::canonical(), 1000, 42, 8);
  const bool same = document(one).dump() == document(eight).dump();
  return {same, same ? "1000 reps, 8 doses: identical OC JSON for 1 and 8 threads" : "OC JSON differs"};
}

Outcome plateau_oc() {
  const auto s = plateau_scenario();
  const auto spec = UtilitySpec::canonical();
  const auto boin12 = DesignConfig::case_study();
  auto comparator = boin12;
  comparator.design = DesignVariant::kBoinToxicityOnly;
  constexpr int kReps = 1000;
  const auto a = operating_characteristics(s, boin12, StrategyMap::case_study(), spec, kReps, 42, 1);
  const auto b = operating_characteristics(s, comparator, StrategyMap::case_study(), spec, kReps, 42, 1);
  const auto band = [](const OperatingCharacteristics& oc) { return oc.selection_counts[4] + oc.selection_counts[5]; };
  const auto above = [](const OperatingCharacteristics& oc) {
    int c = 0;
    for (size_t j = 6; j < oc.selection_counts.size(); ++j) c += oc.selection_counts[j];
    return c;
  };
  const size_t mode = std::max_element(b.selection_counts.begin() + 1, b.selection_counts.end()) - b.selection_counts.begin();
  const double z_band = z_two_proportion(band(a), kReps, band(b), kReps);
  const double z_high = z_two_proportion(above(b), kReps, above(a), kReps);
  const bool ok = z_band > kZ01 && mode > 5 && z_high > kZ01;
  return {ok, fmt("{4,5}: BOIN12 %.1f%% vs comparator %.1f%% (z=%.1f); comparator mode dose %zu, "
                  "doses 6-8: %.1f%% vs %.1f%% (z=%.1f)",
                  100.0 * band(a) / kReps, 100.0 * band(b) / kReps, z_band, mode, 100.0 * above(b) / kReps,
                  100.0 * above(a) / kReps, z_high)};
}

Outcome tipping() {
  using namespace fixture;
  const auto config = DesignConfig::case_study();
  const auto spec = UtilitySpec::canonical();
  std::mt19937_64 gen(99);
  int fixtures = 0;
  int mismatches = 0;
  while (fixtures < 300) {
    const int doses = std::uniform_int_distribution<int>(2, 4)(gen);
    std::vector<PatientRecord> records;
    int id = 0;
    for (int j = 1; j <= doses; ++j) {
      const int n = std::uniform_int_distribution<int>(2, 6)(gen);
      for (int i = 0; i < n; ++i) {
        records.push_back(observed("p" + std::to_string(++id), j, std::bernoulli_distribution(0.5)(gen),
                                   std::bernoulli_distribution(0.2)(gen)));
      }
      for (int i = std::uniform_int_distribution<int>(0, 2)(gen); i > 0; --i) {
        records.push_back(missing("p" + std::to_string(++id), j));
      }
    }
    const auto scope = static_cast<TippingScope>(fixtures % 3);
    TippingOptions opt;
    opt.scope = scope;
    const auto report = tipping_scan(records, StrategyMap::case_study(), spec, config, doses, opt);
    if (report.flaggable > 10) continue;
    ++fixtures;
    if (report.tipping_point != oracle::tipping_point_by_subsets(records, config, doses, 1, scope)) ++mismatches;
  }
  return {mismatches == 0, fmt("%d fixtures with at most 10 flaggable, %d mismatches", fixtures, mismatches)};
}

Outcome event_sourcing() {
  std::random_device rd;
  const auto dir = std::filesystem::temp_directory_path() / ("obd_acceptance_" + std::to_string(rd()));
  const json create = {{"name", "scripted"}, {"grid", 8}, {"rng_seed", 5}};
  std::string id;
  std::vector<std::string> before;
  int cohorts = 0;
  const std::vector<std::string> paths = {"", "/recommendation", "/obd", "/audit"};
  {
    Service service({dir, "127.0.0.1", 0, 1});
    const int port = service.start_background();
    httplib::Client cli("127.0.0.1", port);
    id = json::parse(cli.Post("/v1/trials", create.dump(), "application/json")->body).at("trial_id");
    for (int c = 1; c <= 5; ++c) {
      const auto d = json::parse(cli.Get("/v1/trials/" + id + "/recommendation")->body).at("decision");
      if (d.at("kind") == "terminate") break;
      const json records = fixture::scripted_cohort(c, d.at("next_dose"), d.at("cohort_size"));
      if (cli.Post("/v1/trials/" + id + "/cohorts", records.dump(), "application/json")->status != 200) break;
      ++cohorts;
    }
    for (const auto& p : paths) before.push_back(cli.Get("/v1/trials/" + id + p)->body);
    service.stop();
  }
  Service restarted({dir, "127.0.0.1", 0, 1});
  const int port = restarted.start_background();
  httplib::Client cli("127.0.0.1", port);
  bool same = cohorts == 5;
  for (size_t i = 0; i < paths.size(); ++i) same = same && cli.Get("/v1/trials/" + id + paths[i])->body == before[i];
  restarted.stop();
  std::filesystem::remove_all(dir);
  return {same, fmt("%d cohorts; trial, recommendation, OBD and audit bodies %s after restart", cohorts,
                    same ? "byte-identical" : "differ")};
}

}  // namespace

int main() {
  criterion("boundary-anchor", 0, boundary_anchor);
  criterion("utility-anchor", 5, utility_anchor);
  criterion("qbb-identity", 1, qbb_identity);
  criterion("theorem1-equivalence", 0, theorem1);
  criterion("tail-probability-oracle", 0, tail_oracle);
  criterion("isotonic-oracle", 30, isotonic);
  criterion("estimand-semantics", 0, estimand_semantics);
  criterion("parallel-invariance", 60, parallel_invariance);
  criterion("plateau-oc", 0, plateau_oc);
  criterion("tipping-oracle", 0, tipping);
  criterion("event-sourcing-replay", 0, event_sourcing);
  std::printf("%d of 11 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
