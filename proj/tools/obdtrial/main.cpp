// SPDX-License-Identifier: Apache-2.0
// obdtrial: command-line front end for the dose-optimization engine.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "obd/csv_io.hpp"
#include "obd/json_io.hpp"
#include "obd/sensitivity.hpp"
#include "obd/service.hpp"
#include "obd/simulator.hpp"
#include "obd/trial_state.hpp"

using namespace obd;

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(out_path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + out_path);
  out << text;
}

void emit_json(const json& j, const std::string& out_path) { emit(j.dump(2) + "\n", out_path); }

template <typename T>
T load(const std::string& path, T fallback) {
  return path.empty() ? fallback : parse_document<T>(read_json_file(path));
}

TrialState load_state(const std::string& path) { return parse_document<TrialState>(read_json_file(path)); }

int max_dose_in(const std::vector<PatientRecord>& records) {
  int m = 1;
  for (const auto& r : records) m = std::max(m, r.dose_index);
  return m;
}

const char* kSchemaHelp = R"(JSON schemas (all documents may carry "version": "v1"):
  design config   {prior_alpha[K], phi_t, phi_e, delta_t, delta_e, lambda_e?, lambda_d?, target_phi,
                   cohort_size, max_n, per_dose_cap, start_dose,
                   assignment_mode: deterministic|adaptive_randomization|equal_randomization,
                   futility_rule: lower_tail|upper_tail, design: boin12|boin_toxicity_only,
                   accelerated_titration: null | {trigger_grade, trigger_dose_index}}
                  missing lambdas are derived from target_phi; missing fields take the reference defaults
  utility         {categories: [{efficacy, toxicity, psi}]} or [psi1, psi2, psi3, psi4] in the order
                  (e0,t1), (e0,t0), (e1,t1), (e1,t0)
  grid            {doses: [{index, label, amount, unit}]} or {levels: J}
  strategy map    {name, entries: {ice_key: strategy | {strategy, favorable}}, efficacy_success_set,
                   dlt_window_days, analysis_stratum?, dose_switch_attribution: starting_dose|last_dose}
                  strategies: treatment_policy, composite, hypothetical, while_on_treatment, principal_stratum
  patient record  {patient_id, dose_index, first_dose_day, baseline_ok, stratum_label?, events: [
                   {day, kind: assessment, response: CR|PR|SD|PD|NE},
                   {day, kind: toxicity, grade, dlt},
                   {day, kind: ice, ice_type, reason?, new_dose_index?}]}
  trial state     {config, utility, grid, strategy_map, current_dose, records | dose_states,
                   titration_triggered, rng_seed, decisions_issued}
  scenario        {name, true_tox[J], true_eff[J], eff_tox_odds_ratio, ice_probabilities: {ice_key: p | [p_j]},
                   stratum_fraction, grade2_ae_probability, post_ice_response_probability,
                   evaluation_day, dlt_window_days}
)";

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Utility-based Phase I/II dose optimization with intercurrent-event handling"};
  app.footer(kSchemaHelp);
  app.require_subcommand(1);
  std::string out_path;
  app.add_option("--out", out_path, "Write output to this file instead of stdout");

  // boundaries
  auto* boundaries = app.add_subcommand("boundaries", "BOIN escalation and de-escalation boundaries");
  double phi = 0.3;
  std::optional<double> phi1;
  std::optional<double> phi2;
  bool boundaries_json = false;
  boundaries->add_option("--phi", phi, "Target DLT rate")->capture_default_str();
  boundaries->add_option("--phi1", phi1, "Highest sub-therapeutic rate (default 0.6 phi)");
  boundaries->add_option("--phi2", phi2, "Lowest overly toxic rate (default 1.4 phi)");
  boundaries->add_flag("--json", boundaries_json, "Print JSON instead of text");

  // table
  auto* table = app.add_subcommand("table", "Tabulate decisions for every count vector up to --max-n");
  std::string config_path;
  std::string utility_path;
  int max_n = 12;
  std::string format = "json";
  table->add_option("--config", config_path, "Design config JSON");
  table->add_option("--utility", utility_path, "Utility spec JSON");
  table->add_option("--max-n", max_n, "Largest per-dose sample size")->capture_default_str();
  table->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));

  // decide / obd / tipping / prior share --state
  std::string state_path;
  auto* decide = app.add_subcommand("decide", "Next-cohort decision with per-dose posterior summaries");
  decide->add_option("--state", state_path, "Trial state JSON")->required();
  auto* obd_cmd = app.add_subcommand("obd", "Optimal biological dose, isotonic MTD and rationale");
  obd_cmd->add_option("--state", state_path, "Trial state JSON")->required();
  auto* tipping = app.add_subcommand("tipping", "Tipping-point scan over flaggable outcomes");
  tipping->add_option("--state", state_path, "Trial state JSON")->required();
  bool exhaustive = false;
  int flip_to = 1;
  std::string scope = "favorable_at_obd";
  tipping->add_flag("--exhaustive", exhaustive, "Brute-force every subset (at most 20 patients)");
  tipping->add_option("--flip-to", flip_to, "Target category")->capture_default_str();
  tipping->add_option("--scope", scope, "missing, favorable_at_obd or all_observed")->capture_default_str();
  auto* prior = app.add_subcommand("prior", "Design prior against a Haldane prior");
  prior->add_option("--state", state_path, "Trial state JSON")->required();
  double epsilon = 1e-6;
  prior->add_option("--epsilon", epsilon, "Haldane prior mass per category")->capture_default_str();

  // derive
  auto* derive = app.add_subcommand("derive", "Apply a strategy map to patient records");
  std::string records_path;
  std::string map_path;
  derive->add_option("--records", records_path, "Patient records (JSON lines or array)")->required();
  derive->add_option("--map", map_path, "Strategy map JSON (default: reference map)");
  derive->add_option("--utility", utility_path, "Utility spec JSON");

  // whatif
  auto* whatif = app.add_subcommand("whatif", "Compare OBD selection across strategy maps");
  std::vector<std::string> map_paths;
  int doses = 0;
  whatif->add_option("--records", records_path, "Patient records (JSON lines or array)")->required();
  whatif->add_option("--maps", map_paths, "Strategy map JSON files")->required();
  whatif->add_option("--config", config_path, "Design config JSON");
  whatif->add_option("--utility", utility_path, "Utility spec JSON");
  whatif->add_option("--doses", doses, "Number of dose levels (default: highest dose in the records)");

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Operating characteristics by simulation");
  std::string scenario_path;
  int reps = 1000;
  std::uint64_t seed = 42;
  int jobs = 1;
  simulate->add_option("--scenario", scenario_path, "Scenario JSON")->required();
  simulate->add_option("--config", config_path, "Design config JSON");
  simulate->add_option("--utility", utility_path, "Utility spec JSON");
  simulate->add_option("--map", map_path, "Strategy map JSON");
  simulate->add_option("--reps", reps, "Replications")->capture_default_str();
  simulate->add_option("--seed", seed, "Master seed")->capture_default_str();
  simulate->add_option("--jobs", jobs, "Worker threads")->capture_default_str();
  simulate->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));

  // serve
  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  ServiceOptions service_options = options_from_environment();
  serve->add_option("--port", service_options.port, "Listen port")->capture_default_str();
  serve->add_option("--host", service_options.host, "Listen address")->capture_default_str();
  std::string data_dir;
  serve->add_option("--data-dir", data_dir, "Directory for event logs and simulation results");
  serve->add_option("--max-parallelism", service_options.max_parallelism, "Simulation threads per job")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    if (*boundaries) {
      const auto b = boin_boundaries(phi, phi1, phi2);
      if (boundaries_json) {
        emit_json(document(b), out_path);
      } else {
        char buf[64];
        std::snprintf(buf, sizeof buf, "lambda_e=%.4f lambda_d=%.4f\n", b.lambda_e, b.lambda_d);
        emit(buf, out_path);
      }
    } else if (*table) {
      const auto spec = load(utility_path, UtilitySpec::canonical());
      const auto config = load(config_path, DesignConfig::case_study());
      const auto t = decision_table(config, spec, max_n);
      if (format == "csv") {
        emit(decision_table_csv(t), out_path);
      } else {
        emit_json(document(t), out_path);
      }
    } else if (*decide) {
      emit_json(document(recommend(load_state(state_path))), out_path);
    } else if (*obd_cmd) {
      emit_json(document(recommend(load_state(state_path)).selection), out_path);
    } else if (*tipping) {
      const auto s = load_state(state_path);
      TippingOptions opt;
      opt.flip_to = flip_to;
      opt.scope = parse_tipping_scope(scope);
      const auto report = exhaustive ? tipping_scan_exhaustive(s.records, s.map, s.spec, s.config, s.grid.size(), opt)
                                     : tipping_scan(s.records, s.map, s.spec, s.config, s.grid.size(), opt);
      emit_json(document(report), out_path);
    } else if (*prior) {
      const auto s = load_state(state_path);
      const auto r = recommend(s);
      emit_json(document(prior_sensitivity(r.states, s.spec, s.config, epsilon)), out_path);
    } else if (*derive) {
      const auto records = read_records_file(records_path);
      const auto map = load(map_path, StrategyMap::case_study());
      const auto spec = load(utility_path, UtilitySpec::canonical());
      const auto set = build_analysis_set(records, map, spec);
      emit_json({{"version", kSchemaVersion}, {"outcomes", set.outcomes}, {"excluded", set.excluded}}, out_path);
    } else if (*whatif) {
      const auto records = read_records_file(records_path);
      std::vector<StrategyMap> maps;
      for (const auto& p : map_paths) maps.push_back(parse_document<StrategyMap>(read_json_file(p)));
      const auto spec = load(utility_path, UtilitySpec::canonical());
      const auto config = load(config_path, DesignConfig::case_study());
      const int j = doses > 0 ? doses : max_dose_in(records);
      emit_json(document(compare_strategies(records, maps, spec, config, j)), out_path);
    } else if (*simulate) {
      const auto scenario = parse_document<Scenario>(read_json_file(scenario_path));
      const auto config = load(config_path, DesignConfig::case_study());
      const auto spec = load(utility_path, UtilitySpec::canonical());
      const auto map = load(map_path, StrategyMap::case_study());
      const auto oc = operating_characteristics(scenario, config, map, spec, reps, seed, jobs);
      if (format == "csv") {
        emit(operating_characteristics_csv(oc), out_path);
      } else {
        emit_json(document(oc), out_path);
      }
    } else if (*serve) {
      if (!data_dir.empty()) service_options.data_dir = data_dir;
      Service service(service_options);
      std::cerr << "listening on " << service_options.host << ':' << service_options.port << '\n';
      if (!service.listen()) {
        std::cerr << "error: cannot bind " << service_options.host << ':' << service_options.port << '\n';
        return kExitRuntime;
      }
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.kind() == ErrorKind::kNotFound ? kExitRuntime : kExitValidation;
  } catch (const json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}
