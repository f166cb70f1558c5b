// SPDX-License-Identifier: Apache-2.0
#include "obd/trial_core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <utility>

#include "obd/decision.hpp"
#include "obd/error.hpp"

namespace obd {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kValidation: return "ValidationError";
    case ErrorKind::kUnknownOutcomePair: return "UnknownOutcomePair";
    case ErrorKind::kDoseMismatch: return "DoseMismatch";
    case ErrorKind::kNonPositivePrior: return "NonPositivePrior";
    case ErrorKind::kDimensionMismatch: return "DimensionMismatch";
    case ErrorKind::kDomainError: return "DomainError";
    case ErrorKind::kUnanchoredUtility: return "UnanchoredUtility";
    case ErrorKind::kEmptyDose: return "EmptyDose";
    case ErrorKind::kUnmappedIce: return "UnmappedIce";
    case ErrorKind::kMissingStratumLabel: return "MissingStratumLabel";
    case ErrorKind::kNoTestedDoses: return "NoTestedDoses";
    case ErrorKind::kEmptyAdmissibleSet: return "EmptyAdmissibleSet";
    case ErrorKind::kInfeasibleAssociation: return "InfeasibleAssociation";
    case ErrorKind::kNotFound: return "NotFound";
    case ErrorKind::kConflict: return "Conflict";
  }
  return "Error";
}

UtilitySpec UtilitySpec::canonical(double psi1, double psi2, double psi3, double psi4) {
  return UtilitySpec{{{false, true, psi1}, {false, false, psi2}, {true, true, psi3}, {true, false, psi4}}};
}

DoseGrid DoseGrid::numbered(int levels) {
  DoseGrid grid;
  for (int j = 1; j <= levels; ++j) {
    grid.doses.push_back({j, "dose " + std::to_string(j), static_cast<double>(j), "unit"});
  }
  return grid;
}

int DoseState::n() const { return std::accumulate(counts.begin(), counts.end(), 0); }

DoseState DoseState::empty(int dose_index, int categories) {
  return DoseState{dose_index, std::vector<int>(static_cast<size_t>(categories), 0), 0};
}

DesignConfig DesignConfig::case_study() {
  DesignConfig config;
  const auto [lambda_e, lambda_d] = boin_boundaries(config.target_phi);
  config.lambda_e = lambda_e;
  config.lambda_d = lambda_d;
  config.accelerated_titration = AcceleratedTitration{2, 5};
  return config;
}

int classify_outcome(bool efficacy, bool toxicity, const UtilitySpec& spec) {
  for (int k = 1; k <= spec.size(); ++k) {
    const auto& c = spec.categories[static_cast<size_t>(k - 1)];
    if (c.efficacy == efficacy && c.toxicity == toxicity) return k;
  }
  throw Error(ErrorKind::kUnknownOutcomePair,
              "no category for (e=" + std::to_string(efficacy) + ", t=" + std::to_string(toxicity) + ")");
}

ValidationReport validate_utility_spec(const UtilitySpec& spec) {
  ValidationReport report;
  if (spec.size() < 2) {
    report.push_back("K must be at least 2");
    return report;
  }
  std::set<std::pair<bool, bool>> seen;
  double lo = spec.categories.front().psi;
  double hi = lo;
  for (const auto& c : spec.categories) {
    if (!std::isfinite(c.psi) || c.psi < 0.0 || c.psi > 100.0) report.push_back("psi must lie in [0,100]");
    if (!seen.insert({c.efficacy, c.toxicity}).second) report.push_back("duplicate (efficacy, toxicity) pair");
    lo = std::min(lo, c.psi);
    hi = std::max(hi, c.psi);
  }
  if (lo != 0.0) report.push_back("minimum psi must be 0");
  if (hi != 100.0) report.push_back("maximum psi must be 100");

  // Best (e=1,t=0) and worst (e=0,t=1) outcomes pin the anchors when present.
  for (const auto& c : spec.categories) {
    if (c.efficacy && !c.toxicity && c.psi != hi) report.push_back("psi for (e=1,t=0) must be the maximum");
    if (!c.efficacy && c.toxicity && c.psi != lo) report.push_back("psi for (e=0,t=1) must be the minimum");
  }
  return report;
}

UtilitySpec normalize_utility(const UtilitySpec& spec) {
  if (spec.categories.empty()) throw Error(ErrorKind::kValidation, "empty utility spec");
  auto [lo_it, hi_it] = std::minmax_element(spec.categories.begin(), spec.categories.end(),
                                            [](const auto& a, const auto& b) { return a.psi < b.psi; });
  const double lo = lo_it->psi;
  const double span = hi_it->psi - lo;
  if (!(span > 0.0)) throw Error(ErrorKind::kValidation, "cannot normalize constant utilities");
  UtilitySpec out = spec;
  for (auto& c : out.categories) c.psi = (c.psi - lo) / span * 100.0;
  // Pin the anchors exactly; the arithmetic above can leave 99.99999999999999.
  for (auto& c : out.categories) {
    if (std::abs(c.psi) < 1e-12) c.psi = 0.0;
    if (std::abs(c.psi - 100.0) < 1e-12) c.psi = 100.0;
  }
  return out;
}

ValidationReport validate_design_config(const DesignConfig& config, int categories) {
  ValidationReport report;
  if (static_cast<int>(config.prior_alpha.size()) != categories) {
    report.push_back("prior_alpha must have one entry per outcome category");
  }
  double total = 0.0;
  for (double a : config.prior_alpha) {
    if (!(a > 0.0)) report.push_back("prior_alpha entries must be positive");
    total += a;
  }
  if (!(total > 0.0)) report.push_back("sum of prior_alpha must be positive");
  auto unit = [&](double v, const char* name, bool open) {
    const bool ok = open ? (v > 0.0 && v < 1.0) : (v >= 0.0 && v <= 1.0);
    if (!ok) report.push_back(std::string(name) + (open ? " must lie in (0,1)" : " must lie in [0,1]"));
  };
  unit(config.phi_t, "phi_t", false);
  unit(config.phi_e, "phi_e", false);
  unit(config.delta_t, "delta_t", true);
  unit(config.delta_e, "delta_e", true);
  unit(config.lambda_e, "lambda_e", true);
  unit(config.lambda_d, "lambda_d", true);
  unit(config.target_phi, "target_phi", true);
  if (!(config.lambda_e < config.target_phi && config.target_phi < config.lambda_d)) {
    report.push_back("require lambda_e < target_phi < lambda_d");
  }
  if (config.phi_t < config.target_phi) report.push_back("phi_t must be at least target_phi");
  if (config.cohort_size < 1) report.push_back("cohort_size must be positive");
  if (!(config.cohort_size <= config.per_dose_cap && config.per_dose_cap <= config.max_n)) {
    report.push_back("require cohort_size <= per_dose_cap <= max_n");
  }
  if (config.start_dose < 1) report.push_back("start_dose must be at least 1");
  if (config.accelerated_titration) {
    if (config.accelerated_titration->trigger_grade < 1 || config.accelerated_titration->trigger_grade > 5) {
      report.push_back("accelerated_titration.trigger_grade must be 1..5");
    }
    if (config.accelerated_titration->trigger_dose_index < 1) {
      report.push_back("accelerated_titration.trigger_dose_index must be at least 1");
    }
  }
  return report;
}

ValidationReport validate_dose_grid(const DoseGrid& grid) {
  ValidationReport report;
  if (grid.doses.empty()) report.push_back("dose grid must contain at least one dose");
  for (size_t i = 0; i < grid.doses.size(); ++i) {
    const auto& d = grid.doses[i];
    if (d.index != static_cast<int>(i) + 1) report.push_back("dose indices must run 1..J in order");
    if (!(d.amount > 0.0)) report.push_back("dose amounts must be positive");
    if (i > 0 && !(d.amount > grid.doses[i - 1].amount)) report.push_back("dose amounts must strictly increase");
  }
  return report;
}

DoseState record_outcomes(const DoseState& state, std::span<const DerivedOutcome> outcomes) {
  DoseState next = state;
  for (const auto& o : outcomes) {
    if (o.dose_index != state.dose_index) {
      throw Error(ErrorKind::kDoseMismatch, "outcome for patient " + o.patient_id + " belongs to dose " +
                                                std::to_string(o.dose_index) + ", state is dose " +
                                                std::to_string(state.dose_index));
    }
    ++next.n_enrolled;
    if (o.evaluable && o.category) {
      const int k = *o.category;
      if (k < 1 || k > static_cast<int>(next.counts.size())) {
        throw Error(ErrorKind::kDimensionMismatch, "category " + std::to_string(k) + " out of range");
      }
      ++next.counts[static_cast<size_t>(k - 1)];
    }
  }
  return next;
}

namespace {
int flagged_count(const DoseState& state, const UtilitySpec& spec, bool OutcomeCategory::*flag) {
  if (static_cast<int>(state.counts.size()) != spec.size()) {
    throw Error(ErrorKind::kDimensionMismatch, "dose state and utility spec disagree on K");
  }
  int total = 0;
  for (int k = 0; k < spec.size(); ++k) {
    if (spec.categories[static_cast<size_t>(k)].*flag) total += state.counts[static_cast<size_t>(k)];
  }
  return total;
}
}  // namespace

int toxicity_count(const DoseState& state, const UtilitySpec& spec) {
  return flagged_count(state, spec, &OutcomeCategory::toxicity);
}

int efficacy_count(const DoseState& state, const UtilitySpec& spec) {
  return flagged_count(state, spec, &OutcomeCategory::efficacy);
}

}  // namespace obd
