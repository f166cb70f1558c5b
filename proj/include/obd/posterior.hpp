// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <vector>

#include "obd/trial_core.hpp"

namespace obd {

/// Dirichlet(a_1 + n_j1, ..., a_K + n_jK) posterior of the category
/// probabilities at one dose.
struct DirichletPosterior {
  std::vector<double> alpha;

  double total() const;
};

struct PosteriorSummary {
  int dose_index = 1;
  double mean_utility = 0.0;
  double mean_tox = 0.0;
  double mean_eff = 0.0;
  double prob_toxic = 0.0;
  double prob_futile = 0.0;
  int n = 0;
  int n_tox = 0;
  int n_eff = 0;
  int n_enrolled = 0;
};

/// Beta posterior of the quasi-binomial utility model: each patient
/// contributes psi_k/100 pseudo-events.
struct QbbPosterior {
  double alpha = 0.0;
  double beta = 0.0;
  double pseudo_events = 0.0;

  double mean() const { return alpha / (alpha + beta); }
};

DirichletPosterior dirichlet_posterior(const DoseState& state, std::span<const double> prior);

/// Posterior mean of sum_k psi_k pi_jk. Linear in pi, so this is exact.
double mean_utility(const DirichletPosterior& post, const UtilitySpec& spec);

/// pi_e - w * pi_t.
double marginal_utility(double mean_eff, double mean_tox, double w);

/// Utility scores under which mean utility ranks doses exactly as the
/// marginal trade-off pi_e - w pi_t: (-w, 0, 1-w, 1) rescaled onto [0,100].
UtilitySpec theorem1_psi(double w);

/// Pr(pi_t > phi_t | D) from the Beta marginal of the toxicity-flagged mass.
double prob_tox_exceeds(const DirichletPosterior& post, const UtilitySpec& spec, double phi_t);

/// Pr(pi_e < phi_e | D) from the Beta marginal of the efficacy-flagged mass.
double prob_eff_below(const DirichletPosterior& post, const UtilitySpec& spec, double phi_e);

/// Throws kUnanchoredUtility unless min psi = 0 and max psi = 100.
QbbPosterior qbb_posterior(const DoseState& state, const UtilitySpec& spec, std::span<const double> prior);

PosteriorSummary summarize(const DoseState& state, const UtilitySpec& spec, const DesignConfig& config);
PosteriorSummary summarize(const DoseState& state, const UtilitySpec& spec, const DesignConfig& config,
                           std::span<const double> prior);
std::vector<PosteriorSummary> summarize_all(std::span<const DoseState> states, const UtilitySpec& spec,
                                            const DesignConfig& config);

/// Summary under the near-improper prior (epsilon, ..., epsilon).
/// Throws kEmptyDose when the dose has no evaluable patients.
PosteriorSummary haldane_sensitivity(const DoseState& state, const UtilitySpec& spec, const DesignConfig& config,
                                     double epsilon = 1e-6);

}  // namespace obd
