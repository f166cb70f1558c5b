// SPDX-License-Identifier: Apache-2.0
#include "obd/posterior.hpp"

#include <algorithm>
#include <numeric>

#include "obd/error.hpp"
#include "obd/special_functions.hpp"

namespace obd {
namespace {

void check_dimensions(size_t got, const UtilitySpec& spec) {
  if (static_cast<int>(got) != spec.size()) {
    throw Error(ErrorKind::kDimensionMismatch,
                "expected " + std::to_string(spec.size()) + " categories, got " + std::to_string(got));
  }
}

// Beta(flagged, rest) marginal parameters of the mass on categories where
// `flag` is set.
std::pair<double, double> marginal(const DirichletPosterior& post, const UtilitySpec& spec,
                                   bool OutcomeCategory::*flag) {
  check_dimensions(post.alpha.size(), spec);
  double flagged = 0.0;
  double rest = 0.0;
  for (size_t k = 0; k < post.alpha.size(); ++k) {
    (spec.categories[k].*flag ? flagged : rest) += post.alpha[k];
  }
  return {flagged, rest};
}

// Beta CDF that tolerates a degenerate side (no categories carry the flag, or
// all of them do).
double beta_cdf(double x, double a, double b) {
  if (a <= 0.0) return 1.0;
  if (b <= 0.0) return x >= 1.0 ? 1.0 : 0.0;
  return regularized_incomplete_beta(x, a, b);
}

}  // namespace

double DirichletPosterior::total() const { return std::accumulate(alpha.begin(), alpha.end(), 0.0); }

DirichletPosterior dirichlet_posterior(const DoseState& state, std::span<const double> prior) {
  if (prior.size() != state.counts.size()) {
    throw Error(ErrorKind::kDimensionMismatch, "prior and counts differ in length");
  }
  DirichletPosterior post;
  post.alpha.reserve(prior.size());
  for (size_t k = 0; k < prior.size(); ++k) {
    if (!(prior[k] > 0.0)) throw Error(ErrorKind::kNonPositivePrior, "prior component " + std::to_string(k + 1));
    post.alpha.push_back(prior[k] + state.counts[k]);
  }
  return post;
}

double mean_utility(const DirichletPosterior& post, const UtilitySpec& spec) {
  check_dimensions(post.alpha.size(), spec);
  double weighted = 0.0;
  for (size_t k = 0; k < post.alpha.size(); ++k) weighted += spec.categories[k].psi * post.alpha[k];
  return weighted / post.total();
}

double marginal_utility(double mean_eff, double mean_tox, double w) { return mean_eff - w * mean_tox; }

UtilitySpec theorem1_psi(double w) {
  if (!(w >= 0.0)) throw Error(ErrorKind::kDomainError, "weight must be non-negative");
  return UtilitySpec::canonical(0.0, 100.0 * w / (1.0 + w), 100.0 / (1.0 + w), 100.0);
}

double prob_tox_exceeds(const DirichletPosterior& post, const UtilitySpec& spec, double phi_t) {
  if (!(phi_t >= 0.0 && phi_t <= 1.0)) throw Error(ErrorKind::kDomainError, "phi_t must lie in [0,1]");
  const auto [a, b] = marginal(post, spec, &OutcomeCategory::toxicity);
  return 1.0 - beta_cdf(phi_t, a, b);
}

double prob_eff_below(const DirichletPosterior& post, const UtilitySpec& spec, double phi_e) {
  if (!(phi_e >= 0.0 && phi_e <= 1.0)) throw Error(ErrorKind::kDomainError, "phi_e must lie in [0,1]");
  const auto [a, b] = marginal(post, spec, &OutcomeCategory::efficacy);
  return beta_cdf(phi_e, a, b);
}

QbbPosterior qbb_posterior(const DoseState& state, const UtilitySpec& spec, std::span<const double> prior) {
  check_dimensions(state.counts.size(), spec);
  check_dimensions(prior.size(), spec);
  const auto [lo, hi] = std::minmax_element(spec.categories.begin(), spec.categories.end(),
                                            [](const auto& a, const auto& b) { return a.psi < b.psi; });
  if (lo->psi != 0.0 || hi->psi != 100.0) {
    throw Error(ErrorKind::kUnanchoredUtility, "quasi-beta-binomial needs psi anchored at 0 and 100");
  }
  double x = 0.0;
  double alpha0 = 0.0;
  double prior_total = 0.0;
  for (size_t k = 0; k < prior.size(); ++k) {
    if (!(prior[k] > 0.0)) throw Error(ErrorKind::kNonPositivePrior, "prior component " + std::to_string(k + 1));
    const double weight = spec.categories[k].psi / 100.0;
    x += state.counts[k] * weight;
    alpha0 += prior[k] * weight;
    prior_total += prior[k];
  }
  const double n = state.n();
  return QbbPosterior{alpha0 + x, (prior_total - alpha0) + (n - x), x};
}

PosteriorSummary summarize(const DoseState& state, const UtilitySpec& spec, const DesignConfig& config,
                           std::span<const double> prior) {
  const auto post = dirichlet_posterior(state, prior);
  PosteriorSummary s;
  s.dose_index = state.dose_index;
  s.mean_utility = mean_utility(post, spec);
  const auto [at, bt] = marginal(post, spec, &OutcomeCategory::toxicity);
  const auto [ae, be] = marginal(post, spec, &OutcomeCategory::efficacy);
  s.mean_tox = at / (at + bt);
  s.mean_eff = ae / (ae + be);
  s.prob_toxic = prob_tox_exceeds(post, spec, config.phi_t);
  s.prob_futile = config.futility_rule == FutilityRule::kLowerTail ? prob_eff_below(post, spec, config.phi_e)
                                                                   : 1.0 - prob_eff_below(post, spec, config.phi_e);
  s.n = state.n();
  s.n_tox = toxicity_count(state, spec);
  s.n_eff = efficacy_count(state, spec);
  s.n_enrolled = state.n_enrolled;
  return s;
}

PosteriorSummary summarize(const DoseState& state, const UtilitySpec& spec, const DesignConfig& config) {
  return summarize(state, spec, config, config.prior_alpha);
}

std::vector<PosteriorSummary> summarize_all(std::span<const DoseState> states, const UtilitySpec& spec,
                                            const DesignConfig& config) {
  std::vector<PosteriorSummary> out;
  out.reserve(states.size());
  for (const auto& s : states) out.push_back(summarize(s, spec, config));
  return out;
}

PosteriorSummary haldane_sensitivity(const DoseState& state, const UtilitySpec& spec, const DesignConfig& config,
                                     double epsilon) {
  if (!(epsilon > 0.0)) throw Error(ErrorKind::kDomainError, "epsilon must be positive");
  if (state.n() == 0) {
    throw Error(ErrorKind::kEmptyDose, "dose " + std::to_string(state.dose_index) + " has no evaluable patients");
  }
  const std::vector<double> prior(state.counts.size(), epsilon);
  return summarize(state, spec, config, prior);
}

}  // namespace obd
