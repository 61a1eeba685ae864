#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mcarsense/measures.hpp"
#include "mcarsense/quadrature.hpp"
#include "mcarsense/rng.hpp"
#include "mcarsense/sensitivity.hpp"

namespace mcarsense {

/// alpha is either fixed or Normal(mean, sd).
struct AlphaPrior {
  bool fixed = true;
  double value = 0.0;
  double mean = 0.0;
  double sd = 1.0;

  static AlphaPrior fixed_at(double v);
  static AlphaPrior normal(double mean, double sd);

  double sample(RngStream& rng) const;
  /// Log density up to a constant; 0 when fixed.
  double log_density(double a) const;
  /// Fixed value or prior mean (used as the chain's starting point).
  double center() const noexcept { return fixed ? value : mean; }
  void validate() const;
};

/// eta is either fixed or Uniform(lo, hi).
struct EtaPrior {
  bool fixed = true;
  double value = 0.0;
  double lo = -5.0;
  double hi = 2.0;

  static EtaPrior fixed_at(double v);
  static EtaPrior uniform(double lo, double hi);

  double sample(RngStream& rng) const;
  double log_density(double e) const;
  double center() const noexcept { return fixed ? value : 0.5 * (lo + hi); }
  void validate() const;
};

struct PriorSpec {
  AlphaPrior alpha;
  EtaPrior eta;
  void validate() const {
    alpha.validate();
    eta.validate();
  }
};

struct EngineConfig {
  int n_draws = 10000;
  int burn_in = 2000;
  int thinning = 1;
  double trunc_eps = 1e-10;
  double mh_target_accept = 0.234;
  int mh_adapt_window = 50;
  double mh_initial_scale = 0.25;
  /// Absolute truncation for the diffuse jump series; <= 0 selects 1e-8 * n.
  double jump_tol = 0.0;
  QuadratureSpec quad;
  /// Optional callback with the fraction of iterations done (called about 100 times per run).
  std::function<void(double)> progress;

  void validate() const;
};

struct PosteriorDraws {
  std::string engine;
  std::vector<double> functional;
  std::vector<double> alpha;
  /// Empty for the H engine.
  std::vector<double> eta;
  /// P1 g per draw (the observed-outcome mean for g = identity); empty for the H engine.
  std::vector<double> observed_functional;
  /// Metropolis-Hastings acceptance after burn-in; 1 when no MH step runs.
  double acceptance_rate = 1.0;
  /// Final random-walk scale after adaptation (0 when no MH step runs).
  double mh_scale = 0.0;
  /// Split-chain potential scale reduction of the functional draws (Gibbs only, NaN otherwise).
  double split_rhat = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;

  std::size_t size() const noexcept { return functional.size(); }
};

/// (H, alpha) scheme: H ~ DP(a + sum delta_{X_i}) and alpha from its prior,
/// functional chi(H, q_alpha). prior_base lives on the observation space and
/// must carry positive mass at the missingness symbol.
PosteriorDraws run_h_engine(const ObservedDataset& data, const BaseMeasure& prior_base,
                            const PriorSpec& priors, double c, const FunctionalSpec& g,
                            const EngineConfig& cfg, RngStream& rng);

/// (P, eta, alpha) Gibbs sampler with data augmentation of the missing outcomes.
/// Records int g dP per kept sweep.
PosteriorDraws run_peta_gibbs(const ObservedDataset& data, const BaseMeasure& prior_base,
                              const PriorSpec& priors, double c, const FunctionalSpec& g,
                              const EngineConfig& cfg, RngStream& rng);

/// Direct sampler for fixed (eta, alpha): P1 from the extended gamma posterior
/// with b = 1 + e^{eta + q}, p from the cut posterior Beta(N + 1, n - N + 1),
/// functional kappa(p, P1, q). prior_base must be atomless.
PosteriorDraws run_egp_engine(const ObservedDataset& data, double eta, const SensitivitySpec& spec,
                              const BaseMeasure& prior_base, const FunctionalSpec& g,
                              const EngineConfig& cfg, RngStream& rng);

/// Logistic log likelihood of missingness: sum r log(1 - pi) + (1 - r) log pi
/// with logit pi = eta + alpha (log y - c). Records use x as the full outcome.
double logistic_loglik(double eta, double alpha, std::span<const Record> full_data, double c);

/// scale * exp(kappa (accept_rate - target)) with kappa = 2 / window_index.
double mh_adapt_step(double current_scale, double recent_accept_rate, double target,
                     int window_index = 1);

/// Split-chain potential scale reduction factor (two halves of the chain).
double split_rhat(std::span<const double> chain);

}  // namespace mcarsense
