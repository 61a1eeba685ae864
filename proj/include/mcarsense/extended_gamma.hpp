#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <vector>

#include "mcarsense/measures.hpp"
#include "mcarsense/quadrature.hpp"
#include "mcarsense/rng.hpp"

namespace mcarsense {

/// Normalised completely random measure with intensity s^-1 e^{-s b(x)} ds da(x).
///
/// `base` must be atomless and `b` must satisfy b(x) >= b_lower > 0 wherever
/// it is evaluated. With b = 1 + e^{eta + q} this is the prior that a
/// Dirichlet process prior on the full-data law induces on the law of the
/// observed outcomes.
struct EGPModel {
  std::function<double(double)> b;
  double b_lower = 1.0;
  BaseMeasure base;

  EGPModel(std::function<double(double)> b, double b_lower, BaseMeasure base);
};

/// psi(lambda) = int log(1 + lambda / b) da, the Laplace exponent of the
/// unnormalised measure.
double egp_psi(const EGPModel& model, double lambda, const QuadratureSpec& quad = {});

/// psi'(lambda) = int da / (lambda + b).
double egp_psi_derivative(const EGPModel& model, double lambda, const QuadratureSpec& quad = {});

/// Unnormalised log density of the posterior mixing variable:
/// (n - 1) log lambda - psi(lambda) - sum_j N_j log(lambda + b(x_j)).
double egp_mixing_logdensity(const EGPModel& model, const GroupedSample& grouped, double lambda,
                             const QuadratureSpec& quad = {});

/// Tabulated posterior of the mixing variable on a log-spaced grid.
///
/// The grid is centred on the mode of log Lambda and extends until the
/// density drops below 1e-12 of its peak on both sides. Draws are exact
/// inverse-CDF draws from the piecewise-linear interpolant of the density of
/// log Lambda.
class MixingPosterior {
 public:
  MixingPosterior(const EGPModel& model, const GroupedSample& grouped,
                  const QuadratureSpec& quad = {}, int grid_size = 2001);

  double sample(RngStream& rng) const;
  double mean() const;
  /// Posterior probability that Lambda < x.
  double probability_below(double x) const;
  double mode() const noexcept { return std::exp(mode_log_); }
  const std::vector<double>& log_grid() const noexcept { return log_grid_; }
  /// Density of log Lambda on the grid, scaled to peak 1.
  const std::vector<double>& grid_density() const noexcept { return density_; }
  /// b evaluated at the distinct observations, in GroupedSample order.
  const std::vector<double>& b_values() const noexcept { return b_values_; }
  double mean_log() const;

 private:
  std::vector<double> log_grid_;
  std::vector<double> density_;
  std::vector<double> cumulative_;
  std::vector<double> b_values_;
  double mode_log_ = 0.0;
};

double egp_sample_lambda(const EGPModel& model, const GroupedSample& grouped, RngStream& rng,
                         const QuadratureSpec& quad = {});

/// Jumps of the diffuse part given the mixing variable, i.e. the Poisson
/// process with intensity s^-1 e^{-s (lambda + b(x))} ds da(x).
struct JumpSeries {
  std::vector<WeightedPoint> jumps;
  /// Bound on the expected mass of all jumps not generated.
  double tail_bound = 0.0;
};

inline constexpr int kMaxSeriesJumps = 1'000'000;

/// Ferguson-Klass series for the dominating rate lambda + b_lower, thinned
/// with probability e^{-J (b(x) - b_lower)}; stops when the expected mass
/// left below the current jump is under jump_tol.
JumpSeries sample_diffuse_jumps(const EGPModel& model, double lambda, double jump_tol,
                                RngStream& rng, int max_jumps = kMaxSeriesJumps);

/// One draw from the posterior of the normalised measure.
DiscreteMeasure egp_sample_posterior(const EGPModel& model, const GroupedSample& grouped,
                                     double jump_tol, RngStream& rng,
                                     const QuadratureSpec& quad = {});

/// Same, reusing a tabulated mixing posterior (the expensive part).
DiscreteMeasure egp_sample_posterior(const EGPModel& model, const GroupedSample& grouped,
                                     const MixingPosterior& mixing, double jump_tol,
                                     RngStream& rng);

inline double default_jump_tol(std::size_t n) { return 1e-8 * static_cast<double>(n); }

/// Exact posterior mean of the normalised measure, from the prediction
/// probability function.
struct EGPPosteriorMean {
  /// Atoms at the distinct observations with weights p_j (sum < 1).
  DiscreteMeasure atoms;
  /// Total diffuse mass, int p_new(x) a(dx).
  double diffuse_mass = 0.0;
  /// Density of the diffuse part with respect to the normalised base.
  std::function<double(double)> diffuse_density;
  /// Per-observation weights p_j / N_j (each <= 1/n).
  std::vector<double> per_observation;
};

EGPPosteriorMean egp_posterior_mean(const EGPModel& model, const GroupedSample& grouped,
                                    const QuadratureSpec& quad = {});

}  // namespace mcarsense
