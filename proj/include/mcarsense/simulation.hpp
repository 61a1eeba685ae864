#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mcarsense/engines.hpp"
#include "mcarsense/measures.hpp"
#include "mcarsense/quadrature.hpp"
#include "mcarsense/rng.hpp"
#include "mcarsense/sensitivity.hpp"

namespace mcarsense {

enum class CMode { zero, observed_mean_log, oracle_mean_log, explicit_value };

std::string to_string(CMode mode);
CMode parse_c_mode(const std::string& text);

/// Ground truth: P1 = Gamma(r, s), P0 = Gamma(r + alpha0, s), Pr(R = 1) = p0.
struct ScenarioSpec {
  double r = 2.0;
  double s = 1.0;
  double p0 = 0.6;
  double alpha0 = 2.0;
  CMode c_mode = CMode::observed_mean_log;
  double c_value = 0.0;

  void validate() const;
};

double compute_c(const ScenarioSpec& scn);

/// E g(Y) under the full-data truth; closed form for the identity and for indicators.
double true_functional(const ScenarioSpec& scn, const FunctionalSpec& g = FunctionalSpec::identity());

/// log((1 - p0) / p0) + alpha0 (log s + c) - (log Gamma(r + alpha0) - log Gamma(r)).
double true_eta(const ScenarioSpec& scn, double c);

ObservedDataset generate_dataset(const ScenarioSpec& scn, std::size_t n, RngStream& rng);

/// Prior base on the observation space: (1 - p0) at * plus p0 Gamma(r, s), scaled to `precision`.
BaseMeasure h_prior_base(const ScenarioSpec& scn, double precision = 1.0);
/// Prior base on outcomes: p0 Gamma(r, s) + (1 - p0) Gamma(r + alpha0, s), scaled to `precision`.
BaseMeasure p_prior_base(const ScenarioSpec& scn, double precision = 1.0);

/// Equal-weight atoms at the midpoint quantiles (i + 1/2) / k of Gamma(shape, rate).
DiscreteMeasure gamma_quantile_atoms(double shape, double rate, std::size_t k);

/// Efficiency bound at the scenario truth, by quadrature against the Gamma laws.
double efficiency_bound_truth(const ScenarioSpec& scn, double c, const FunctionalSpec& g = FunctionalSpec::identity(),
                              const QuadratureSpec& quad = {});

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
  double length() const noexcept { return upper - lower; }
  bool contains(double x) const noexcept { return lower <= x && x <= upper; }
};

/// Empirical quantile with linear interpolation between order statistics:
/// h = (m - 1) prob, value = x_(floor h) + (h - floor h)(x_(floor h + 1) - x_(floor h)),
/// zero-based on the sorted draws.
double empirical_quantile(std::span<const double> draws, double prob);

/// Equal-tailed credible interval from the (1 - level)/2 and (1 + level)/2 quantiles.
/// Needs at least 100 draws.
Interval credible_interval(std::span<const double> draws, double level = 0.90);

enum class EngineKind { h, peta, egp };

std::string to_string(EngineKind engine);
EngineKind parse_engine(const std::string& text);

/// Everything needed to fit one dataset.
struct FitSetup {
  ScenarioSpec scenario;
  EngineKind engine = EngineKind::h;
  PriorSpec priors;
  EngineConfig config;
  FunctionalSpec g;
  double prior_precision = 1.0;
};

/// Runs the selected engine with the scenario's prior bases and c. The EGP
/// engine needs fixed eta and alpha.
PosteriorDraws fit_dataset(const FitSetup& setup, const ObservedDataset& data, RngStream& rng);

struct CoverageCell {
  std::string engine;
  std::size_t n = 0;
  int reps = 0;
  int covered = 0;
  int failures = 0;
  double coverage = 0.0;
  double mean_length = 0.0;
  std::uint64_t seed = 0;
  std::string first_failure;
};

struct CoverageReport {
  std::vector<CoverageCell> cells;
};

struct CoverageOptions {
  std::vector<std::size_t> ns;
  int reps = 300;
  std::uint64_t base_seed = 1;
  double level = 0.90;
  /// Worker threads; 0 picks the hardware concurrency.
  int threads = 0;
  /// Called with the fraction of finished replications.
  std::function<void(double)> progress;
};

/// Replication k at sample size n draws its data from stream (base_seed, k),
/// substream n, so every engine sees the same datasets.
CoverageReport run_coverage(const FitSetup& setup, const CoverageOptions& options);

/// Data stream used for replication `rep` at sample size n.
RngStream replication_data_stream(std::uint64_t base_seed, int rep, std::size_t n);
/// Engine stream used for replication `rep` at sample size n.
RngStream replication_engine_stream(std::uint64_t base_seed, int rep, std::size_t n);

struct BvMReport {
  std::size_t n = 0;
  double scaled_variance = 0.0;
  double efficiency_bound = 0.0;
  double ratio = 0.0;
  /// Anderson-Darling A^2 of the standardised draws against N(0, 1).
  double anderson_darling = 0.0;
};

BvMReport bvm_diagnostic(const PosteriorDraws& draws, const ObservedDataset& data,
                         const ScenarioSpec& scn, const FunctionalSpec& g = FunctionalSpec::identity());

double anderson_darling_normal(std::span<const double> draws);

struct PosteriorMeanCheck {
  /// sup over events A of |posterior mean(A) - empirical(A)|.
  double sup_distance = 0.0;
  /// Largest |p_j - N_j / n| over the data atoms.
  double max_atom_gap = 0.0;
  double diffuse_mass = 0.0;
  double bound = 0.0;
  bool pass = false;
};

PosteriorMeanCheck posterior_mean_check(const ObservedDataset& data, double eta,
                                        const SensitivitySpec& spec, const BaseMeasure& base,
                                        const QuadratureSpec& quad = {});

enum class ReportFormat { csv, json };

void export_report(const CoverageReport& report, const std::string& path, ReportFormat format);
CoverageReport read_report_csv(const std::string& path);

}  // namespace mcarsense
