#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mcarsense/measures.hpp"

namespace mcarsense {

/// q(y) = alpha * (log y - c). alpha = 0 is missing completely at random.
struct SensitivitySpec {
  double alpha = 0.0;
  double c = 0.0;
};

double q_eval(const SensitivitySpec& spec, double y);

/// Function g on outcomes: the identity (mean) or 1{y <= t} (distribution function).
class FunctionalSpec {
 public:
  enum class Kind { identity, indicator };

  FunctionalSpec() : FunctionalSpec(Kind::identity, 0.0) {}

  static FunctionalSpec identity() { return FunctionalSpec(Kind::identity, 0.0); }
  static FunctionalSpec indicator(double threshold) { return FunctionalSpec(Kind::indicator, threshold); }

  double operator()(double y) const { return kind_ == Kind::identity ? y : (y <= threshold_ ? 1.0 : 0.0); }
  Kind kind() const noexcept { return kind_; }
  double threshold() const noexcept { return threshold_; }
  std::string describe() const;

 private:
  FunctionalSpec(Kind kind, double threshold) : kind_(kind), threshold_(threshold) {}
  Kind kind_;
  double threshold_;
};

/// One record (x, r). Missing outcomes are stored as x = 0.
struct Record {
  double x = 0.0;
  int r = 1;
};

class ObservedDataset {
 public:
  ObservedDataset() = default;
  /// Validates r in {0, 1} and x > 0 when r = 1; x is reset to 0 when r = 0.
  explicit ObservedDataset(std::vector<Record> records);
  static ObservedDataset fully_observed(std::span<const double> outcomes);

  const std::vector<Record>& records() const noexcept { return records_; }
  std::size_t n() const noexcept { return records_.size(); }
  std::size_t num_observed() const noexcept { return observed_.size(); }
  std::size_t num_missing() const noexcept { return records_.size() - observed_.size(); }
  const std::vector<double>& observed_values() const noexcept { return observed_; }
  double observed_fraction() const;

 private:
  std::vector<Record> records_;
  std::vector<double> observed_;
};

/// chi(H, q) = H(g e^q) H{*} / H(e^q) + H g with g(*) = 0 and e^{q(*)} = 0.
/// Throws DegenerateMeasureError if H puts no weight on outcomes.
double chi_functional(const DiscreteMeasure& H, const FunctionalSpec& g, const SensitivitySpec& spec);

/// Same on raw arrays: outcome atoms (values, weights) plus the weight of *.
/// log_values may be empty; if given it must hold log(values[i]).
double chi_functional(std::span<const double> values, std::span<const double> weights,
                      double star_weight, const FunctionalSpec& g, const SensitivitySpec& spec,
                      std::span<const double> log_values = {});

/// kappa(p, P1, q) = (1 - p) P1(g e^q) / P1 e^q + p P1 g.
double kappa_functional(double p, const DiscreteMeasure& P1, const FunctionalSpec& g,
                        const SensitivitySpec& spec);

/// log P e^q over the outcome atoms of P, computed with max subtraction.
double log_mean_exp_q(const DiscreteMeasure& P, const SensitivitySpec& spec);

/// eta = log((1 - p) / p) - log P1 e^q.
double eta_from_p(double p, const DiscreteMeasure& P1, const SensitivitySpec& spec);

/// p = int 1 / (1 + e^{eta + q}) dP.
double p_from_eta(double eta, const DiscreteMeasure& P, const SensitivitySpec& spec);

/// dP0 proportional to e^q / (1 + e^{eta + q}) dP, same atom locations.
DiscreteMeasure p0_reweight(const DiscreteMeasure& P, double eta, const SensitivitySpec& spec);

struct P1Reweight {
  double p;
  DiscreteMeasure P1;
};

/// p = int 1 / (1 + e^{eta + q}) dP and dP1 = p^{-1} (1 + e^{eta + q})^{-1} dP.
P1Reweight p1_reweight(const DiscreteMeasure& P, double eta, const SensitivitySpec& spec);

/// Pr(R = 0 | Y = y) = e^{eta + q(y)} / (1 + e^{eta + q(y)}) on each grid point.
std::vector<double> propensity_curve(double eta, const SensitivitySpec& spec,
                                     std::span<const double> y_grid);

/// Efficient influence function at (p, P1, q), with eta and P0 derived from
/// them. Construct once and evaluate many times.
class EfficientInfluence {
 public:
  EfficientInfluence(double p, const DiscreteMeasure& P1, const FunctionalSpec& g,
                     const SensitivitySpec& spec);

  /// (r - p)(P0g - P1g) + r ((g(x) - P0g) e^{eta + q(x)} + g(x) - P1g).
  double operator()(Point x, int r) const;
  /// Variance of the influence function under (p, P1):
  /// p(1-p)(P0g - P1g)^2 + p P1 [((g - P0g) e^{eta+q} + g - P1g)^2].
  double variance() const noexcept { return variance_; }

  double p() const noexcept { return p_; }
  double eta() const noexcept { return eta_; }
  double p0g() const noexcept { return p0g_; }
  double p1g() const noexcept { return p1g_; }

 private:
  double p_;
  double eta_;
  double p0g_;
  double p1g_;
  double variance_;
  FunctionalSpec g_;
  SensitivitySpec spec_;
};

double efficiency_bound(double p, const DiscreteMeasure& P1, const FunctionalSpec& g,
                        const SensitivitySpec& spec);

double efficient_influence(Point x, int r, double p, const DiscreteMeasure& P1,
                           const FunctionalSpec& g, const SensitivitySpec& spec);

}  // namespace mcarsense
