#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "mcarsense/quadrature.hpp"
#include "mcarsense/rng.hpp"

namespace mcarsense {

/// A point of the observation space: an outcome value or the missingness symbol.
struct Point {
  double value = 0.0;
  bool missing = false;

  static Point outcome(double y) { return {y, false}; }
  static Point star() { return {0.0, true}; }

  friend bool operator==(const Point&, const Point&) = default;
};

/// Probability distribution on the outcome space (0, inf) with a density.
class ContinuousDistribution {
 public:
  virtual ~ContinuousDistribution() = default;

  virtual double density(double x) const = 0;
  virtual double cdf(double x) const = 0;
  virtual double sample(RngStream& rng) const = 0;
  virtual double mean() const = 0;
  /// Closed support [lower, upper]; upper may be +inf.
  virtual double support_lower() const { return 0.0; }
  virtual double support_upper() const;
  virtual std::string describe() const = 0;
};

class GammaDistribution final : public ContinuousDistribution {
 public:
  GammaDistribution(double shape, double rate);

  double density(double x) const override;
  double cdf(double x) const override;
  double sample(RngStream& rng) const override;
  double mean() const override { return shape_ / rate_; }
  std::string describe() const override;

  double shape() const noexcept { return shape_; }
  double rate() const noexcept { return rate_; }

 private:
  double shape_;
  double rate_;
  double log_norm_;
};

class UniformDistribution final : public ContinuousDistribution {
 public:
  UniformDistribution(double lower, double upper);

  double density(double x) const override;
  double cdf(double x) const override;
  double sample(RngStream& rng) const override;
  double mean() const override { return 0.5 * (lower_ + upper_); }
  double support_lower() const override { return lower_; }
  double support_upper() const override { return upper_; }
  std::string describe() const override;

 private:
  double lower_;
  double upper_;
};

/// Finite mixture of continuous distributions with nonnegative weights summing to one.
class MixtureDistribution final : public ContinuousDistribution {
 public:
  struct Component {
    double weight;
    std::shared_ptr<const ContinuousDistribution> distribution;
  };

  explicit MixtureDistribution(std::vector<Component> components);

  double density(double x) const override;
  double cdf(double x) const override;
  double sample(RngStream& rng) const override;
  double mean() const override;
  double support_lower() const override;
  double support_upper() const override;
  std::string describe() const override;

  const std::vector<Component>& components() const noexcept { return components_; }

 private:
  std::vector<Component> components_;
};

struct WeightedPoint {
  Point location;
  double weight = 0.0;
};

/// Finite Borel measure: a scaled continuous distribution plus optional atoms.
///
/// total_mass() is the continuous mass plus the atom masses. Immutable after
/// construction; copies share the continuous distribution.
class BaseMeasure {
 public:
  BaseMeasure() = default;
  BaseMeasure(double continuous_mass, std::shared_ptr<const ContinuousDistribution> continuous,
              std::vector<WeightedPoint> atoms = {});

  /// Adds an atom; an atom already present at the same point accumulates mass.
  BaseMeasure with_atom(Point location, double mass) const;

  double total_mass() const noexcept;
  double continuous_mass() const noexcept { return continuous_mass_; }
  const ContinuousDistribution* continuous() const noexcept { return continuous_.get(); }
  std::shared_ptr<const ContinuousDistribution> continuous_ptr() const { return continuous_; }
  const std::vector<WeightedPoint>& atoms() const noexcept { return atoms_; }
  bool has_atoms() const noexcept { return !atoms_.empty(); }

  /// Mass of the continuous part's density integrated against f over the outcome space.
  QuadratureResult integrate_continuous(const std::function<double(double)>& f,
                                        const QuadratureSpec& spec = {}) const;

  /// a((0, t]) over outcomes: continuous CDF times mass plus atoms at values <= t.
  double mass_up_to(double t) const;
  double mass_at(Point location) const;

 private:
  double continuous_mass_ = 0.0;
  std::shared_ptr<const ContinuousDistribution> continuous_;
  std::vector<WeightedPoint> atoms_;
};

enum class Space { outcomes, observations };

/// Weighted atom list. Measures on the outcome space carry no missingness atoms.
class DiscreteMeasure {
 public:
  DiscreteMeasure() = default;
  DiscreteMeasure(std::vector<WeightedPoint> atoms, Space space, bool normalized);

  /// Rescales weights to sum to one.
  static DiscreteMeasure normalize(std::vector<WeightedPoint> atoms, Space space);
  /// Equal-weight empirical measure of the given outcomes.
  static DiscreteMeasure empirical(std::span<const double> outcomes);

  const std::vector<WeightedPoint>& atoms() const noexcept { return atoms_; }
  std::size_t size() const noexcept { return atoms_.size(); }
  Space space() const noexcept { return space_; }
  bool normalized() const noexcept { return normalized_; }

  double total_weight() const;
  double missing_weight() const;
  /// Sum of g(y) * weight over outcome atoms; missingness atoms contribute 0.
  double integrate(const std::function<double(double)>& g) const;
  /// Weight of outcome atoms with value <= t.
  double weight_up_to(double t) const;

 private:
  std::vector<WeightedPoint> atoms_;
  Space space_ = Space::outcomes;
  bool normalized_ = false;
};

/// Distinct values of a sample with their multiplicities (exact equality defines ties).
class GroupedSample {
 public:
  GroupedSample() = default;
  explicit GroupedSample(std::span<const double> values);

  const std::vector<double>& distinct() const noexcept { return distinct_; }
  const std::vector<int>& multiplicities() const noexcept { return counts_; }
  std::size_t num_distinct() const noexcept { return distinct_.size(); }
  std::size_t n() const noexcept { return n_; }

 private:
  std::vector<double> distinct_;
  std::vector<int> counts_;
  std::size_t n_ = 0;
};

}  // namespace mcarsense
