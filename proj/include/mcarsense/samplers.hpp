#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mcarsense/rng.hpp"

namespace mcarsense {

/// Gamma(shape, rate) draw, mean shape / rate.
///
/// Marsaglia-Tsang squeeze for shape >= 1; shapes below one are boosted
/// through the shape + 1 sampler times U^(1/shape).
double sample_gamma(double shape, double rate, RngStream& rng);

/// Beta(a, b) via two gamma draws.
double sample_beta(double a, double b, RngStream& rng);

/// Index i with probability weights[i] / sum(weights).
std::size_t sample_categorical(std::span<const double> weights, RngStream& rng);

/// Cumulative table for repeated categorical draws from fixed weights.
class CategoricalTable {
 public:
  explicit CategoricalTable(std::span<const double> weights);

  std::size_t sample(RngStream& rng) const;
  std::size_t size() const noexcept { return cumulative_.size(); }

 private:
  std::vector<double> cumulative_;
};

}  // namespace mcarsense
