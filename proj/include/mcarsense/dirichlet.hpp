#pragma once

#include <span>

#include "mcarsense/measures.hpp"
#include "mcarsense/rng.hpp"

namespace mcarsense {

inline constexpr double kDefaultStickTruncation = 1e-10;

/// Conjugate update: prior + sum of unit atoms at the data points.
BaseMeasure dp_posterior_base(const BaseMeasure& prior, std::span<const Point> data);
BaseMeasure dp_posterior_base(const BaseMeasure& prior, std::span<const double> outcomes);

/// One draw from DP(base).
///
/// Atoms of the base get independent Gamma(mass, 1) weights and the continuous
/// part gets Gamma(continuous mass, 1), which is then spread by stick breaking
/// with Beta(1, continuous mass) sticks and locations from the normalised
/// continuous distribution. Breaking stops once the unbroken remainder falls
/// below trunc_eps; the remainder goes to one last atom. For a purely
/// continuous base the atoms come out in stick order.
DiscreteMeasure dp_draw(const BaseMeasure& base, double trunc_eps, RngStream& rng);

/// Stick-breaking draw of DP(mass * distribution), appended to out with every
/// weight multiplied by scale. Returns the number of atoms appended.
std::size_t append_stick_breaking(const ContinuousDistribution& distribution, double mass,
                                  double scale, double trunc_eps, RngStream& rng,
                                  std::vector<WeightedPoint>& out);

}  // namespace mcarsense
