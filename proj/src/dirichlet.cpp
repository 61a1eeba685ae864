#include "mcarsense/dirichlet.hpp"

#include <algorithm>
#include <cmath>

#include "mcarsense/errors.hpp"
#include "mcarsense/samplers.hpp"

namespace mcarsense {

BaseMeasure dp_posterior_base(const BaseMeasure& prior, std::span<const Point> data) {
  if (data.empty()) return prior;
  auto atoms = prior.atoms();
  atoms.reserve(atoms.size() + data.size());
  for (const Point& p : data) atoms.push_back({p, 1.0});
  return BaseMeasure(prior.continuous_mass(), prior.continuous_ptr(), std::move(atoms));
}

BaseMeasure dp_posterior_base(const BaseMeasure& prior, std::span<const double> outcomes) {
  std::vector<Point> points;
  points.reserve(outcomes.size());
  for (double y : outcomes) points.push_back(Point::outcome(y));
  return dp_posterior_base(prior, std::span<const Point>(points));
}

std::size_t append_stick_breaking(const ContinuousDistribution& distribution, double mass,
                                  double scale, double trunc_eps, RngStream& rng,
                                  std::vector<WeightedPoint>& out) {
  std::size_t appended = 0;
  double remaining = 1.0;
  while (remaining >= trunc_eps) {
    const double v = sample_beta(1.0, mass, rng);
    out.push_back({Point::outcome(distribution.sample(rng)), scale * remaining * v});
    remaining *= 1.0 - v;
    ++appended;
  }
  out.push_back({Point::outcome(distribution.sample(rng)), scale * remaining});
  return appended + 1;
}

DiscreteMeasure dp_draw(const BaseMeasure& base, double trunc_eps, RngStream& rng) {
  if (!(base.total_mass() > 0.0)) throw ParameterError("dp_draw: base measure has zero mass");
  if (!(trunc_eps > 0.0 && trunc_eps < 1.0)) throw ParameterError("dp_draw: trunc_eps must be in (0, 1)");

  std::vector<WeightedPoint> atoms;
  atoms.reserve(base.atoms().size() + 32);
  for (const auto& a : base.atoms()) {
    if (a.weight > 0.0) atoms.push_back({a.location, sample_gamma(a.weight, 1.0, rng)});
  }
  if (base.continuous_mass() > 0.0) {
    const double scale = atoms.empty() ? 1.0 : sample_gamma(base.continuous_mass(), 1.0, rng);
    append_stick_breaking(*base.continuous(), base.continuous_mass(), scale, trunc_eps, rng, atoms);
  }
  const bool has_missing = std::any_of(atoms.begin(), atoms.end(),
                                       [](const WeightedPoint& w) { return w.location.missing; });
  return DiscreteMeasure::normalize(std::move(atoms),
                                    has_missing ? Space::observations : Space::outcomes);
}

}  // namespace mcarsense
