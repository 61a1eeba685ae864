#include "mcarsense/samplers.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mcarsense/errors.hpp"

namespace mcarsense {

namespace {

// Marsaglia & Tsang (2000), unit rate, shape >= 1.
double gamma_unit_large_shape(double shape, RngStream& rng) {
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x = 0.0;
    double v = 0.0;
    do {
      x = rng.normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.uniform();
    const double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
    if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
  }
}

}  // namespace

double sample_gamma(double shape, double rate, RngStream& rng) {
  if (!(shape > 0.0) || !(rate > 0.0) || !std::isfinite(shape) || !std::isfinite(rate)) {
    throw ParameterError("sample_gamma: shape and rate must be positive and finite (shape=" +
                         std::to_string(shape) + ", rate=" + std::to_string(rate) + ")");
  }
  if (shape == 1.0) return rng.exponential() / rate;
  if (shape < 1.0) {
    // log-space power correction keeps tiny shapes from underflowing to 0 too early
    const double g = gamma_unit_large_shape(shape + 1.0, rng);
    const double log_u = std::log(rng.uniform());
    return std::exp(std::log(g) + log_u / shape) / rate;
  }
  return gamma_unit_large_shape(shape, rng) / rate;
}

double sample_beta(double a, double b, RngStream& rng) {
  const double x = sample_gamma(a, 1.0, rng);
  const double y = sample_gamma(b, 1.0, rng);
  const double s = x + y;
  if (s <= 0.0) {
    // both underflowed; fall back on the ratio of the shapes
    return a / (a + b);
  }
  return x / s;
}

CategoricalTable::CategoricalTable(std::span<const double> weights) {
  cumulative_.reserve(weights.size());
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw ParameterError("categorical weights must be finite and nonnegative");
    }
    total += w;
    cumulative_.push_back(total);
  }
  if (!(total > 0.0)) throw ParameterError("categorical weights must have a positive entry");
}

std::size_t CategoricalTable::sample(RngStream& rng) const {
  const double target = rng.uniform() * cumulative_.back();
  // first strictly larger partial sum never lands on a zero-weight entry
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), target);
  if (it == cumulative_.end()) {
    it = std::lower_bound(cumulative_.begin(), cumulative_.end(), cumulative_.back());
  }
  return static_cast<std::size_t>(it - cumulative_.begin());
}

std::size_t sample_categorical(std::span<const double> weights, RngStream& rng) {
  return CategoricalTable(weights).sample(rng);
}

}  // namespace mcarsense
