#include "mcarsense/special.hpp"

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/expint.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <algorithm>
#include <string>
#include <utility>

#include "mcarsense/errors.hpp"

namespace mcarsense {

namespace {

void require_positive(double x, const char* name) {
  if (!(x > 0.0) || std::isnan(x)) {
    throw DomainError(std::string(name) + ": argument must be positive, got " + std::to_string(x));
  }
}

}  // namespace

double digamma(double x) {
  require_positive(x, "digamma");
  return boost::math::digamma(x);
}

double log_gamma(double x) {
  require_positive(x, "log_gamma");
  return boost::math::lgamma(x);
}

double exp_integral_e1(double x) {
  require_positive(x, "exp_integral_e1");
  if (x > 700.0) return 0.0;
  return boost::math::expint(1, x);
}

double exp_integral_e1_inverse(double value) {
  require_positive(value, "exp_integral_e1_inverse");
  // E1(y) = -gamma - log y + O(y): exact in double precision once y < 1e-17
  if (value > 40.0) return std::exp(-value - kEulerGamma);

  const double log_target = std::log(value);
  auto g = [&](double u) {
    const double y = std::exp(u);
    const double e1 = exp_integral_e1(y);
    return std::pair{std::log(e1) - log_target, -std::exp(-y) / e1};
  };

  double u = value >= 1.0 ? -value - kEulerGamma : std::log(-std::log(value) + 1e-3);
  double lo = u - 1.0;
  double hi = u + 1.0;
  while (g(lo).first < 0.0) lo -= 2.0;
  while (g(hi).first > 0.0) hi += 1.0;
  u = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    const auto [f, df] = g(u);
    if (f > 0.0) lo = u; else hi = u;
    double next = u - f / df;
    if (!(next > lo && next < hi) || !std::isfinite(next)) next = 0.5 * (lo + hi);
    if (std::abs(next - u) < 1e-15 * std::max(1.0, std::abs(u))) return std::exp(next);
    u = next;
  }
  return std::exp(u);
}

double softplus(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

double logistic_complement(double x) {
  if (x > 0.0) {
    const double e = std::exp(-x);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(x));
}

}  // namespace mcarsense
