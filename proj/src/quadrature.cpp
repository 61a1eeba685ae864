#include "mcarsense/quadrature.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <queue>
#include <string>
#include <vector>

#include "mcarsense/errors.hpp"

namespace mcarsense {

namespace {

using Rule = boost::math::quadrature::gauss_kronrod<double, 21>;

struct Panel {
  double lower;
  double upper;
  double value;
  double error;
  bool operator<(const Panel& other) const { return error < other.error; }
};

Panel evaluate_panel(const Integrand& f, double lower, double upper) {
  const double half = 0.5 * (upper - lower);
  const double mid = 0.5 * (upper + lower);
  auto mapped = [&](double x) {
    const double v = f(mid + half * x);
    if (!std::isfinite(v)) {
      throw NumericError("quadrature: integrand is not finite at " + std::to_string(mid + half * x));
    }
    return v;
  };
  double error = 0.0;
  // depth 0: a single 21-point panel on [-1, 1], error = |K21 - G10|
  const double value = Rule::integrate(mapped, -1.0, 1.0, 0, 1.0, &error);
  return {lower, upper, value * half, error * std::abs(half)};
}

}  // namespace

void QuadratureSpec::validate() const {
  if (!(abs_tol > 0.0) || !(rel_tol > 0.0)) {
    throw ParameterError("QuadratureSpec: tolerances must be positive");
  }
  if (max_subdivisions < 1) throw ParameterError("QuadratureSpec: max_subdivisions must be >= 1");
}

QuadratureResult integrate_interval(const Integrand& f, double lower, double upper,
                                    const QuadratureSpec& spec) {
  spec.validate();
  if (lower == upper) return {};

  std::priority_queue<Panel> panels;
  panels.push(evaluate_panel(f, lower, upper));
  double total = panels.top().value;
  double error = panels.top().error;
  int subdivisions = 0;

  auto converged = [&] { return error <= std::max(spec.abs_tol, spec.rel_tol * std::abs(total)); };

  while (!converged()) {
    if (subdivisions >= spec.max_subdivisions) {
      throw AccuracyError("quadrature: tolerance not reached within " +
                              std::to_string(spec.max_subdivisions) + " subdivisions",
                          total, error);
    }
    const Panel worst = panels.top();
    panels.pop();
    const double mid = 0.5 * (worst.lower + worst.upper);
    const Panel left = evaluate_panel(f, worst.lower, mid);
    const Panel right = evaluate_panel(f, mid, worst.upper);
    total += left.value + right.value - worst.value;
    error += left.error + right.error - worst.error;
    panels.push(left);
    panels.push(right);
    ++subdivisions;
    // running sums drift; refresh them from the panel list now and then
    if (subdivisions % 64 == 0) {
      auto copy = panels;
      total = 0.0;
      error = 0.0;
      while (!copy.empty()) {
        total += copy.top().value;
        error += copy.top().error;
        copy.pop();
      }
    }
  }
  return {total, error, subdivisions};
}

QuadratureResult integrate_semiline(const Integrand& f, const QuadratureSpec& spec) {
  auto mapped = [&f](double u) {
    const double one_minus = 1.0 - u;
    const double t = u / one_minus;
    return f(t) / (one_minus * one_minus);
  };
  return integrate_interval(mapped, 0.0, 1.0, spec);
}

}  // namespace mcarsense
